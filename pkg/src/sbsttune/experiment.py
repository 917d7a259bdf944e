"""Manifest-driven experiments: suites, runs, tuning campaigns and reports.

Everything an experiment produces is a function of its manifest, the suite
file it names and the code version. Output files carry the manifest digest so
results can be traced back to the manifest that produced them.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .param_space import PRESETS, Configuration, ParamSpace, grid_enumerate, space_for
from .seeding import MASK64, RandomSource, derive_seed, digest64
from .stats import CSV_HEADER, ComparisonRow, ComparisonTable, mann_whitney_u, relative_coverage
from .subject import Subject, SubjectParams, dump_suite, generate_subject, load_suite
from .tuner import (
    CANONICAL_OBJECTIVES,
    RUNNERS,
    Cell,
    DESettings,
    EvaluationRecord,
    Objective,
    TuningTask,
    config_digest,
    de_tune,
    grid_records_csv,
    grid_subset,
    grid_tune,
    iter_cells,
    select_best,
)

__all__ = [
    "ExperimentError",
    "ExperimentManifest",
    "TunerBlock",
    "RunRecord",
    "derive_seed",
    "split_suite",
    "load_manifest",
    "cmd_suite_generate",
    "cmd_run",
    "cmd_tune",
    "cmd_compare",
    "cmd_trace_export",
]

_logger = logging.getLogger(__name__)

SPLITS = ("all", "train", "test")


class ExperimentError(Exception):
    """Invalid experiment input; reported by the CLI without a traceback."""


def _dumps(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _hex(value: int) -> str:
    return f"{value:016x}"


def _check_seed(value: Any, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value <= MASK64:
        raise ExperimentError(f"{what} must be an unsigned 64-bit integer, got {value!r}")
    return value


# -- manifest --------------------------------------------------------------------


@dataclass(frozen=True)
class TunerBlock:
    kind: str
    seed: int = 0
    repetitions: int = 5
    de: DESettings = field(default_factory=DESettings)
    subset: int | None = None
    subset_seed: int = 0

    def to_json(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"kind": self.kind, "seed": self.seed, "repetitions": self.repetitions}
        if self.kind == "de":
            doc.update(self.de.to_json())
        else:
            doc.update({"subset": self.subset, "subset_seed": self.subset_seed})
        return doc

    @classmethod
    def from_json(cls, doc: Mapping[str, Any], default_seed: int) -> TunerBlock:
        kind = doc.get("kind")
        if kind not in ("de", "grid"):
            raise ExperimentError(f"tuner kind must be 'de' or 'grid', got {kind!r}")
        reps = int(doc.get("repetitions", 5))
        if reps < 1:
            raise ExperimentError("tuner repetitions must be >= 1")
        seed = _check_seed(doc.get("seed", default_seed), "tuner seed")
        if kind == "de":
            try:
                settings = DESettings.from_json(doc)
            except ValueError as exc:
                raise ExperimentError(str(exc)) from None
            return cls(kind, seed, reps, de=settings)
        subset = doc.get("subset")
        if subset is not None and int(subset) < 1:
            raise ExperimentError("grid subset size must be >= 1")
        return cls(kind, seed, reps, subset=None if subset is None else int(subset),
                   subset_seed=_check_seed(doc.get("subset_seed", 0), "subset_seed"))


@dataclass(frozen=True)
class ExperimentManifest:
    suite: Path
    seed: int = 0
    split_ratio: float = 0.8
    split_seed: int = 0
    algorithm: str = "dynamosa"
    repetitions: int = 15
    budget: int = 2000
    checkpoints: int = 64
    tuner: TunerBlock | None = None
    objectives: tuple[Objective, ...] = CANONICAL_OBJECTIVES
    output: Path = Path("results")
    run_split: str = "all"
    wall_clock: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.split_ratio < 1.0:
            raise ExperimentError("split_ratio must lie strictly between 0 and 1")
        if self.repetitions < 1:
            raise ExperimentError("repetitions must be >= 1")
        if self.budget < 1:
            raise ExperimentError("budget must be >= 1")
        if self.checkpoints < 2:
            raise ExperimentError("checkpoints must be >= 2")
        if self.algorithm not in RUNNERS:
            raise ExperimentError(f"unknown algorithm {self.algorithm!r}; choose from {sorted(RUNNERS)}")
        if self.run_split not in SPLITS:
            raise ExperimentError(f"run_split must be one of {SPLITS}")
        if not self.objectives:
            raise ExperimentError("at least one objective is required")
        if self.wall_clock is not None and self.wall_clock <= 0:
            raise ExperimentError("wall_clock must be positive")
        _check_seed(self.seed, "seed")
        _check_seed(self.split_seed, "split_seed")

    def to_json(self) -> dict[str, Any]:
        """Everything that influences results. Output location is left out on purpose."""
        return {
            "suite_sha256": hashlib.sha256(self.suite.read_bytes()).hexdigest(),
            "seed": self.seed,
            "split_ratio": self.split_ratio,
            "split_seed": self.split_seed,
            "algorithm": self.algorithm,
            "repetitions": self.repetitions,
            "budget": self.budget,
            "checkpoints": self.checkpoints,
            "tuner": None if self.tuner is None else self.tuner.to_json(),
            "objectives": [[o.alpha, o.beta] for o in self.objectives],
            "run_split": self.run_split,
            "wall_clock": self.wall_clock,
        }

    def digest(self) -> str:
        text = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def load_subjects(self) -> list[Subject]:
        try:
            return load_suite(self.suite.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ExperimentError(f"cannot read suite {self.suite}: {exc}") from None


def load_manifest(path: str | Path, seed: int | None = None, wall_clock: float | None = None) -> ExperimentManifest:
    """Read a manifest JSON file; relative paths resolve against its directory."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ExperimentError(f"cannot read manifest {path}: {exc}") from None
    if not isinstance(doc, dict) or "suite" not in doc:
        raise ExperimentError("a manifest is a JSON object with at least a 'suite' entry")
    base = path.parent
    if not (base / doc["suite"]).is_file():
        raise ExperimentError(f"suite file {base / doc['suite']} does not exist")
    master = _check_seed(doc.get("seed", 0) if seed is None else seed, "seed")
    tuner = doc.get("tuner")
    objectives = doc.get("objectives")
    try:
        objs = CANONICAL_OBJECTIVES if objectives is None else tuple(Objective(float(a), float(b)) for a, b in objectives)
    except (TypeError, ValueError) as exc:
        raise ExperimentError(f"invalid objectives: {exc}") from None
    wall = doc.get("wall_clock") if wall_clock is None else wall_clock
    return ExperimentManifest(
        suite=base / doc["suite"],
        seed=master,
        split_ratio=float(doc.get("split_ratio", 0.8)),
        split_seed=doc.get("split_seed", 0),
        algorithm=doc.get("algorithm", "dynamosa"),
        repetitions=int(doc.get("repetitions", 15)),
        budget=int(doc.get("budget", 2000)),
        checkpoints=int(doc.get("checkpoints", 64)),
        tuner=None if tuner is None else TunerBlock.from_json(tuner, master),
        objectives=objs,
        output=base / doc.get("output", "results"),
        run_split=doc.get("run_split", "all"),
        wall_clock=None if wall is None else float(wall),
    )


# -- suites and splits -------------------------------------------------------------


def split_suite(suite: Sequence[Subject | str], ratio: float, seed: int) -> tuple[list[str], list[str]]:
    """Seeded shuffle, then the first ``ceil(ratio * n)`` ids train and the rest test.

    Both lists come back in suite order.
    """
    ids = [s if isinstance(s, str) else s.id for s in suite]
    if len(ids) < 2:
        raise ExperimentError("splitting needs at least two subjects")
    if not 0.0 < ratio < 1.0:
        raise ExperimentError("split ratio must lie strictly between 0 and 1")
    # exact decimal arithmetic: 0.7 * 10 must give 7, not 8
    n_train = math.ceil(Fraction(repr(ratio)) * len(ids))
    if n_train >= len(ids):
        raise ExperimentError(f"ratio {ratio} leaves no test subjects out of {len(ids)}")
    order = list(range(len(ids)))
    rng = RandomSource(seed)
    for i in range(len(order) - 1, 0, -1):
        j = rng.below(i + 1)
        order[i], order[j] = order[j], order[i]
    train = set(order[:n_train])
    return [ids[i] for i in range(len(ids)) if i in train], [ids[i] for i in range(len(ids)) if i not in train]


def cmd_suite_generate(count: int, seed: int, path: str | Path, params: SubjectParams | None = None) -> list[Subject]:
    """Write ``count`` seeded subjects named s000, s001, ... to ``path``."""
    if count < 1:
        raise ExperimentError("--count must be >= 1")
    _check_seed(seed, "seed")
    params = params or SubjectParams()
    try:
        params.validate()
    except ValueError as exc:
        raise ExperimentError(str(exc)) from None
    width = max(3, len(str(count - 1)))
    subjects = [generate_subject(derive_seed(seed, 0, i, 0), params, f"s{i:0{width}d}") for i in range(count)]
    try:
        _write(Path(path), dump_suite(subjects))
    except OSError as exc:
        raise ExperimentError(f"cannot write suite {path}: {exc}") from None
    return subjects


def _select_subjects(manifest: ExperimentManifest, split: str) -> list[Subject]:
    subjects = manifest.load_subjects()
    if split != "all":
        train, test = split_suite(subjects, manifest.split_ratio, manifest.split_seed)
        wanted = set(train if split == "train" else test)
        subjects = [s for s in subjects if s.id in wanted]
    return sorted(subjects, key=lambda s: s.id)


# -- runs ----------------------------------------------------------------------------


@dataclass(frozen=True)
class RunRecord:
    subject: str
    config_digest: str
    repetition: int
    seed: int
    coverage: float
    auc: float
    evaluations: int
    trace: str = "traces.csv"

    def to_json(self, manifest_digest: str, algorithm: str) -> dict[str, Any]:
        return {
            "manifest": manifest_digest,
            "algorithm": algorithm,
            "subject": self.subject,
            "config_digest": self.config_digest,
            "repetition": self.repetition,
            "seed": self.seed,
            "coverage": self.coverage,
            "auc": self.auc,
            "evaluations": self.evaluations,
            "trace": self.trace,
        }

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> RunRecord:
        return cls(doc["subject"], doc["config_digest"], int(doc["repetition"]), int(doc["seed"]),
                   float(doc["coverage"]), float(doc["auc"]), int(doc["evaluations"]), doc.get("trace", "traces.csv"))


def resolve_config(source: str | Path, algorithm: str) -> tuple[str, Configuration]:
    """A preset name, a configuration JSON file or a tuning result file."""
    space = space_for(algorithm)
    if isinstance(source, str) and source in PRESETS:
        config, label = PRESETS[source], source
    else:
        path = Path(source)
        if not path.is_file():
            raise ExperimentError(f"{source!r} is neither a preset nor a readable file; presets: {', '.join(sorted(PRESETS))}")
        doc = json.loads(path.read_text(encoding="utf-8"))
        doc = doc.get("best_config", doc)
        label = path.stem
        if doc.get("space") != space.id:
            raise ExperimentError(f"{path} holds a {doc.get('space')!r} configuration, manifest runs {algorithm!r}")
        try:
            config = space.config_from_json(doc)
        except ValueError as exc:
            raise ExperimentError(str(exc)) from None
    if config.space_id != space.id:
        raise ExperimentError(f"configuration {label!r} is for {config.space_id!r}, manifest runs {algorithm!r}")
    return label, config


def _cell_to_partial(cell: Cell) -> str:
    return json.dumps(
        {"subject": cell.subject_id, "repetition": cell.repetition, "seed": cell.seed, "coverage": cell.coverage,
         "auc": cell.auc, "evaluations": cell.evaluations, "trace": [list(p) for p in cell.trace]},
        sort_keys=True, separators=(",", ":"),
    ) + "\n"


def _cell_from_partial(line: str) -> Cell:
    d = json.loads(line)
    return Cell(d["subject"], d["repetition"], d["seed"], d["coverage"], d["auc"], d["evaluations"],
                tuple((f, c) for f, c in d["trace"]))


def _read_partial(out: Path, manifest_digest: str, cdigest: str, n_jobs: int) -> list[Cell]:
    marker, partial = out / "RESUME", out / "runs.jsonl.partial"
    if not marker.is_file() or not partial.is_file():
        return []
    info = json.loads(marker.read_text(encoding="utf-8"))
    if info.get("manifest") != manifest_digest or info.get("config_digest") != cdigest:
        _logger.warning("ignoring resume marker in %s: it belongs to a different manifest or configuration", out)
        return []
    text = partial.read_text(encoding="utf-8")
    lines = text.split("\n")[:-1]  # a trailing fragment without newline is discarded
    return [_cell_from_partial(x) for x in lines[:n_jobs]]


def cmd_run(
    manifest: ExperimentManifest,
    source: str | Path,
    label: str | None = None,
    workers: int = 1,
    split: str | None = None,
) -> Path:
    """Run one configuration on the selected subjects; returns the output directory.

    A failure leaves ``runs.jsonl.partial`` and a ``RESUME`` marker behind; an
    identical later invocation continues after the last completed run.
    """
    split = split or manifest.run_split
    if split not in SPLITS:
        raise ExperimentError(f"split must be one of {SPLITS}")
    name, config = resolve_config(source, manifest.algorithm)
    label = label or name
    if manifest.wall_clock is None and config.get("population_size", 1) > manifest.budget:
        raise ExperimentError(f"budget {manifest.budget} is below the population size {config['population_size']}")
    subjects = _select_subjects(manifest, split)
    task = TuningTask(manifest.algorithm, subjects, manifest.repetitions, manifest.budget, manifest.checkpoints,
                      workers, manifest.wall_clock)
    jobs = task.cell_jobs(config, manifest.seed)
    mdigest = manifest.digest()
    cdigest = _hex(config_digest(config))
    out = manifest.output / "runs" / label
    out.mkdir(parents=True, exist_ok=True)

    cells = _read_partial(out, mdigest, cdigest, len(jobs))
    if cells:
        _logger.info("resuming %s after %d of %d runs", out, len(cells), len(jobs))
    partial = out / "runs.jsonl.partial"
    marker = out / "RESUME"
    with partial.open("w", encoding="utf-8") as fh:
        for c in cells:
            fh.write(_cell_to_partial(c))
        try:
            for cell in iter_cells(jobs[len(cells):], workers):
                cells.append(cell)
                fh.write(_cell_to_partial(cell))
                fh.flush()
        except BaseException as exc:
            fh.flush()
            _write(marker, _dumps({"manifest": mdigest, "config_digest": cdigest, "completed": len(cells),
                                   "total": len(jobs), "error": repr(exc)}))
            raise
    if len(cells) != len(jobs):
        raise ExperimentError(f"expected {len(jobs)} runs, got {len(cells)}")

    _write(out / "runs.jsonl", "".join(
        json.dumps(RunRecord(c.subject_id, cdigest, c.repetition, c.seed, c.coverage, c.auc, c.evaluations)
                   .to_json(mdigest, manifest.algorithm), sort_keys=True, separators=(",", ":")) + "\n"
        for c in cells))
    buf = io.StringIO()
    buf.write(f"# manifest {mdigest}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["subject", "repetition", "budget_fraction", "coverage"])
    for c in cells:
        for f, cov in c.trace:
            writer.writerow([c.subject_id, c.repetition, repr(f), repr(cov)])
    _write(out / "traces.csv", buf.getvalue())
    _write(out / "config.json", _dumps({
        "manifest": mdigest,
        "label": label,
        "algorithm": manifest.algorithm,
        "config": config.to_json(),
        "config_digest": cdigest,
        "split": split,
        "subjects": [s.id for s in subjects],
        "repetitions": manifest.repetitions,
        "budget": manifest.budget,
        "checkpoints": manifest.checkpoints,
        "wall_clock": manifest.wall_clock,
    }))
    partial.unlink()
    marker.unlink(missing_ok=True)
    return out


# -- tuning ----------------------------------------------------------------------------


def _objective_tag(obj: Objective) -> str:
    return obj.label.replace("+", "_")


def cmd_tune(manifest: ExperimentManifest, workers: int = 1) -> list[Path]:
    """Tune on the training split. Result files already written for this manifest are kept."""
    tuner = manifest.tuner
    if tuner is None:
        raise ExperimentError("the manifest has no tuner block")
    subjects = _select_subjects(manifest, "train")
    space = space_for(manifest.algorithm)
    if "population_size" in space.names and manifest.wall_clock is None:
        largest = space.spec("population_size").bounds()[1]
        if manifest.budget < largest:
            raise ExperimentError(f"budget {manifest.budget} is below the largest tunable population size {largest:g}")
    mdigest = manifest.digest()
    out = manifest.output / "tune"
    common = {
        "manifest": mdigest,
        "algorithm": manifest.algorithm,
        "tuner": tuner.to_json(),
        "train_subjects": [s.id for s in subjects],
        "budget": manifest.budget,
        "checkpoints": manifest.checkpoints,
    }

    def fresh_task() -> TuningTask:
        return TuningTask(manifest.algorithm, subjects, tuner.repetitions, manifest.budget, manifest.checkpoints,
                          workers, manifest.wall_clock)

    def done(path: Path) -> bool:
        if not path.is_file():
            return False
        try:
            return json.loads(path.read_text(encoding="utf-8")).get("manifest") == mdigest
        except json.JSONDecodeError:
            return False

    written: list[Path] = []
    if tuner.kind == "de":
        for obj in manifest.objectives:
            path = out / f"de_{_objective_tag(obj)}.json"
            if not done(path):
                # each objective is an independent campaign with its own cache and counter
                task = fresh_task()
                rng = RandomSource(derive_seed(tuner.seed, digest64(f"de:{obj.label}"), 0, 0))
                result = de_tune(space, task, obj, tuner.de, rng, master_seed=tuner.seed)
                _write(path, _dumps({**common, **result.to_json()}))
                _logger.info("DE %s: best score %.6f after %d runs", obj.label, result.best_score, result.runs)
            written.append(path)
        return written

    records_path = out / "grid_records.json"
    csv_path = out / "grid_records.csv"
    if done(records_path):
        doc = json.loads(records_path.read_text(encoding="utf-8"))
        records = [_record_from_json(space, r) for r in doc["records"]]
        runs = doc["runs"]
    else:
        task = fresh_task()
        ids = None if tuner.subset is None else grid_subset(space, tuner.subset, tuner.subset_seed)
        records = grid_tune(space, task, tuner.seed, ids)
        runs = task.runs
        _write(records_path, _dumps({**common, "grid_size": len(grid_enumerate(space)), "runs": runs,
                                     "records": [r.to_json() for r in records]}))
        _write(csv_path, f"# manifest {mdigest}\n" + grid_records_csv(space, records, manifest.objectives))
    written += [records_path, csv_path]
    for obj in manifest.objectives:
        gid, config, score = select_best(records, obj)
        path = out / f"grid_best_{_objective_tag(obj)}.json"
        _write(path, _dumps({**common, "objective": [obj.alpha, obj.beta], "grid_id": gid,
                             "best_config": config.to_json(), "best_score": score, "runs": runs}))
        written.append(path)
    return written


def _record_from_json(space: ParamSpace, doc: Mapping[str, Any]) -> EvaluationRecord:
    cells = [Cell(c["subject"], c["repetition"], c["seed"], c["coverage"], c["auc"], c["evaluations"])
             for c in doc["cells"]]
    return EvaluationRecord(space.config_from_json(doc["config"]), cells, doc.get("grid_id"))


# -- reports ------------------------------------------------------------------------------


@dataclass
class RunSet:
    label: str
    manifest: str
    records: list[RunRecord]

    @property
    def subjects(self) -> set[str]:
        return {r.subject for r in self.records}


def load_run_set(directory: str | Path, label: str | None = None) -> RunSet:
    directory = Path(directory)
    try:
        meta = json.loads((directory / "config.json").read_text(encoding="utf-8"))
        lines = (directory / "runs.jsonl").read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ExperimentError(f"{directory} is not a complete run directory: {exc}") from None
    records = [RunRecord.from_json(json.loads(x)) for x in lines if x.strip()]
    return RunSet(label or meta["label"], meta["manifest"], records)


def _pooled(rs: RunSet) -> list[RunRecord]:
    return sorted(rs.records, key=lambda r: (r.subject, r.repetition))


def build_comparison(sets: Sequence[RunSet], alpha: float = 0.05) -> ComparisonTable:
    """Every set against the first one, on per-run values pooled over subjects and repetitions."""
    if len(sets) < 2:
        raise ExperimentError("comparison needs at least two result sets")
    labels = [s.label for s in sets]
    if len(set(labels)) != len(labels):
        raise ExperimentError(f"duplicate result set labels: {labels}")
    subjects = sets[0].subjects
    for s in sets[1:]:
        if s.subjects != subjects:
            raise ExperimentError(f"{s.label} covers subjects {sorted(s.subjects)}, {sets[0].label} covers {sorted(subjects)}")
    if not 0.0 < alpha < 1.0:
        raise ExperimentError("alpha must lie strictly between 0 and 1")

    matrix: dict[str, dict[str, float]] = {}
    for s in sets:
        by_subject: dict[str, list[float]] = {}
        for r in s.records:
            by_subject.setdefault(r.subject, []).append(r.coverage)
        matrix[s.label] = {k: math.fsum(v) / len(v) for k, v in by_subject.items()}
    mean_rel = relative_coverage(matrix)

    # per-run relative coverage: min-max over every run of every set on that subject
    lo: dict[str, float] = {}
    hi: dict[str, float] = {}
    for s in sets:
        for r in s.records:
            lo[r.subject] = min(lo.get(r.subject, r.coverage), r.coverage)
            hi[r.subject] = max(hi.get(r.subject, r.coverage), r.coverage)

    def rel(r: RunRecord) -> float:
        span = hi[r.subject] - lo[r.subject]
        return 1.0 if span == 0 else (r.coverage - lo[r.subject]) / span

    base = _pooled(sets[0])
    base_cov = [r.coverage for r in base]
    base_rel = [rel(r) for r in base]
    rows = []
    for s in sets:
        runs = _pooled(s)
        rows.append(ComparisonRow(
            configuration=s.label,
            coverage=mann_whitney_u([r.coverage for r in runs], base_cov, alpha),
            mean_relative=mean_rel[s.label],
            relative=mann_whitney_u([rel(r) for r in runs], base_rel, alpha),
        ))
    return ComparisonTable(
        baseline=sets[0].label,
        rows=rows,
        alpha=alpha,
        metadata={
            "manifests": {s.label: s.manifest for s in sets},
            "pooling": "per-run values pooled over subjects and repetitions",
            "pooling_alternative": "per-subject means first (not used)",
            "relative_coverage_set": labels,
            "subjects": sorted(subjects),
        },
    )


def comparison_csv(table: ComparisonTable) -> str:
    buf = io.StringIO()
    for label, digest in table.metadata["manifests"].items():
        buf.write(f"# manifest {label} {digest}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in table.rows:
        writer.writerow(row.csv_row())
    return buf.getvalue()


def comparison_json(table: ComparisonTable) -> dict[str, Any]:
    def report(r) -> dict[str, Any]:
        return {"mean": r.mean_a, "baseline_mean": r.mean_b, "a12": r.a12, "u_statistic": r.u_statistic,
                "p_value": r.p_value, "significant": r.significant, "degenerate": r.degenerate}

    return {
        "baseline": table.baseline,
        "alpha": table.alpha,
        "columns": CSV_HEADER,
        "rows": [{"configuration": row.configuration, "coverage": report(row.coverage),
                  "mean_relative_coverage": row.mean_relative, "relative_coverage": report(row.relative)}
                 for row in table.rows],
        "metadata": table.metadata,
    }


def cmd_compare(run_dirs: Sequence[str | Path], alpha: float = 0.05, out: str | Path | None = None,
                labels: Sequence[str] | None = None) -> ComparisonTable:
    """Compare run directories against the first; writes ``<out>.csv`` and ``<out>.json`` if ``out`` is set."""
    if labels is not None and len(labels) != len(run_dirs):
        raise ExperimentError("give one label per run directory")
    sets = [load_run_set(d, None if labels is None else labels[i]) for i, d in enumerate(run_dirs)]
    table = build_comparison(sets, alpha)
    if out is not None:
        out = Path(out)
        _write(out.with_suffix(".csv"), comparison_csv(table))
        _write(out.with_suffix(".json"), _dumps(comparison_json(table)))
    return table


def mean_traces(directory: str | Path) -> list[tuple[float, float]]:
    """Mean coverage per budget fraction over every (subject, repetition) trace of a run directory."""
    path = Path(directory) / "traces.csv"
    try:
        lines = [x for x in path.read_text(encoding="utf-8").splitlines() if not x.startswith("#")]
    except OSError as exc:
        raise ExperimentError(f"cannot read {path}: {exc}") from None
    by_fraction: dict[float, list[float]] = {}
    for row in csv.DictReader(lines):
        by_fraction.setdefault(float(row["budget_fraction"]), []).append(float(row["coverage"]))
    return [(f, math.fsum(v) / len(v)) for f, v in sorted(by_fraction.items())]


def cmd_trace_export(run_dirs: Iterable[str | Path], out: str | Path) -> Path:
    """Plot data: one mean coverage-over-budget curve per run directory."""
    buf = io.StringIO()
    rows = []
    for d in run_dirs:
        rs = load_run_set(d)
        buf.write(f"# manifest {rs.label} {rs.manifest}\n")
        rows.extend((rs.label, f, c) for f, c in mean_traces(d))
    if not rows:
        raise ExperimentError("no run directories given")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["configuration", "budget_fraction", "mean_coverage"])
    for label, f, c in rows:
        writer.writerow([label, repr(f), repr(c)])
    out = Path(out)
    _write(out, buf.getvalue())
    return out
