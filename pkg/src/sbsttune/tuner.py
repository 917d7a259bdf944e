"""Hyperparameter tuners: differential evolution and grid search.

A tuner scores a configuration by running the target algorithm on every
training subject for a number of repetitions and combining mean final
coverage and mean area under the coverage curve with an :class:`Objective`.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Mapping, Protocol, Sequence

from .dynamosa import run_dynamosa
from .mio import run_mio
from .param_space import (
    DEFAULT_PRESET,
    Categorical,
    Configuration,
    ParamSpace,
    decode_vector,
    encode_config,
    grid_enumerate,
    preset,
    space_for,
)
from .seeding import RandomSource, derive_seed, digest64
from .subject import Subject
from .tracking import CoverageTrace

_logger = logging.getLogger(__name__)

RUNNERS = {"dynamosa": run_dynamosa, "mio": run_mio}


@dataclass(frozen=True)
class Objective:
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if self.alpha < 0 or self.beta < 0 or self.alpha + self.beta <= 0:
            raise ValueError(f"invalid objective weights ({self.alpha}, {self.beta})")

    @property
    def label(self) -> str:
        return f"{self.alpha:g}+{self.beta:g}"


CANONICAL_OBJECTIVES = tuple(Objective(a, b) for a, b in ((1, 0), (0, 1), (1, 1), (10, 1), (1, 10)))


def auc(trace: CoverageTrace | Sequence[tuple[float, float]]) -> float:
    """Trapezoidal area under coverage over budget fraction.

    The curve starts at ``(0, 0)`` and is held constant up to fraction 1.
    """
    points = list(trace.points if isinstance(trace, CoverageTrace) else trace)
    if not points:
        return 0.0
    if points[0][0] > 0.0:
        points.insert(0, (0.0, 0.0))
    if points[-1][0] < 1.0:
        points.append((1.0, points[-1][1]))
    area = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return min(max(area, 0.0), 1.0)


def config_digest(config: Configuration) -> int:
    """64-bit digest of the canonical form, so irrelevant parameters do not change seeds."""
    return digest64(space_for(config.space_id).canonical(config).dumps())


@dataclass(frozen=True)
class Cell:
    subject_id: str
    repetition: int
    seed: int
    coverage: float
    auc: float
    evaluations: int
    trace: tuple[tuple[float, float], ...] = field(repr=False, default=())


@dataclass
class EvaluationRecord:
    config: Configuration
    cells: list[Cell]
    grid_id: int | None = None

    @property
    def mean_coverage(self) -> float:
        return _two_level_mean(self.cells, "coverage")

    @property
    def mean_auc(self) -> float:
        return _two_level_mean(self.cells, "auc")

    @property
    def evaluations(self) -> int:
        return sum(c.evaluations for c in self.cells)

    def to_json(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "config": self.config.to_json(),
            "mean_coverage": self.mean_coverage,
            "mean_auc": self.mean_auc,
            "evaluations": self.evaluations,
            "cells": [
                {
                    "subject": c.subject_id,
                    "repetition": c.repetition,
                    "seed": c.seed,
                    "coverage": c.coverage,
                    "auc": c.auc,
                    "evaluations": c.evaluations,
                }
                for c in self.cells
            ],
        }
        if self.grid_id is not None:
            doc["grid_id"] = self.grid_id
        return doc


def _two_level_mean(cells: Sequence[Cell], attr: str) -> float:
    """Mean over repetitions within each subject, then over subjects."""
    by_subject: dict[str, list[float]] = {}
    for c in cells:
        by_subject.setdefault(c.subject_id, []).append(getattr(c, attr))
    if not by_subject:
        return 0.0
    # sorted so the float sum does not depend on subject order
    return math.fsum(math.fsum(v) / len(v) for _, v in sorted(by_subject.items())) / len(by_subject)


def objective_score(record: EvaluationRecord, obj: Objective) -> float:
    return obj.alpha * record.mean_coverage + obj.beta * record.mean_auc


# -- running cells ---------------------------------------------------------------


def run_cell(algorithm: str, subject: Subject, values: Mapping[str, Any], budget: int, checkpoints: int, seed: int,
             repetition: int = 0, wall_clock: float | None = None) -> Cell:
    result = RUNNERS[algorithm](subject, values, budget, checkpoints, RandomSource(seed), wall_clock=wall_clock)
    return Cell(
        subject_id=subject.id,
        repetition=repetition,
        seed=seed,
        coverage=result.coverage,
        auc=auc(result.trace),
        evaluations=result.evaluations_used,
        trace=result.trace.points,
    )


def _run_cell_args(args: tuple) -> Cell:
    return run_cell(*args)


def iter_cells(jobs: Sequence[tuple], workers: int = 1) -> Iterator[Cell]:
    """Run ``run_cell`` argument tuples, yielding results in input order."""
    if workers <= 1 or len(jobs) <= 1:
        for j in jobs:
            yield _run_cell_args(j)
        return
    chunk = max(1, len(jobs) // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(_run_cell_args, jobs, chunksize=chunk)


def run_cells(jobs: Sequence[tuple], workers: int = 1) -> list[Cell]:
    return list(iter_cells(jobs, workers))


class Evaluator(Protocol):
    """Anything that scores a batch of configurations (algorithm runs or a surrogate)."""

    def evaluate_many(self, configs: Sequence[Configuration], master_seed: int) -> list[EvaluationRecord]: ...


@dataclass
class TuningTask:
    algorithm: str
    subjects: Sequence[Subject]
    repetitions: int = 5
    budget: int = 2000
    checkpoints: int = 64
    workers: int = 1
    wall_clock: float | None = None
    runs: int = field(default=0, init=False)
    _cache: dict[tuple[int, int], EvaluationRecord] = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self) -> None:
        if self.algorithm not in RUNNERS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if not self.subjects:
            raise ValueError("a tuning task needs at least one subject")

    @property
    def space(self) -> ParamSpace:
        return space_for(self.algorithm)

    def cell_jobs(self, config: Configuration, master_seed: int) -> list[tuple]:
        digest = config_digest(config)
        values = dict(config)
        jobs = []
        for subject in self.subjects:
            sid = digest64(subject.id)
            for rep in range(self.repetitions):
                seed = derive_seed(master_seed, digest, sid, rep)
                jobs.append((self.algorithm, subject, values, self.budget, self.checkpoints, seed, rep, self.wall_clock))
        return jobs

    def evaluate_many(self, configs: Sequence[Configuration], master_seed: int) -> list[EvaluationRecord]:
        """Evaluate configurations; canonically equal ones share one evaluation."""
        space = self.space
        configs = [space.validate(c) for c in configs]
        pending: dict[tuple[int, int], Configuration] = {}
        for c in configs:
            key = (master_seed, config_digest(c))
            if key not in self._cache and key not in pending:
                pending[key] = c
        jobs: list[tuple] = []
        spans: list[tuple[tuple[int, int], int, int]] = []
        for key, c in pending.items():
            cj = self.cell_jobs(c, master_seed)
            spans.append((key, len(jobs), len(jobs) + len(cj)))
            jobs.extend(cj)
        cells = run_cells(jobs, self.workers)
        self.runs += len(jobs)
        for key, lo, hi in spans:
            self._cache[key] = EvaluationRecord(pending[key], cells[lo:hi])
        return [EvaluationRecord(c, self._cache[(master_seed, config_digest(c))].cells) for c in configs]


def evaluate_config(task: TuningTask, config: Configuration, master_seed: int) -> EvaluationRecord:
    return task.evaluate_many([config], master_seed)[0]


# -- differential evolution ------------------------------------------------------


@dataclass(frozen=True)
class DESettings:
    pop_size: int = 8
    strategy: str = "best-1-bin"
    scale: float | tuple[float, float] = (0.5, 1.0)
    cross_prob: float = 0.7
    generations: int = 12
    include_default: bool = True

    def __post_init__(self) -> None:
        if self.pop_size < 4:
            raise ValueError("pop_size must be >= 4")
        if self.strategy not in ("rand-1-bin", "best-1-bin"):
            raise ValueError(f"unknown DE strategy {self.strategy!r}")
        if isinstance(self.scale, tuple):
            lo, hi = self.scale
            if not 0.0 < lo < hi <= 2.0:
                raise ValueError(f"invalid dither interval {self.scale}")
        elif not 0.0 < self.scale < 2.0:
            raise ValueError(f"invalid scale factor {self.scale}")
        if not 0.0 <= self.cross_prob <= 1.0:
            raise ValueError("cross_prob must lie in [0, 1]")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")

    def to_json(self) -> dict[str, Any]:
        return {
            "pop_size": self.pop_size,
            "strategy": self.strategy,
            "scale": list(self.scale) if isinstance(self.scale, tuple) else self.scale,
            "cross_prob": self.cross_prob,
            "generations": self.generations,
            "include_default": self.include_default,
        }

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> DESettings:
        scale = doc.get("scale", (0.5, 1.0))
        return cls(
            pop_size=int(doc.get("pop_size", 8)),
            strategy=doc.get("strategy", "best-1-bin"),
            scale=tuple(scale) if isinstance(scale, (list, tuple)) else float(scale),
            cross_prob=float(doc.get("cross_prob", 0.7)),
            generations=int(doc.get("generations", 12)),
            include_default=bool(doc.get("include_default", True)),
        )


@dataclass
class GenerationRecord:
    generation: int
    best_score: float
    scores: list[float]


@dataclass
class TuningResult:
    best_config: Configuration
    best_score: float
    history: list[GenerationRecord]
    runs: int
    objective: Objective | None = None
    best_record: EvaluationRecord | None = None

    def to_json(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "best_config": self.best_config.to_json(),
            "best_score": self.best_score,
            "runs": self.runs,
            "history": [{"generation": h.generation, "best_score": h.best_score, "scores": h.scores} for h in self.history],
        }
        if self.objective is not None:
            doc["objective"] = [self.objective.alpha, self.objective.beta]
        if self.best_record is not None:
            doc["best_mean_coverage"] = self.best_record.mean_coverage
            doc["best_mean_auc"] = self.best_record.mean_auc
        return doc


def de_offspring(x_r: Sequence[float], x_s: Sequence[float], x_t: Sequence[float], scale: float) -> list[float]:
    """``x_t + scale * (x_r - x_s)``, componentwise."""
    if not len(x_r) == len(x_s) == len(x_t):
        raise ValueError("DE donor vectors must have equal dimension")
    return [t + scale * (r - s) for r, s, t in zip(x_r, x_s, x_t)]


def _clip(vector: list[float], bounds: Sequence[tuple[float, float]], space: ParamSpace) -> list[float]:
    out = []
    for x, (lo, hi), spec in zip(vector, bounds, space.specs):
        if isinstance(spec.domain, Categorical):
            hi = math.nextafter(hi, lo)  # categorical coordinates live in [0, k)
        out.append(min(max(x, lo), hi))
    return out


def de_tune(
    space: ParamSpace,
    task: Evaluator,
    obj: Objective,
    settings: DESettings,
    rng: RandomSource,
    master_seed: int = 0,
    default: Configuration | None = None,
) -> TuningResult:
    """Maximise ``objective_score`` with synchronous differential evolution."""
    bounds = space.bounds()
    dim = space.dimension
    pop: list[list[float]] = [
        _clip([lo + rng.random() * (hi - lo) for lo, hi in bounds], bounds, space) for _ in range(settings.pop_size)
    ]
    if settings.include_default:
        default = default or preset(DEFAULT_PRESET[space.id])
        pop[0] = encode_config(space, default)

    def score_all(vectors: list[list[float]]) -> list[tuple[float, EvaluationRecord]]:
        configs = [decode_vector(space, v) for v in vectors]
        records = task.evaluate_many(configs, master_seed)
        return [(objective_score(r, obj), r) for r in records]

    scored = score_all(pop)
    scores = [s for s, _ in scored]
    records = [r for _, r in scored]
    best = max(range(len(pop)), key=lambda i: (scores[i], -i))
    history = [GenerationRecord(0, scores[best], list(scores))]

    for gen in range(1, settings.generations + 1):
        scale = settings.scale
        if isinstance(scale, tuple):
            scale = scale[0] + rng.random() * (scale[1] - scale[0])
        trials: list[list[float]] = []
        for i in range(settings.pop_size):
            others = [j for j in range(settings.pop_size) if j != i]
            if settings.strategy == "best-1-bin":
                base = pop[best]
                donors = [j for j in others if j != best]
                r, s = _pick_distinct(donors, 2, rng)
            else:
                r, s, t = _pick_distinct(others, 3, rng)
                base = pop[t]
            mutant = de_offspring(pop[r], pop[s], base, scale)
            forced = rng.below(dim)
            trial = [mutant[j] if (j == forced or rng.random() < settings.cross_prob) else pop[i][j] for j in range(dim)]
            trials.append(_clip(trial, bounds, space))
        trial_scored = score_all(trials)
        # synchronous replacement: applied after the whole generation is scored
        for i, (ts, tr) in enumerate(trial_scored):
            if ts >= scores[i]:
                pop[i], scores[i], records[i] = trials[i], ts, tr
        best = max(range(len(pop)), key=lambda i: (scores[i], -i))
        history.append(GenerationRecord(gen, scores[best], list(scores)))
        _logger.info("DE generation %d: best %.6f", gen, scores[best])

    return TuningResult(
        best_config=records[best].config,
        best_score=scores[best],
        history=history,
        runs=getattr(task, "runs", 0),
        objective=obj,
        best_record=records[best],
    )


def _pick_distinct(pool: list[int], k: int, rng: RandomSource) -> list[int]:
    pool = list(pool)
    out = []
    for _ in range(k):
        out.append(pool.pop(rng.below(len(pool))))
    return out


# -- grid search -------------------------------------------------------------------


def grid_tune(space: ParamSpace, task: Evaluator, master_seed: int, grid_ids: Iterable[int] | None = None) -> list[EvaluationRecord]:
    """Evaluate every grid configuration (or the given subset of grid ids) once."""
    grid = grid_enumerate(space)
    if grid_ids is not None:
        wanted = set(grid_ids)
        grid = [(gid, c) for gid, c in grid if gid in wanted]
    records = task.evaluate_many([c for _, c in grid], master_seed)
    for (gid, _), rec in zip(grid, records):
        rec.grid_id = gid
    return sorted(records, key=lambda r: r.grid_id)


def grid_subset(space: ParamSpace, size: int, seed: int) -> list[int]:
    """A seeded sample of ``size`` grid ids, ascending."""
    total = len(grid_enumerate(space))
    return sorted(RandomSource(seed).sample(range(1, total + 1), min(size, total)))


def select_best(records: Sequence[EvaluationRecord], obj: Objective) -> tuple[int | None, Configuration, float]:
    if not records:
        raise ValueError("no records to select from")
    best = max(records, key=lambda r: (objective_score(r, obj), -(r.grid_id or 0)))
    return best.grid_id, best.config, objective_score(best, obj)


def grid_records_csv(space: ParamSpace, records: Sequence[EvaluationRecord], objectives: Sequence[Objective]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["grid_id", *space.names, "mean_coverage", "mean_auc", *(f"score_{o.label}" for o in objectives)])
    for r in records:
        writer.writerow(
            [r.grid_id, *(r.config[n] for n in space.names), repr(r.mean_coverage), repr(r.mean_auc),
             *(repr(objective_score(r, o)) for o in objectives)]
        )
    return buf.getvalue()
