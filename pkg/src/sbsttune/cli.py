"""Command-line entry point: ``sbsttune <subcommand> ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import _accel
from .experiment import (
    SPLITS,
    ExperimentError,
    cmd_compare,
    cmd_run,
    cmd_suite_generate,
    cmd_trace_export,
    cmd_tune,
    load_manifest,
)
from .subject import SubjectParams

_logger = logging.getLogger("sbsttune")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError(f"{text} is not an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sbsttune", description="Search-based test generation tuning workbench.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    suite = sub.add_parser("suite", help="subject suites").add_subparsers(dest="suite_command", required=True)
    gen = suite.add_parser("generate", help="write a seeded suite of synthetic subjects")
    gen.add_argument("--count", type=int, required=True)
    gen.add_argument("--seed", type=_u64, default=0)
    gen.add_argument("--out", type=Path, required=True, help="suite JSON file to write")
    defaults = SubjectParams()
    gen.add_argument("--roots", type=int, default=defaults.roots)
    gen.add_argument("--max-depth", type=int, default=defaults.max_depth)
    gen.add_argument("--child-prob", type=float, default=defaults.child_prob)
    gen.add_argument("--slot-span", type=int, default=defaults.slot_span)
    gen.add_argument("--const-min", type=int, default=defaults.const_range[0])
    gen.add_argument("--const-max", type=int, default=defaults.const_range[1])

    def manifest_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--manifest", type=Path, required=True)
        p.add_argument("--seed", type=_u64, default=None, help="override the manifest master seed")
        p.add_argument("--jobs", type=_positive_int, default=1, help="worker processes")
        p.add_argument("--wall-clock", type=float, default=None, metavar="SECONDS",
                       help="per-run time budget instead of evaluations (not reproducible)")

    run = sub.add_parser("run", help="run one configuration over the suite")
    manifest_flags(run)
    source = run.add_mutually_exclusive_group(required=True)
    source.add_argument("--preset", help="named configuration")
    source.add_argument("--config", type=Path, help="configuration JSON or tuning result file")
    run.add_argument("--label", help="output directory name (default: preset or file name)")
    run.add_argument("--split", choices=SPLITS, default=None, help="subjects to run on (default: manifest run_split)")

    tune = sub.add_parser("tune", help="run the manifest's tuning campaign on the training split")
    manifest_flags(tune)

    compare = sub.add_parser("compare", help="compare run directories against the first one")
    compare.add_argument("runs", nargs="+", type=Path, help="run directories; the first is the baseline")
    compare.add_argument("--alpha", type=float, default=0.05)
    compare.add_argument("--out", type=Path, required=True, help="output prefix for .csv and .json")
    compare.add_argument("--labels", nargs="+", default=None)

    trace = sub.add_parser("trace", help="coverage-over-budget data").add_subparsers(dest="trace_command", required=True)
    export = trace.add_parser("export", help="mean coverage curve per run directory as CSV")
    export.add_argument("runs", nargs="+", type=Path)
    export.add_argument("--out", type=Path, required=True)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(message)s", datefmt="%H:%M:%S")
    _logger.info("kernel backend: %s", _accel.BACKEND)
    try:
        if args.command == "suite":
            params = SubjectParams(args.roots, args.max_depth, args.child_prob, args.slot_span,
                                   (args.const_min, args.const_max))
            subjects = cmd_suite_generate(args.count, args.seed, args.out, params)
            for s in subjects:
                print(f"{s.id}\t{s.n_goals} goals")
        elif args.command == "run":
            manifest = load_manifest(args.manifest, args.seed, args.wall_clock)
            out = cmd_run(manifest, args.preset or args.config, args.label, args.jobs, args.split)
            print(out)
        elif args.command == "tune":
            manifest = load_manifest(args.manifest, args.seed, args.wall_clock)
            for path in cmd_tune(manifest, args.jobs):
                print(path)
        elif args.command == "compare":
            table = cmd_compare(args.runs, args.alpha, args.out, args.labels)
            for row in table.rows:
                flag = "*" if row.coverage.significant else " "
                print(f"{row.configuration}\tcoverage {row.coverage.mean_a:.4f}\tA12 {row.coverage.a12:.3f}"
                      f"\tp {row.coverage.p_value:.4g}{flag}")
        elif args.command == "trace":
            print(cmd_trace_export(args.runs, args.out))
    except ExperimentError as exc:
        print(f"sbsttune: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
