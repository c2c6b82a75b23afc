"""Command-line front end: `run` (paired experiments), `diff-trees`
(snapshot comparison), `bench-entropy` (estimator scaling table)."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .harness import (
    ExperimentSpec,
    bench_entropy,
    compare_trees,
    export_report,
    load_tree_snapshot,
    run_experiment,
)
from .lightdark import write_trajectory_csv


def _cmd_run(args) -> int:
    spec = ExperimentSpec.from_json(args.spec) if args.spec else ExperimentSpec()
    spec.verify = args.verify
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def sink(row_index: int, repetition: int, steps) -> None:
        if steps:
            write_trajectory_csv(out / f"trajectory_row{row_index}_rep{repetition}.csv", steps)

    report = run_experiment(spec, workers=args.workers, trajectory_sink=sink)
    export_report(report, out / "report.csv", out / "report.json")
    for s in report.summaries:
        print(
            f"({s.row[0]}, {s.row[1]}, {s.row[2]})  "
            f"pft-dpw {s.baseline_mean_s:.3f}±{s.baseline_stderr_s:.3f}s  "
            f"sith-pft {s.simplified_mean_s:.3f}±{s.simplified_stderr_s:.3f}s  "
            f"speedup {s.speedup:.3f}  consistent={s.consistent}"
        )
    print(f"report written to {out / 'report.csv'} and {out / 'report.json'}")
    return 0


def _cmd_diff_trees(args) -> int:
    equal, divergence = compare_trees(load_tree_snapshot(args.first), load_tree_snapshot(args.second))
    if equal:
        print("trees are identical")
        return 0
    print(f"trees diverge at {divergence}")
    return 1


def _cmd_bench_entropy(args) -> int:
    m_values = [int(v) for v in args.m.split(",")]
    rows = bench_entropy(m_values, levels=args.levels, repeats=args.repeats)
    print(f"{'m':>6}  {'full_ms':>10}  {'level1_ms':>10}  {'ratio_vs_prev':>13}")
    for row in rows:
        ratio = row.get("ratio_vs_prev")
        print(
            f"{row['m']:>6}  {row['t_full_s'] * 1e3:>10.3f}  {row['t_level1_s'] * 1e3:>10.3f}  "
            f"{ratio if ratio is None else f'{ratio:.2f}':>13}"
        )
    if args.json:
        Path(args.json).write_text(json.dumps(rows, indent=1))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sithpft", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run paired planner experiments from a spec file")
    run_p.add_argument("--spec", help="JSON experiment spec (default: one (50,30,200) row)")
    run_p.add_argument("--out", required=True, help="output directory for CSV/JSON reports")
    run_p.add_argument("--workers", type=int, default=1, help="parallel repetition workers")
    run_p.add_argument("--verify", action=argparse.BooleanOptionalAction, default=True,
                       help="verify tree/action consistency per session (--no-verify to disable)")
    run_p.set_defaults(func=_cmd_run)

    diff_p = sub.add_parser("diff-trees", help="compare two tree snapshot JSON files")
    diff_p.add_argument("first")
    diff_p.add_argument("second")
    diff_p.set_defaults(func=_cmd_diff_trees)

    bench_p = sub.add_parser("bench-entropy", help="time the entropy estimator across particle counts")
    bench_p.add_argument("--m", default="100,200,400", help="comma-separated particle counts")
    bench_p.add_argument("--levels", type=int, default=4, help="simplification levels for the init timing")
    bench_p.add_argument("--repeats", type=int, default=5, help="min-of-N timing repeats")
    bench_p.add_argument("--json", help="also dump the table as JSON")
    bench_p.set_defaults(func=_cmd_bench_entropy)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
