"""Command-line driver: run a scenario, sweep a grid, compare against a baseline.

Exit codes: 0 on success, 2 on configuration errors (bad JSON, schema or
topology violations, bad grid), 3 when a model invariant breaks mid-run.
"""

from __future__ import annotations

import argparse
import json
import sys

from .dynamics import InvariantError
from .runner import (
    baseline_of,
    read_delta_column,
    run_scenario,
    run_summary,
    sweep,
    write_run_csv,
    write_sweep_csv,
)
from .scenario import ScenarioError, load_scenario

EXIT_CONFIG = 2
EXIT_INVARIANT = 3


def _load(path: str):
    try:
        return load_scenario(path)
    except FileNotFoundError:
        _fail_config([f"{path}: no such file"])
    except ScenarioError as exc:
        _fail_config([f"{path}: {e}" for e in exc.errors])


def _fail_config(messages: list[str]):
    for msg in messages:
        print(f"error: {msg}", file=sys.stderr)
    sys.exit(EXIT_CONFIG)


def _baseline_delta(spec: str, scenario):
    """Delta series of the reference run: 'auto', a scenario JSON or a run CSV."""
    if spec == "auto":
        return run_scenario(baseline_of(scenario)).delta_s
    if spec.endswith(".csv"):
        try:
            return read_delta_column(spec)
        except (OSError, ValueError) as exc:
            _fail_config([str(exc)])
    return run_scenario(_load(spec)).delta_s


def _emit_summary(summary: dict, out_path: str | None) -> None:
    text = json.dumps(summary, indent=2, sort_keys=True)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)


def cmd_run(args) -> int:
    scenario = _load(args.scenario)
    baseline_delta = _baseline_delta(args.baseline, scenario) if args.baseline else None
    try:
        result = run_scenario(scenario, baseline_delta)
    except InvariantError as exc:
        print(f"error: invariant breached: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    write_run_csv(result, args.out)
    _emit_summary(run_summary(result), args.out + ".summary.json")
    return 0


def cmd_sweep(args) -> int:
    scenario = _load(args.scenario)
    grid_text = args.grid
    if grid_text.startswith("@"):
        try:
            with open(grid_text[1:], "r", encoding="utf-8") as fh:
                grid_text = fh.read()
        except OSError as exc:
            _fail_config([str(exc)])
    try:
        grid = json.loads(grid_text)
    except json.JSONDecodeError as exc:
        _fail_config([f"--grid: invalid JSON ({exc})"])
    try:
        rows, baseline = sweep(scenario, grid, jobs=args.jobs)
    except InvariantError as exc:
        print(f"error: invariant breached: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        _fail_config([str(exc)])
    write_sweep_csv(rows, args.out)
    print(f"baseline delta_max_s: {baseline.delta_max:.9g}")
    print(f"{len(rows)} grid point(s) written to {args.out}")
    return 0


def cmd_compare(args) -> int:
    scenario = _load(args.scenario)
    baseline_delta = _baseline_delta(args.baseline, scenario)
    try:
        result = run_scenario(scenario, baseline_delta)
    except InvariantError as exc:
        print(f"error: invariant breached: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    summary = run_summary(result)
    summary["baseline_delta_max_s"] = float(baseline_delta.max())
    _emit_summary(summary, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctmsim",
        description="Discrete-time highway traffic simulator with service stations",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one scenario and write a trajectory CSV")
    p_run.add_argument("--scenario", required=True, help="scenario JSON file")
    p_run.add_argument("--out", required=True, help="trajectory CSV output path")
    p_run.add_argument(
        "--baseline",
        help="'auto' (same stretch without stations), a scenario JSON, or a run CSV; "
        "adds the peak-reduction index pi to the summary",
    )
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a scenario across a parameter grid")
    p_sweep.add_argument("--scenario", required=True)
    p_sweep.add_argument("--out", required=True, help="sweep table CSV output path")
    p_sweep.add_argument(
        "--grid",
        required=True,
        help="JSON object with lists for beta_s, delta_min and/or p_ms; @file reads it from disk",
    )
    p_sweep.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    p_sweep.set_defaults(func=cmd_sweep)

    p_cmp = sub.add_parser("compare", help="run a scenario and report pi against a baseline")
    p_cmp.add_argument("--scenario", required=True)
    p_cmp.add_argument("--baseline", default="auto")
    p_cmp.add_argument("--out", help="write the comparison summary JSON here as well")
    p_cmp.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
