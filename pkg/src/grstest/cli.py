"""Command line interface: rank, test, simulate, bench."""

from __future__ import annotations

import argparse
import os
import sys

from grstest import __version__
from grstest.platform_io import (
    DEFAULT_ALPHAS,
    AnalysisRequest,
    analyze,
    load_metrics,
)
from grstest.rankcore import compute_global_ranks, export_rank_table
from grstest.simlab import (
    SimulationConfig,
    run_calibration_study,
    run_power_study,
    run_timing_benchmark,
)

SEED_ENV_VAR = "GRSTEST_SEED"


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV_VAR)
    return int(raw) if raw else 0


def _add_shared(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help=f"RNG/tie-break seed (default: ${SEED_ENV_VAR} or 0)",
    )
    parser.add_argument(
        "--alpha",
        type=float,
        action="append",
        default=None,
        help="significance level, repeatable (default: 0.01 0.05 0.10)",
    )
    parser.add_argument(
        "--format",
        choices=("table", "delimited", "structured"),
        default="table",
        help="report format",
    )


def _resolve_seed(args) -> int:
    return args.seed if args.seed is not None else _default_seed()


def _resolve_alphas(args) -> tuple:
    return tuple(sorted(args.alpha)) if args.alpha else DEFAULT_ALPHAS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grstest",
        description=(
            "Rank a user population once, then evaluate any number of "
            "overlapping A/B experiments with rank-based tests."
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_rank = sub.add_parser("rank", help="build and export a global rank table")
    p_rank.add_argument("--metrics", required=True, help="user_id,value file")
    p_rank.add_argument("--out", required=True, help="output rank table path")
    p_rank.add_argument("--has-header", action="store_true")
    _add_shared(p_rank)

    p_test = sub.add_parser("test", help="run hypothesis tests on experiments")
    p_test.add_argument("--metrics", required=True, help="user_id,value file")
    p_test.add_argument(
        "--assignments", required=True, help="experiment_id,user_id,group file"
    )
    p_test.add_argument(
        "--method",
        action="append",
        choices=("t_test", "rank_sum", "global_rank_sum"),
        default=None,
        help="test to run, repeatable (default: all three)",
    )
    p_test.add_argument("--out", default=None, help="report path (default: stdout)")
    p_test.add_argument("--has-header", action="store_true")
    _add_shared(p_test)

    p_sim = sub.add_parser(
        "simulate", help="calibration (gamma=0) or power (gamma>0) study"
    )
    p_sim.add_argument("--mu", type=float, default=-3.0)
    p_sim.add_argument("--sigma", type=float, default=3.0)
    p_sim.add_argument("--population", type=int, default=1_000_000)
    p_sim.add_argument("--n-treatment", type=int, default=100_000)
    p_sim.add_argument("--n-control", type=int, default=100_000)
    p_sim.add_argument("--reps", type=int, default=5_000)
    p_sim.add_argument("--gamma", type=float, default=0.0, help="lift ratio")
    p_sim.add_argument(
        "--rank-base",
        choices=("population", "experiment"),
        default="population",
        help="ranking base for the global test under lift",
    )
    p_sim.add_argument("--out", default=None, help="report path (default: stdout)")
    _add_shared(p_sim)

    p_bench = sub.add_parser(
        "bench", help="time per-experiment sorting against sort-once"
    )
    p_bench.add_argument(
        "--experiments",
        type=int,
        action="append",
        default=None,
        help="experiment count, repeatable (default: 1 10 50 100)",
    )
    p_bench.add_argument("--population", type=int, default=1_000_000)
    p_bench.add_argument("--n-treatment", type=int, default=100_000)
    p_bench.add_argument("--n-control", type=int, default=100_000)
    p_bench.add_argument("--mu", type=float, default=-3.0)
    p_bench.add_argument("--sigma", type=float, default=3.0)
    p_bench.add_argument("--runs", type=int, default=3, help="timed runs per path")
    _add_shared(p_bench)

    return parser


def _cmd_rank(args) -> int:
    records = load_metrics(args.metrics, has_header=args.has_header)
    table = compute_global_ranks(records, _resolve_seed(args))
    export_rank_table(table, args.out)
    print(f"ranked {table.population_size} users -> {args.out}")
    return 0


def _cmd_test(args) -> int:
    request = AnalysisRequest(
        metrics_path=args.metrics,
        assignments_path=args.assignments,
        tiebreak_seed=_resolve_seed(args),
        alphas=_resolve_alphas(args),
        methods=tuple(args.method)
        if args.method
        else ("t_test", "rank_sum", "global_rank_sum"),
        output_path=args.out,
        output_format=args.format,
        has_header=args.has_header,
    )
    report = analyze(request)
    if not args.out:
        sys.stdout.write(report.render(args.format))
    return 0


def _cmd_simulate(args) -> int:
    config = SimulationConfig(
        mu=args.mu,
        sigma=args.sigma,
        population_size=args.population,
        n_treatment=args.n_treatment,
        n_control=args.n_control,
        replications=args.reps,
        lift_ratio=args.gamma,
        alphas=_resolve_alphas(args),
        seed=_resolve_seed(args),
    )
    if args.gamma > 0:
        report = run_power_study(config, rank_base=args.rank_base)
    else:
        report = run_calibration_study(config, rank_base=args.rank_base)
    if args.format == "structured":
        text = report.to_json() + "\n"
    elif args.format == "delimited":
        text = report.to_csv()
    else:
        text = report.render_table()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_bench(args) -> int:
    counts = args.experiments or [1, 10, 50, 100]
    config = SimulationConfig(
        mu=args.mu,
        sigma=args.sigma,
        population_size=args.population,
        n_treatment=args.n_treatment,
        n_control=args.n_control,
        replications=1,
        seed=_resolve_seed(args),
    )
    print(f"{'E':>6}  {'trad (s)':>10}  {'global (s)':>10}  {'diff':>10}")
    for e in counts:
        result = run_timing_benchmark(e, config, runs=args.runs)
        print(result.row())
    return 0


_COMMANDS = {
    "rank": _cmd_rank,
    "test": _cmd_test,
    "simulate": _cmd_simulate,
    "bench": _cmd_bench,
}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
