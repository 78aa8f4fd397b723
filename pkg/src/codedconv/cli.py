"""Command-line front end for the simulation experiments.

Subcommands mirror the four experiments (sweep-b, compare, stress,
success-rate) plus `run`, which executes a config file.  All output is
CSV plus a manifest sidecar in --out; tables are echoed to stdout.
Exit codes: 0 success, 2 bad usage or config, 3 runtime failure.
"""

import argparse
import sys

from . import __version__
from .experiments import (
    ConfigError,
    compare_strategies,
    default_sweep_grid,
    emit,
    format_value,
    manifest_entries,
    auto,
    run_scenario_file,
    stress_test,
    success_rate,
    sweep_b,
)
from .scenarios import DEFAULT_SCALE, benchmark_scenario


def _print_table(fieldnames, rows) -> None:
    print(",".join(fieldnames))
    for row in rows:
        print(",".join(format_value(row[name]) for name in fieldnames))


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers: {text!r}") from exc


def _parse_float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers: {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="codedconv",
        description="Distributed-convolution strategy simulator")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--scenario", type=int, default=1, metavar="N",
                       help="benchmark scenario index 1-4 (default 1)")
        p.add_argument("--scale", type=float, default=DEFAULT_SCALE,
                       metavar="FACTOR",
                       help="divide operand lengths by FACTOR (default 8; "
                            "1 = full size)")
        p.add_argument("--seed", type=int, default=1234,
                       help="base seed (default 1234)")
        p.add_argument("--reps", type=int, default=25,
                       help="repetitions per point (default 25)")
        p.add_argument("--out", default="results", metavar="DIR",
                       help="output directory (default results/)")

    p = sub.add_parser("sweep-b", help="mean time of the dynamic strategy "
                                       "over a grid of piece lengths")
    add_common(p)
    p.add_argument("--b-values", metavar="LIST",
                   help="comma-separated piece lengths "
                        "(default: geometric grid up to n2)")
    p.add_argument("--ratio", type=float, default=0.0,
                   help="delayed-straggler ratio during the sweep (default 0)")

    p = sub.add_parser("compare", help="all three strategies at one "
                                       "straggler ratio, paired seeds")
    add_common(p)
    p.add_argument("--ratio", type=float, default=0.5,
                   help="straggler ratio (default 0.5)")
    p.add_argument("--mode", choices=("delayed", "fail", "leave"),
                   default="delayed", help="straggler behaviour")

    p = sub.add_parser("stress", help="strategy comparison over a grid of "
                                      "straggler ratios")
    add_common(p)
    p.add_argument("--ratios", metavar="LIST", default="0,0.25,0.5,0.75,1",
                   help="comma-separated ratios (default 0,0.25,0.5,0.75,1)")
    p.add_argument("--mode", choices=("delayed", "fail", "leave"),
                   default="delayed", help="straggler behaviour")

    p = sub.add_parser("success-rate", help="success fraction under uniform "
                                            "0..P worker failures")
    add_common(p)
    p.add_argument("--runs", type=int, default=2000,
                   help="episodes per strategy (default 2000)")
    p.add_argument("--mode", choices=("fail", "leave"), default="fail",
                   help="failure behaviour")

    p = sub.add_parser("run", help="run the experiment described by a "
                                   "config file")
    p.add_argument("config", help="path to the INI-style config file")
    return parser


def _cmd_sweep_b(args) -> None:
    scenario = benchmark_scenario(args.scenario, args.scale,
                                  straggler_ratio=args.ratio)
    b_values = (_parse_int_list(args.b_values) if args.b_values
                else default_sweep_grid(scenario.n2))
    rows, argmin_b = sweep_b(scenario, b_values, args.reps, args.seed)
    fields = ("b", "mean_time_s", "std_time_s")
    _print_table(fields, rows)
    print(f"argmin_b={argmin_b}")
    manifest = manifest_entries(scenario, "sweep-b", args.seed,
                                reps=args.reps, argmin_b=argmin_b,
                                b_values=" ".join(map(str, b_values)),
                                scale=args.scale)
    csv_path, _ = emit(args.out, "sweep_b", fields, rows, manifest)
    print(f"wrote {csv_path}")


def _cmd_compare(args) -> None:
    scenario = benchmark_scenario(args.scenario, args.scale)
    rows = compare_strategies(scenario, args.reps, args.seed,
                              ratio=args.ratio, mode=args.mode)
    fields = ("strategy", "mean_time_s", "std_time_s")
    _print_table(fields, rows)
    manifest = manifest_entries(scenario, "compare", args.seed,
                                reps=args.reps, ratio=args.ratio,
                                mode=args.mode, b=auto(scenario.dynamic_b),
                                s=auto(scenario.traditional_s),
                                scale=args.scale)
    csv_path, _ = emit(args.out, "compare", fields, rows, manifest)
    print(f"wrote {csv_path}")


def _cmd_stress(args) -> None:
    scenario = benchmark_scenario(args.scenario, args.scale)
    ratios = _parse_float_list(args.ratios)
    rows = stress_test(scenario, ratios, args.reps, args.seed, mode=args.mode)
    fields = ("ratio", "strategy", "mean_time_s", "std_time_s")
    _print_table(fields, rows)
    manifest = manifest_entries(scenario, "stress", args.seed,
                                reps=args.reps, mode=args.mode,
                                ratios=" ".join(format_value(r)
                                                for r in ratios),
                                b=auto(scenario.dynamic_b), scale=args.scale)
    csv_path, _ = emit(args.out, "stress", fields, rows, manifest)
    print(f"wrote {csv_path}")


def _cmd_success_rate(args) -> None:
    scenario = benchmark_scenario(args.scenario, args.scale)
    if args.runs < 1:
        raise ConfigError("--runs must be >= 1")
    rows, _ = success_rate(scenario, args.runs, args.seed, mode=args.mode)
    fields = ("strategy", "success_rate", "successes", "runs")
    _print_table(fields, rows)
    manifest = manifest_entries(scenario, "success-rate", args.seed,
                                runs=args.runs, mode=args.mode,
                                b=auto(scenario.dynamic_b), scale=args.scale)
    csv_path, _ = emit(args.out, "success_rate", fields, rows, manifest)
    print(f"wrote {csv_path}")


def _cmd_run(args) -> None:
    for path in run_scenario_file(args.config):
        print(f"wrote {path}")


_COMMANDS = {
    "sweep-b": _cmd_sweep_b,
    "compare": _cmd_compare,
    "stress": _cmd_stress,
    "success-rate": _cmd_success_rate,
    "run": _cmd_run,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _COMMANDS[args.command](args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        raise
    except Exception as exc:  # noqa: BLE001 - report and signal runtime failure
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
