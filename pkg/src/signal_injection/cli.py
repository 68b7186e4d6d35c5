"""Command-line front end.

Usage:
    signal-injection simulate scenario.cfg -o run.csv
    signal-injection sweep scenario.cfg --param probe.epsilon --values 0.0066,0.0033 -o out/
    signal-injection compare-filters scenario.cfg -o filters.csv
    signal-injection freq-response --d 0.01 --omega-max 1000 --points 201 -o gd.csv

Exit status is 0 on success, 1 on configuration errors and 2 when a run
is aborted. Output paths default to the directory named by
SIGNAL_INJECTION_OUTPUT_DIR, or the working directory.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from .config import ScenarioConfig, build_scenario, load_config
from .constants import CSV_PRECISION, OUTPUT_DIR_ENV
from .engine import compute_metrics, run_scenario
from .exceptions import ConfigurationError, SignalInjectionError
from .ltv_ops import gd_table
from .sweep import run_sweep

logger = logging.getLogger("signal_injection")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ABORT = 2

# window of the least-squares baseline when a comparison config leaves it off
COMPARE_BASELINE_PERIODS = 10


def _output_path(given: str | None, default_name: str) -> Path:
    if given is not None:
        return Path(given)
    return Path(os.environ.get(OUTPUT_DIR_ENV, ".")) / default_name


def _simulate(cfg: ScenarioConfig, output: Path, columns: list[str] | None = None) -> None:
    scenario = build_scenario(cfg)
    trajectory = run_scenario(scenario, logger)
    if columns is not None:
        trajectory = trajectory.select(columns)
    trajectory.to_csv(output)
    record = compute_metrics(trajectory, scenario.settle_time)
    print(record.format())
    print(f"wrote {output}")


def cmd_simulate(args: argparse.Namespace) -> int:
    """Run one scenario and write its trajectory."""
    cfg = load_config(args.config)
    _simulate(cfg, _output_path(args.output, f"{cfg.str_value('sim.name')}.csv"))
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    """Run one scenario per value of a configuration key."""
    cfg = load_config(args.config)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    output = _output_path(args.output, f"{cfg.str_value('sim.name')}_sweep")
    points = run_sweep(cfg, args.param, values, output, workers=args.workers)
    for point in points:
        summary = ", ".join(
            f"{key}={value:.6g}" for key, value in point.metrics.items() if key.endswith("_rms")
        )
        print(f"{args.param}={point.value}: {summary}")
    print(f"wrote {output / 'summary.csv'}")
    return EXIT_OK


def cmd_compare_filters(args: argparse.Namespace) -> int:
    """Run the virtual-output filter and both moving-window comparators side by side."""
    cfg = load_config(args.config)
    if cfg.int_value("filter.baseline_periods") == 0:
        cfg = cfg.with_overrides({"filter.baseline_periods": str(COMPARE_BASELINE_PERIODS)})
    output = _output_path(args.output, f"{cfg.str_value('sim.name')}_filters.csv")
    _simulate(cfg, output, ["yv", "yv_hat", "yv_hat_window", "yv_hat_horizon"])
    return EXIT_OK


def cmd_freq_response(args: argparse.Namespace) -> int:
    """Tabulate magnitude and phase of the regression high-pass G_d."""
    if args.d <= 0.0:
        raise ConfigurationError("--d must be positive")
    if args.omega_max <= 0.0 or args.points < 2:
        raise ConfigurationError("need --omega-max > 0 and at least 2 points")
    omegas = np.linspace(0.0, args.omega_max, args.points)
    magnitude, phase = gd_table(args.d, omegas)
    output = _output_path(args.output, "gd_response.csv")
    output.parent.mkdir(parents=True, exist_ok=True)
    with output.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["omega", "magnitude", "phase"])
        for row in zip(omegas, magnitude, phase, strict=True):
            writer.writerow([f"{v:.{CSV_PRECISION}g}" for v in row])
    print(f"wrote {output}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per operation."""
    parser = argparse.ArgumentParser(
        prog="signal-injection",
        description="Signal-injection virtual-output filter and observer simulations",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="More log output")
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="Run one scenario")
    simulate.add_argument("config", help="Scenario file")
    simulate.add_argument("-o", "--output", help="Trajectory CSV")
    simulate.set_defaults(handler=cmd_simulate)

    sweep = commands.add_parser("sweep", help="Sweep one configuration key")
    sweep.add_argument("config", help="Scenario file")
    sweep.add_argument("--param", required=True, help="Key to vary, e.g. probe.epsilon")
    sweep.add_argument("--values", required=True, help="Comma-separated values")
    sweep.add_argument("-o", "--output", help="Output directory")
    sweep.add_argument("--workers", type=int, default=1, help="Worker processes (default: 1)")
    sweep.set_defaults(handler=cmd_sweep)

    compare = commands.add_parser("compare-filters", help="DREM filter against the moving-window comparators")
    compare.add_argument("config", help="Scenario file")
    compare.add_argument("-o", "--output", help="Comparison CSV")
    compare.set_defaults(handler=cmd_compare_filters)

    freq = commands.add_parser("freq-response", help="Tabulate |G_d(jw)| and its phase")
    freq.add_argument("--d", type=float, required=True, help="Delay parameter d")
    freq.add_argument("--omega-max", type=float, required=True, help="Largest frequency, rad/s")
    freq.add_argument("--points", type=int, default=201, help="Grid points (default: 201)")
    freq.add_argument("-o", "--output", help="Output CSV")
    freq.set_defaults(handler=cmd_freq_response)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point of the ``signal-injection`` command."""
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return int(args.handler(args))
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SignalInjectionError as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
