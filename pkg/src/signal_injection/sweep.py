"""Parameter sweeps over one scenario key.

Each sweep value becomes an independent scenario whose noise seed is the
base seed XOR the value's index. Scenarios share nothing, so they may run
in worker processes; the result does not depend on the worker count.
"""

from __future__ import annotations

import csv
import logging
import math
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .config import SCHEMA, ScenarioConfig, build_scenario, parse_config_text, parse_value
from .constants import CSV_PRECISION
from .engine import compute_metrics, run_scenario
from .exceptions import ConfigurationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SweepPoint:
    """Outcome of one sweep value.

    Attributes:
        index: Position of the value in the sweep.
        value: Text of the swept value.
        csv_path: Trajectory file written for this value.
        metrics: Flat metric row of the run.
    """

    index: int
    value: str
    csv_path: Path
    metrics: dict[str, float]


def _flat_text(flat: dict[str, str]) -> str:
    return "".join(f"{key} = {value}\n" for key, value in flat.items())


def _run_point(
    flat: dict[str, str],
    source: str | None,
    index: int,
    value: str,
    target: str,
) -> SweepPoint:
    # top level so it pickles for worker processes
    cfg = parse_config_text(_flat_text(flat), source=None if source is None else Path(source))
    scenario = build_scenario(cfg)
    trajectory = run_scenario(scenario, logger)
    path = trajectory.to_csv(target)
    record = compute_metrics(trajectory, scenario.settle_time)
    return SweepPoint(index=index, value=value, csv_path=path, metrics=record.as_row())


def _file_label(value: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-." else "_" for ch in value)


def sweep_configs(cfg: ScenarioConfig, param: str, values: Sequence[str]) -> list[ScenarioConfig]:
    """Configurations of a sweep, with derived seeds.

    Raises:
        ConfigurationError: If the key is unknown, a value does not parse
            or the value list is empty.
    """
    if param not in SCHEMA:
        raise ConfigurationError(f"unknown key {param!r}", key=param)
    if not values:
        raise ConfigurationError("sweep needs at least one value", key=param)
    base_seed = cfg.int_value("noise.seed")
    configs = []
    for index, value in enumerate(values):
        parse_value(param, value)
        overrides = {param: value}
        if param != "noise.seed":
            overrides["noise.seed"] = str(base_seed ^ index)
        configs.append(cfg.with_overrides(overrides))
    return configs


def run_sweep(
    cfg: ScenarioConfig,
    param: str,
    values: Sequence[str],
    output_dir: str | Path,
    workers: int = 1,
) -> list[SweepPoint]:
    """Run one scenario per value and write their trajectories and a summary.

    Args:
        cfg: Base configuration.
        param: Schema key to vary.
        values: Text values of ``param``.
        output_dir: Directory receiving ``<name>_<index>.csv`` files and
            ``summary.csv``.
        workers: Number of worker processes; 1 runs in this process.

    Returns:
        The sweep points in value order.

    Raises:
        ConfigurationError: If the sweep or any scenario is misconfigured.
    """
    configs = sweep_configs(cfg, param, values)
    target_dir = Path(output_dir)
    target_dir.mkdir(parents=True, exist_ok=True)
    name = cfg.str_value("sim.name")
    source = None if cfg.source is None else str(cfg.source)
    jobs = [
        (
            c.to_flat(),
            source,
            index,
            value,
            str(target_dir / f"{name}_{index}_{_file_label(value)}.csv"),
        )
        for index, (c, value) in enumerate(zip(configs, values, strict=True))
    ]
    for c in configs:
        # fail before any worker starts
        build_scenario(c)
    logger.info("Sweep of %s over %d values with %d worker(s)", param, len(jobs), workers)
    if workers <= 1:
        points = [_run_point(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_point, *job) for job in jobs]
            points = [future.result() for future in futures]
    write_summary(points, param, target_dir / "summary.csv")
    return points


def error_ratios(points: Sequence[SweepPoint]) -> list[dict[str, float]]:
    """Ratio of each metric to its value at the previous sweep point.

    The first point has no predecessor and gets NaN ratios.
    """
    ratios: list[dict[str, float]] = []
    for i, point in enumerate(points):
        row: dict[str, float] = {}
        for key, value in point.metrics.items():
            previous = points[i - 1].metrics.get(key) if i else None
            if previous is None or previous == 0.0:
                row[f"{key}_ratio"] = math.nan
            else:
                row[f"{key}_ratio"] = value / previous
        ratios.append(row)
    return ratios


def write_summary(points: Sequence[SweepPoint], param: str, path: Path) -> Path:
    """Write one summary row per sweep point: value, metrics and ratios."""
    ratios = error_ratios(points)
    metric_keys = list(points[0].metrics) if points else []
    header = ["index", param, "csv", *metric_keys, *(f"{k}_ratio" for k in metric_keys)]
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for point, ratio in zip(points, ratios, strict=True):
            numbers = [point.metrics.get(k, math.nan) for k in metric_keys]
            numbers += [ratio.get(f"{k}_ratio", math.nan) for k in metric_keys]
            writer.writerow(
                [point.index, point.value, point.csv_path.name]
                + [f"{v:.{CSV_PRECISION}g}" for v in numbers]
            )
    return path
