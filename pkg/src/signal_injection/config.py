"""Scenario configuration files.

A scenario file holds one ``section.key = value`` assignment per line;
``#`` starts a comment and blank lines are ignored. Lists are comma
separated and ``auto`` selects a derived default for optional keys.
The schema is strict: unknown keys, repeated keys and unparsable values
are errors reported with their line number.

Values are layered as schema defaults < named preset < file, and
:func:`dump_config_text` writes the fully resolved mapping in canonical
form, so dumping a parsed dump reproduces it exactly.

Example:
    >>> cfg = parse_config_text("plant.preset = maglev-sim\\nprobe.epsilon = 0.0033333333333333335\\nsim.horizon = 1\\n")
    >>> cfg["maglev.r"]
    2.52
"""

from __future__ import annotations

import dataclasses
import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

from .constants import DEFAULT_FLOOR_DWELL, DEFAULT_GAMMA_STAR, DEFAULT_GUARD_MARGIN, DEFAULT_RAMP_TIME
from .constants import DEFAULT_HORIZON_ALPHA, DEFAULT_HORIZON_GAMMA
from .constants import DEFAULT_STEPS_PER_PERIOD, PROJECTION_FLOOR_FRACTION
from .ems_models import MagLevModel, MagLevParams, OpticalSwitchModel, OpticalSwitchParams
from .engine import ControlSettings, FilterSettings, NoiseSpec, ObserverSettings, Scenario
from .exceptions import ConfigurationError
from .observers import MagLevObserverGains
from .presets import ConfigValue, get_preset
from .signals import ProbingSpec, load_tabulated

SECTIONS: tuple[str, ...] = (
    "plant",
    "maglev",
    "optsw",
    "probe",
    "filter",
    "observer",
    "control",
    "noise",
    "sim",
)

REQUIRED_KEYS: tuple[str, ...] = ("plant.preset", "probe.epsilon", "sim.horizon")

AUTO = "auto"


class _Field(NamedTuple):
    """Schema entry: value parser, formatter and default."""

    parse: Callable[[str], ConfigValue]
    format: Callable[[ConfigValue], str]
    default: ConfigValue


def _parse_float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"{text!r} is not finite")
    return value


def _parse_int(text: str) -> int:
    return int(text)


def _parse_bool(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"{text!r} is not a boolean")


def _parse_str(text: str) -> str:
    if not text:
        raise ValueError("empty value")
    return text


def _parse_float_list(text: str) -> tuple[float, ...]:
    items = [item.strip() for item in text.split(",")]
    if not all(items):
        raise ValueError(f"{text!r} is not a comma-separated list")
    return tuple(_parse_float(item) for item in items)


def _optional(parse: Callable[[str], ConfigValue]) -> Callable[[str], ConfigValue]:
    def wrapper(text: str) -> ConfigValue:
        return None if text == AUTO else parse(text)

    return wrapper


def _choice(*options: str) -> Callable[[str], ConfigValue]:
    def wrapper(text: str) -> ConfigValue:
        if text not in options:
            raise ValueError(f"{text!r} is not one of {', '.join(options)}")
        return text

    return wrapper


def _format(value: ConfigValue) -> str:
    if value is None:
        return AUTO
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def _f(default: float) -> _Field:
    return _Field(_parse_float, _format, default)


def _opt_f() -> _Field:
    return _Field(_optional(_parse_float), _format, None)


def _i(default: int) -> _Field:
    return _Field(_parse_int, _format, default)


def _c(default: str, *options: str) -> _Field:
    return _Field(_choice(*options), _format, default)


SCHEMA: Mapping[str, _Field] = {
    "plant.preset": _c("maglev-sim", "maglev-sim", "maglev-exp", "optical-switch"),
    "plant.model": _c("maglev", "maglev", "optical-switch"),
    "plant.x0": _Field(_optional(_parse_float_list), _format, None),
    "plant.guard_margin": _f(DEFAULT_GUARD_MARGIN),
    "maglev.m": _f(0.0844),
    "maglev.g": _f(9.81),
    "maglev.r": _f(2.52),
    "maglev.c": _f(0.005),
    "maglev.k": _f(6404.2e-6),
    "optsw.m": _f(1e-3),
    "optsw.a1": _f(1.0),
    "optsw.a2": _f(1e4),
    "optsw.c0": _f(1e-3),
    "optsw.c1": _f(1e-3),
    "optsw.r_c": _f(1.0),
    "optsw.r_m": _f(1e-2),
    "optsw.q0": _f(1e-3),
    "probe.shape": _c("sinusoid", "sinusoid", "square", "tabulated"),
    "probe.epsilon": _f(1.0 / 300.0),
    "probe.scaling": _Field(_parse_float_list, _format, (1.0,)),
    "probe.samples_file": _Field(_optional(_parse_str), _format, None),
    "probe.centered": _Field(_parse_bool, _format, True),
    "filter.gamma_star": _f(DEFAULT_GAMMA_STAR),
    "filter.gamma": _opt_f(),
    "filter.delay_periods": _i(1),
    "filter.baseline_periods": _i(0),
    "filter.horizon_gamma": _f(DEFAULT_HORIZON_GAMMA),
    "filter.horizon_alpha": _f(DEFAULT_HORIZON_ALPHA),
    "filter.initial": _f(0.0),
    "observer.kind": _c("none", "none", "electrical", "optical-switch", "maglev"),
    "observer.gamma": _f(8000.0),
    "observer.gamma_R": _f(500.0),
    "observer.gamma_lambda": _f(8000.0),
    "observer.gamma_p": _f(30.0),
    "observer.a": _f(500.0),
    "observer.flux_form": _c("corrected", "corrected", "verbatim"),
    "observer.R_hat0": _f(2.0),
    "observer.x1_hat0": _opt_f(),
    "observer.q_hat0": _f(0.0),
    "observer.p_hat0": _f(0.0),
    "observer.floor_fraction": _f(PROJECTION_FLOOR_FRACTION),
    "observer.floor_dwell": _f(DEFAULT_FLOOR_DWELL),
    "observer.luenberger": _Field(_parse_bool, _format, False),
    "observer.l1": _f(60.0),
    "observer.l2": _f(0.5),
    "observer.luenberger_form": _c("corrected", "corrected", "verbatim"),
    "control.kind": _c("open-loop", "open-loop", "ida-pbc", "backstepping"),
    "control.feedback": _c("state", "state", "observer"),
    "control.u_open": _f(0.0),
    "control.u_amplitude": _f(0.0),
    "control.u_frequency": _f(0.0),
    "control.K_p": _f(200.7),
    "control.alpha": _f(33.4),
    "control.resistance_sign": _c("plus", "plus", "minus"),
    "control.gamma1": _f(340.0),
    "control.gamma2": _f(3.0),
    "control.K_i": _f(1.0),
    "control.levels": _Field(_parse_float_list, _format, (0.0,)),
    "control.period": _f(1.0),
    "control.ramp": _f(DEFAULT_RAMP_TIME),
    "noise.power": _f(0.0),
    "noise.sample_time": _f(1e-3),
    "noise.seed": _i(0),
    "noise.convention": _c("power", "power", "variance"),
    "sim.horizon": _f(1.0),
    "sim.dt": _opt_f(),
    "sim.steps_per_period": _i(DEFAULT_STEPS_PER_PERIOD),
    "sim.t_settle": _opt_f(),
    "sim.name": _Field(_parse_str, _format, "scenario"),
}


def parse_value(key: str, text: str, line: int | None = None) -> ConfigValue:
    """Parse the text of one assignment according to the schema.

    Raises:
        ConfigurationError: If the key is unknown or the value does not parse.
    """
    entry = SCHEMA.get(key)
    if entry is None:
        raise ConfigurationError(f"unknown key {key!r}", key=key, line=line)
    try:
        return entry.parse(text.strip())
    except ValueError as exc:
        raise ConfigurationError(f"invalid value for {key}: {exc}", key=key, line=line) from exc


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved scenario configuration.

    Attributes:
        values: Every schema key mapped to its typed value.
        source: Path of the scenario file, if it was read from one.
    """

    values: Mapping[str, ConfigValue]
    source: Path | None = None

    def __getitem__(self, key: str) -> ConfigValue:
        if key not in SCHEMA:
            raise ConfigurationError(f"unknown key {key!r}", key=key)
        return self.values[key]

    def with_overrides(self, overrides: Mapping[str, str]) -> ScenarioConfig:
        """Return a copy with some keys replaced by parsed text values."""
        values = dict(self.values)
        for key, text in overrides.items():
            values[key] = parse_value(key, text)
        return ScenarioConfig(values=values, source=self.source)

    def to_flat(self) -> dict[str, str]:
        """Canonical text value of every key."""
        return {key: SCHEMA[key].format(self.values[key]) for key in SCHEMA}

    def float_value(self, key: str) -> float:
        value = self[key]
        assert isinstance(value, (int, float)) and not isinstance(value, bool)
        return float(value)

    def int_value(self, key: str) -> int:
        value = self[key]
        assert isinstance(value, int) and not isinstance(value, bool)
        return value

    def str_value(self, key: str) -> str:
        value = self[key]
        assert isinstance(value, str)
        return value

    def bool_value(self, key: str) -> bool:
        value = self[key]
        assert isinstance(value, bool)
        return value

    def optional_float(self, key: str) -> float | None:
        value = self[key]
        return None if value is None else self.float_value(key)

    def float_list(self, key: str) -> tuple[float, ...]:
        value = self[key]
        assert isinstance(value, tuple)
        return value


def _read_assignments(text: str) -> dict[str, tuple[str, int]]:
    assignments: dict[str, tuple[str, int]] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigurationError(f"expected 'section.key = value', got {raw.strip()!r}", line=number)
        section, dot, name = key.partition(".")
        if not dot or not name or section not in SECTIONS:
            raise ConfigurationError(f"unknown key {key!r}", key=key, line=number)
        if key in assignments:
            first = assignments[key][1]
            raise ConfigurationError(
                f"duplicate key {key!r} (first set on line {first})", key=key, line=number
            )
        assignments[key] = (value.strip(), number)
    return assignments


def parse_config_text(text: str, source: Path | None = None) -> ScenarioConfig:
    """Parse scenario text and resolve it against its preset and the defaults.

    Args:
        text: Scenario file content.
        source: File the text was read from, used for relative paths.

    Returns:
        The resolved configuration.

    Raises:
        ConfigurationError: On malformed lines, unknown or repeated keys,
            unparsable values or missing required keys.
    """
    assignments = _read_assignments(text)
    parsed = {
        key: parse_value(key, value, number) for key, (value, number) in assignments.items()
    }
    for key in REQUIRED_KEYS:
        if key not in parsed:
            raise ConfigurationError(f"missing required key {key!r}", key=key)
    values: dict[str, ConfigValue] = {key: entry.default for key, entry in SCHEMA.items()}
    preset = parsed["plant.preset"]
    assert isinstance(preset, str)
    values.update(get_preset(preset))
    values.update(parsed)
    return ScenarioConfig(values=values, source=source)


def load_config(path: str | Path) -> ScenarioConfig:
    """Read and parse a scenario file.

    Raises:
        ConfigurationError: If the file cannot be read or does not parse.
    """
    target = Path(path)
    try:
        text = target.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read scenario file {target}: {exc}") from exc
    return parse_config_text(text, source=target)


def dump_config_text(cfg: ScenarioConfig) -> str:
    """Canonical text of a resolved configuration, grouped by section."""
    lines: list[str] = []
    flat = cfg.to_flat()
    for section in SECTIONS:
        keys = [key for key in SCHEMA if key.startswith(section + ".")]
        if lines:
            lines.append("")
        lines.append(f"# {section}")
        lines.extend(f"{key} = {flat[key]}" for key in keys)
    return "\n".join(lines) + "\n"


def _build_probe(cfg: ScenarioConfig) -> ProbingSpec:
    epsilon = cfg.float_value("probe.epsilon")
    scaling = cfg.float_list("probe.scaling")
    shape = cfg.str_value("probe.shape")
    centered = cfg.bool_value("probe.centered")
    if shape != "tabulated":
        return ProbingSpec(shape=shape, epsilon=epsilon, scaling=scaling, centered=centered)
    samples = cfg["probe.samples_file"]
    if samples is None:
        raise ConfigurationError("tabulated shape needs probe.samples_file", key="probe.samples_file")
    path = Path(str(samples))
    if not path.is_absolute() and cfg.source is not None:
        path = cfg.source.parent / path
    spec = load_tabulated(path, epsilon, scaling)
    return dataclasses.replace(spec, centered=centered)


def build_scenario(cfg: ScenarioConfig) -> Scenario:
    """Assemble the plant, probe and settings described by ``cfg``.

    Raises:
        ConfigurationError: If the values are inconsistent.
    """
    probe = _build_probe(cfg)
    if len(probe.scaling) != 1:
        raise ConfigurationError("the shipped plants have a single input", key="probe.scaling")
    b = probe.scaling[0]
    guard = cfg.float_value("plant.guard_margin")
    x0 = cfg["plant.x0"]
    model: MagLevModel | OpticalSwitchModel
    if cfg.str_value("plant.model") == "maglev":
        params = MagLevParams(
            m=cfg.float_value("maglev.m"),
            G=cfg.float_value("maglev.g"),
            R=cfg.float_value("maglev.r"),
            c=cfg.float_value("maglev.c"),
            k=cfg.float_value("maglev.k"),
        )
        model = MagLevModel(params=params, b=b, guard_margin=guard)
    else:
        sw = OpticalSwitchParams(
            m=cfg.float_value("optsw.m"),
            a1=cfg.float_value("optsw.a1"),
            a2=cfg.float_value("optsw.a2"),
            c0=cfg.float_value("optsw.c0"),
            c1=cfg.float_value("optsw.c1"),
            r_c=cfg.float_value("optsw.r_c"),
            r_m=cfg.float_value("optsw.r_m"),
        )
        model = OpticalSwitchModel(params=sw, b=b, guard_margin=guard)
        if x0 is None:
            q0 = cfg.float_value("optsw.q0")
            x0 = (sw.equilibrium_charge(q0), q0, 0.0)

    steps_per_period = cfg.int_value("sim.steps_per_period")
    dt = cfg.optional_float("sim.dt")
    if dt is None:
        if steps_per_period < 1:
            raise ConfigurationError("steps_per_period must be positive", key="sim.steps_per_period")
        dt = probe.epsilon / steps_per_period

    filter_settings = FilterSettings(
        gamma_star=cfg.float_value("filter.gamma_star"),
        gamma=cfg.optional_float("filter.gamma"),
        delay_periods=cfg.int_value("filter.delay_periods"),
        baseline_periods=cfg.int_value("filter.baseline_periods"),
        horizon_gamma=cfg.float_value("filter.horizon_gamma"),
        horizon_alpha=cfg.float_value("filter.horizon_alpha"),
        initial=cfg.float_value("filter.initial"),
    )
    observer_settings = ObserverSettings(
        kind=cfg.str_value("observer.kind"),
        gamma=cfg.float_value("observer.gamma"),
        gains=MagLevObserverGains(
            gamma_R=cfg.float_value("observer.gamma_R"),
            gamma_lambda=cfg.float_value("observer.gamma_lambda"),
            gamma_p=cfg.float_value("observer.gamma_p"),
            a=cfg.float_value("observer.a"),
            flux_form=cfg.str_value("observer.flux_form"),
        ),
        R_hat0=cfg.float_value("observer.R_hat0"),
        x1_hat0=cfg.optional_float("observer.x1_hat0"),
        q_hat0=cfg.float_value("observer.q_hat0"),
        p_hat0=cfg.float_value("observer.p_hat0"),
        floor_fraction=cfg.float_value("observer.floor_fraction"),
        floor_dwell=cfg.float_value("observer.floor_dwell"),
        luenberger=cfg.bool_value("observer.luenberger"),
        l1=cfg.float_value("observer.l1"),
        l2=cfg.float_value("observer.l2"),
        luenberger_form=cfg.str_value("observer.luenberger_form"),
    )
    control_settings = ControlSettings(
        kind=cfg.str_value("control.kind"),
        feedback=cfg.str_value("control.feedback"),
        u_open=cfg.float_value("control.u_open"),
        u_amplitude=cfg.float_value("control.u_amplitude"),
        u_frequency=cfg.float_value("control.u_frequency"),
        K_p=cfg.float_value("control.K_p"),
        alpha=cfg.float_value("control.alpha"),
        resistance_sign=1.0 if cfg.str_value("control.resistance_sign") == "plus" else -1.0,
        gamma1=cfg.float_value("control.gamma1"),
        gamma2=cfg.float_value("control.gamma2"),
        K_i=cfg.float_value("control.K_i"),
        levels=cfg.float_list("control.levels"),
        period=cfg.float_value("control.period"),
        ramp=cfg.float_value("control.ramp"),
    )
    noise = NoiseSpec(
        power=cfg.float_value("noise.power"),
        sample_time=cfg.float_value("noise.sample_time"),
        seed=cfg.int_value("noise.seed"),
        convention=cfg.str_value("noise.convention"),
    )
    return Scenario(
        model=model,
        probe=probe,
        filter=filter_settings,
        observer=observer_settings,
        control=control_settings,
        noise=noise,
        dt=dt,
        horizon=cfg.float_value("sim.horizon"),
        x0=None if x0 is None else tuple(float(v) for v in x0),
        t_settle=cfg.optional_float("sim.t_settle"),
        name=cfg.str_value("sim.name"),
    )
