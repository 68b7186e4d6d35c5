"""Named scenario presets.

A preset is a partial configuration mapping, layered between the schema
defaults and the values of a scenario file. The MagLev presets carry the
two parameter sets of the levitation rig (simulation and experimental
columns); the optical-switch preset uses a scaled parameter set whose
electrical time constant is slow compared with the probing period.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from types import MappingProxyType
from typing import TypeAlias

from .constants import DEFAULT_GAMMA_STAR
from .exceptions import ConfigurationError

ConfigValue: TypeAlias = "str | int | float | bool | tuple[float, ...] | None"

_MAGLEV_SIM: dict[str, ConfigValue] = {
    "plant.model": "maglev",
    "maglev.m": 0.0844,
    "maglev.g": 9.81,
    "maglev.r": 2.52,
    "maglev.c": 0.005,
    "maglev.k": 6404.2e-6,
    "filter.gamma_star": DEFAULT_GAMMA_STAR,
    "filter.delay_periods": 1,
    "observer.kind": "maglev",
    "observer.gamma_R": 500.0,
    "observer.gamma_lambda": 8000.0,
    "observer.gamma_p": 30.0,
    "observer.a": 500.0,
    "observer.R_hat0": 2.0,
    "control.kind": "ida-pbc",
    "control.feedback": "state",
    "control.K_p": 200.7,
    "control.alpha": 33.4,
    "control.levels": (0.0, -0.001),
    "control.period": 6.0,
    "noise.power": 1e-10,
    "noise.sample_time": 1e-3,
}

_MAGLEV_EXP: dict[str, ConfigValue] = {
    "plant.model": "maglev",
    "maglev.m": 0.0844,
    "maglev.g": 9.81,
    "maglev.r": 10.615,
    "maglev.c": 0.0079,
    "maglev.k": 0.04995,
    # probe amplitude 1.5 folded into the injection vector
    "probe.scaling": (1.5,),
    # gamma = 4e5 at epsilon = 1/33
    "filter.gamma_star": 4e5 / 33.0,
    "filter.delay_periods": 10,
    "observer.kind": "maglev",
    "observer.gamma_R": 50.0,
    "observer.gamma_lambda": 8000.0,
    "observer.gamma_p": 20.0,
    "observer.a": 10.0,
    "control.kind": "backstepping",
    "control.feedback": "observer",
    "control.K_i": 1.0,
    "control.gamma1": 340.0,
    "control.gamma2": 3.0,
    "control.levels": (0.0, -0.001),
    "control.period": 6.0,
}

_OPTSW_Q0 = 0.5
_OPTICAL_SWITCH: dict[str, ConfigValue] = {
    "plant.model": "optical-switch",
    "optsw.m": 1.0,
    "optsw.a1": 4.0,
    "optsw.a2": 1.0,
    "optsw.c0": 1.0,
    "optsw.c1": 1.0,
    "optsw.r_c": 1.0,
    "optsw.r_m": 4.0,
    "optsw.q0": _OPTSW_Q0,
    "filter.gamma_star": 80.0,
    "observer.kind": "optical-switch",
    "observer.gamma": 20.0,
    "control.kind": "open-loop",
    # voltage holding q0 at rest: c1 v^2 / 2 = a1 q0 + a2 q0^3
    "control.u_open": math.sqrt(2.0 * (4.0 * _OPTSW_Q0 + 1.0 * _OPTSW_Q0**3) / 1.0),
    "control.u_amplitude": 0.3,
    "control.u_frequency": 0.5,
}

PRESETS: Mapping[str, Mapping[str, ConfigValue]] = MappingProxyType(
    {
        "maglev-sim": MappingProxyType(_MAGLEV_SIM),
        "maglev-exp": MappingProxyType(_MAGLEV_EXP),
        "optical-switch": MappingProxyType(_OPTICAL_SWITCH),
    }
)


def get_preset(name: str) -> Mapping[str, ConfigValue]:
    """Return the preset mapping called ``name``.

    Raises:
        ConfigurationError: If no such preset exists.
    """
    try:
        return PRESETS[name]
    except KeyError:
        known = ", ".join(sorted(PRESETS))
        raise ConfigurationError(
            f"unknown preset {name!r} (known: {known})", key="plant.preset"
        ) from None
