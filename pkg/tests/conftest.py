"""Test fixtures for py-signal-injection package."""

from __future__ import annotations

from collections.abc import Callable
from pathlib import Path

import pytest

from signal_injection import (
    MagLevModel,
    MagLevParams,
    OpticalSwitchModel,
    OpticalSwitchParams,
    ProbingSpec,
)


@pytest.fixture
def probe() -> ProbingSpec:
    """Sinusoidal probe with a coarse period for fast loops."""
    return ProbingSpec(shape="sinusoid", epsilon=0.01)


@pytest.fixture
def maglev() -> MagLevModel:
    """MagLev plant with the simulation parameter set."""
    return MagLevModel(params=MagLevParams())


@pytest.fixture
def optical_switch() -> OpticalSwitchModel:
    """Optical switch with the scaled parameter set of the preset."""
    params = OpticalSwitchParams(m=1.0, a1=4.0, a2=1.0, c0=1.0, c1=1.0, r_c=1.0, r_m=4.0)
    return OpticalSwitchModel(params=params)


@pytest.fixture
def write_scenario(tmp_path: Path) -> Callable[[str], Path]:
    """Write scenario text to a file under tmp_path and return its path."""

    def write(text: str, name: str = "scenario.cfg") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return write


MAGLEV_SHORT = """\
# short state-feedback run
plant.preset = maglev-sim
probe.epsilon = 0.01
sim.horizon = 0.05
sim.name = short
"""


@pytest.fixture
def maglev_short_text() -> str:
    """Scenario text of a short MagLev run."""
    return MAGLEV_SHORT
