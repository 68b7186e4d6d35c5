"""Tests for scenario files and their assembly into scenarios."""

from __future__ import annotations

import math
from collections.abc import Callable
from pathlib import Path

import pytest

from signal_injection import (
    ConfigurationError,
    MagLevModel,
    OpticalSwitchModel,
    build_scenario,
    dump_config_text,
    load_config,
    parse_config_text,
)
from signal_injection.constants import DEFAULT_GAMMA_STAR, DEFAULT_GUARD_MARGIN
from signal_injection.presets import get_preset

MINIMAL = "plant.preset = maglev-sim\nprobe.epsilon = 0.01\nsim.horizon = 0.5\n"


class TestParseConfigText:
    """Tests for parse_config_text."""

    def test_minimal(self) -> None:
        """The three required keys are enough."""
        cfg = parse_config_text(MINIMAL)

        assert cfg["probe.epsilon"] == 0.01
        assert cfg["sim.horizon"] == 0.5
        assert cfg["plant.model"] == "maglev"

    def test_comments_and_blank_lines(self, maglev_short_text: str) -> None:
        """Comments and blank lines are ignored, also after a value."""
        text = "\n# leading comment\n\n" + maglev_short_text + "noise.seed = 9  # trailing\n"

        cfg = parse_config_text(text)

        assert cfg["noise.seed"] == 9
        assert cfg["sim.name"] == "short"

    def test_schema_defaults(self) -> None:
        """Keys neither in the preset nor in the file take schema defaults."""
        cfg = parse_config_text(MINIMAL)

        assert cfg["plant.guard_margin"] == DEFAULT_GUARD_MARGIN
        assert cfg["filter.gamma"] is None
        assert cfg["sim.dt"] is None
        assert cfg["probe.centered"] is True

    def test_preset_values(self) -> None:
        """The preset layer sits between defaults and the file."""
        cfg = parse_config_text(MINIMAL)

        assert cfg["maglev.r"] == 2.52
        assert cfg["control.levels"] == (0.0, -0.001)
        assert cfg["noise.power"] == 1e-10
        assert cfg["filter.gamma_star"] == DEFAULT_GAMMA_STAR

    def test_file_overrides_preset(self) -> None:
        """File values win over the preset."""
        cfg = parse_config_text(MINIMAL + "maglev.r = 3.0\ncontrol.levels = 0.0, 0.002, -0.002\n")

        assert cfg["maglev.r"] == 3.0
        assert cfg["control.levels"] == (0.0, 0.002, -0.002)

    def test_auto_value(self) -> None:
        """auto selects the derived default of optional keys."""
        cfg = parse_config_text(MINIMAL + "filter.gamma = auto\nsim.dt = 1e-4\n")

        assert cfg["filter.gamma"] is None
        assert cfg["sim.dt"] == 1e-4

    def test_boolean_values(self) -> None:
        """Booleans accept the usual spellings."""
        cfg = parse_config_text(MINIMAL + "observer.luenberger = yes\nprobe.centered = off\n")

        assert cfg["observer.luenberger"] is True
        assert cfg["probe.centered"] is False

    def test_unknown_key(self) -> None:
        """Unknown keys report the key and line."""
        with pytest.raises(ConfigurationError, match="unknown key 'probe.amplitude'") as exc_info:
            parse_config_text(MINIMAL + "probe.amplitude = 2\n")

        assert exc_info.value.key == "probe.amplitude"
        assert exc_info.value.line == 4
        assert str(exc_info.value).startswith("line 4: ")

    def test_unknown_section(self) -> None:
        """Keys outside the known sections are rejected."""
        with pytest.raises(ConfigurationError, match="unknown key 'solver.method'"):
            parse_config_text("solver.method = rk4\n" + MINIMAL)

    def test_duplicate_key(self) -> None:
        """Repeating a key names the first occurrence."""
        with pytest.raises(ConfigurationError, match=r"duplicate key 'probe.epsilon' \(first set on line 2\)") as exc_info:
            parse_config_text(MINIMAL + "probe.epsilon = 0.02\n")

        assert exc_info.value.line == 4

    def test_malformed_line(self) -> None:
        """A line without '=' is an error."""
        with pytest.raises(ConfigurationError, match="expected 'section.key = value'") as exc_info:
            parse_config_text(MINIMAL + "sim.horizon 2\n")

        assert exc_info.value.line == 4

    def test_missing_required_key(self) -> None:
        """probe.epsilon, plant.preset and sim.horizon are required."""
        with pytest.raises(ConfigurationError, match="missing required key 'probe.epsilon'") as exc_info:
            parse_config_text("plant.preset = maglev-sim\nsim.horizon = 1\n")

        assert exc_info.value.key == "probe.epsilon"

    def test_invalid_value(self) -> None:
        """Values that do not parse report the key and line."""
        with pytest.raises(ConfigurationError, match="invalid value for probe.epsilon") as exc_info:
            parse_config_text("plant.preset = maglev-sim\nprobe.epsilon = fast\nsim.horizon = 1\n")

        assert exc_info.value.line == 2

    def test_invalid_choice(self) -> None:
        """Enumerated keys list their options."""
        with pytest.raises(ConfigurationError, match="not one of corrected, verbatim"):
            parse_config_text(MINIMAL + "observer.flux_form = exact\n")

    def test_non_finite_value(self) -> None:
        """inf and nan are not accepted as numbers."""
        with pytest.raises(ConfigurationError, match="not finite"):
            parse_config_text(MINIMAL + "maglev.m = inf\n")

    def test_unknown_preset(self) -> None:
        """An unknown preset lists the known ones."""
        with pytest.raises(ConfigurationError, match="not one of maglev-sim, maglev-exp, optical-switch"):
            parse_config_text("plant.preset = tokamak\nprobe.epsilon = 0.01\nsim.horizon = 1\n")

        with pytest.raises(ConfigurationError, match="known: maglev-exp, maglev-sim, optical-switch"):
            get_preset("tokamak")


class TestDumpConfig:
    """Tests for the canonical dump."""

    def test_dump_is_idempotent(self, maglev_short_text: str) -> None:
        """Parsing a dump and dumping again gives the same text."""
        first = dump_config_text(parse_config_text(maglev_short_text))
        second = dump_config_text(parse_config_text(first))

        assert first == second

    def test_dump_groups_sections(self) -> None:
        """Every section gets a header and auto is written for unset optional keys."""
        text = dump_config_text(parse_config_text(MINIMAL))

        assert text.startswith("# plant\nplant.preset = maglev-sim\n")
        assert "\n# sim\n" in text
        assert "sim.dt = auto\n" in text
        assert "control.levels = 0.0, -0.001\n" in text


class TestScenarioConfig:
    """Tests for ScenarioConfig helpers."""

    def test_with_overrides(self) -> None:
        """Overrides are parsed and leave the original untouched."""
        cfg = parse_config_text(MINIMAL)

        changed = cfg.with_overrides({"probe.epsilon": "0.005", "noise.seed": "4"})

        assert changed["probe.epsilon"] == 0.005
        assert changed["noise.seed"] == 4
        assert cfg["probe.epsilon"] == 0.01

    def test_override_invalid_value(self) -> None:
        """Overrides go through the same value parsers."""
        with pytest.raises(ConfigurationError, match="invalid value for noise.seed"):
            parse_config_text(MINIMAL).with_overrides({"noise.seed": "1.5"})

    def test_to_flat(self) -> None:
        """to_flat gives the canonical text of every key."""
        flat = parse_config_text(MINIMAL).to_flat()

        assert flat["probe.epsilon"] == "0.01"
        assert flat["observer.luenberger"] == "false"
        assert flat["filter.gamma"] == "auto"

    def test_unknown_lookup(self) -> None:
        """Reading an unknown key fails."""
        with pytest.raises(ConfigurationError, match="unknown key"):
            parse_config_text(MINIMAL)["probe.amplitude"]


class TestLoadConfig:
    """Tests for load_config."""

    def test_load_from_file(self, write_scenario: Callable[..., Path], maglev_short_text: str) -> None:
        """Files are parsed and remember their source."""
        path = write_scenario(maglev_short_text)

        cfg = load_config(path)

        assert cfg.source == path
        assert cfg["sim.horizon"] == 0.05

    def test_missing_file(self, tmp_path: Path) -> None:
        """An unreadable file is a configuration error."""
        with pytest.raises(ConfigurationError, match="cannot read scenario file"):
            load_config(tmp_path / "absent.cfg")


class TestBuildScenario:
    """Tests for build_scenario."""

    def test_maglev_sim(self, maglev_short_text: str) -> None:
        """The simulation preset builds an IDA-PBC loop with the adaptive observer."""
        scn = build_scenario(parse_config_text(maglev_short_text))

        assert isinstance(scn.model, MagLevModel)
        assert scn.model.params.R == 2.52
        assert scn.step == pytest.approx(1e-4)
        assert scn.filter.resolved_gamma(0.01) == pytest.approx(DEFAULT_GAMMA_STAR / 0.01)
        assert scn.observer.kind == "maglev"
        assert scn.control.kind == "ida-pbc"
        assert scn.control.feedback == "state"
        assert scn.noise.variance == pytest.approx(1e-7)
        assert scn.name == "short"

    def test_maglev_exp(self) -> None:
        """The experimental preset uses the rig parameters and observer feedback."""
        cfg = parse_config_text("plant.preset = maglev-exp\nprobe.epsilon = 0.030303030303030304\nsim.horizon = 1\n")

        scn = build_scenario(cfg)

        assert isinstance(scn.model, MagLevModel)
        assert scn.model.params.R == 10.615
        assert scn.model.b == 1.5
        assert scn.delay == pytest.approx(10 * 0.030303030303030304)
        assert scn.filter.resolved_gamma(scn.probe.epsilon) == pytest.approx(4e5)
        assert scn.control.kind == "backstepping"
        assert scn.control.feedback == "observer"

    def test_optical_switch(self) -> None:
        """The optical-switch preset starts at rest at q0 with its holding voltage."""
        cfg = parse_config_text("plant.preset = optical-switch\nprobe.epsilon = 0.02\nsim.horizon = 1\n")

        scn = build_scenario(cfg)

        assert isinstance(scn.model, OpticalSwitchModel)
        q0 = get_preset("optical-switch")["optsw.q0"]
        assert scn.x0 is not None
        assert scn.x0[1] == q0
        assert scn.x0[2] == 0.0
        assert scn.control.u_open == pytest.approx(math.sqrt(2.0 * (4.0 * 0.5 + 0.5**3)))
        assert scn.observer.kind == "optical-switch"

    def test_resistance_sign(self) -> None:
        """resistance_sign = minus flips the IDA-PBC feedforward sign."""
        cfg = parse_config_text(MINIMAL + "control.resistance_sign = minus\n")

        assert build_scenario(cfg).control.resistance_sign == -1.0

    def test_explicit_step(self) -> None:
        """sim.dt overrides the steps-per-period default."""
        cfg = parse_config_text(MINIMAL + "sim.dt = 0.0005\n")

        assert build_scenario(cfg).step == 0.0005

    def test_inconsistent_values(self) -> None:
        """Scenario checks run on assembled configurations."""
        cfg = parse_config_text(MINIMAL + "sim.dt = 0.003\n")

        with pytest.raises(ConfigurationError, match="not an integer multiple"):
            build_scenario(cfg)

    def test_multiple_scaling_entries(self) -> None:
        """The shipped plants take a single injection entry."""
        cfg = parse_config_text(MINIMAL + "probe.scaling = 1.0, 2.0\n")

        with pytest.raises(ConfigurationError, match="single input"):
            build_scenario(cfg)

    def test_tabulated_probe_relative_path(self, write_scenario: Callable[..., Path]) -> None:
        """Sample files are found next to the scenario file."""
        write_scenario("1.0\n1.0\n-1.0\n-1.0\n", name="square.txt")
        path = write_scenario(MINIMAL + "probe.shape = tabulated\nprobe.samples_file = square.txt\n")

        scn = build_scenario(load_config(path))

        assert scn.probe.shape == "tabulated"
        assert len(scn.probe.samples) == 4

    def test_tabulated_probe_needs_file(self) -> None:
        """The tabulated shape requires a sample file."""
        cfg = parse_config_text(MINIMAL + "probe.shape = tabulated\n")

        with pytest.raises(ConfigurationError, match="needs probe.samples_file"):
            build_scenario(cfg)
