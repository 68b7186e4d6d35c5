"""Tests for probing signals."""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from signal_injection import ConfigurationError, ProbingSpec, S_eval, injected_input, load_tabulated, s_eval


class TestProbingSpec:
    """Tests for ProbingSpec validation and evaluation."""

    def test_default_values(self) -> None:
        """Defaults describe a unit sinusoid at epsilon = 1/300."""
        spec = ProbingSpec()

        assert spec.shape == "sinusoid"
        assert spec.epsilon == pytest.approx(1.0 / 300.0)
        assert spec.b.tolist() == [1.0]
        assert spec.centered is True

    def test_unknown_shape(self) -> None:
        """Unknown waveform names are rejected."""
        with pytest.raises(ConfigurationError, match="unknown probe shape"):
            ProbingSpec(shape="chirp")

    def test_epsilon_out_of_range(self) -> None:
        """Epsilon must lie in (0, 1)."""
        with pytest.raises(ConfigurationError, match="epsilon must be in"):
            ProbingSpec(epsilon=0.0)

        with pytest.raises(ConfigurationError, match="epsilon must be in"):
            ProbingSpec(epsilon=1.5)

    def test_empty_scaling(self) -> None:
        """The injection vector needs at least one finite entry."""
        with pytest.raises(ConfigurationError, match="scaling"):
            ProbingSpec(scaling=())

        with pytest.raises(ConfigurationError, match="scaling"):
            ProbingSpec(scaling=(math.nan,))

    def test_tabulated_needs_samples(self) -> None:
        """Fewer than four samples per period is a configuration error."""
        with pytest.raises(ConfigurationError, match="at least 4 samples"):
            ProbingSpec(shape="tabulated", samples=(1.0, -1.0, 0.5))

    def test_spec_is_frozen(self) -> None:
        """Specs are immutable."""
        spec = ProbingSpec()

        with pytest.raises(AttributeError):
            spec.epsilon = 0.1  # type: ignore[misc]


class TestWaveforms:
    """Tests for s and its zero-mean primitive S."""

    def test_sinusoid_peak(self) -> None:
        """s(1/4) = 1 for the sinusoid."""
        assert s_eval(ProbingSpec(), 0.25) == pytest.approx(1.0)

    def test_sinusoid_zero_mean(self) -> None:
        """The sinusoid averages to zero over a period."""
        tau = np.arange(1000) / 1000.0

        assert abs(float(np.mean(ProbingSpec().wave(tau)))) < 1e-12

    def test_square_values(self) -> None:
        """The square wave is +1 on the first half period and -1 after."""
        spec = ProbingSpec(shape="square")

        assert s_eval(spec, 0.1) == 1.0
        assert s_eval(spec, 0.6) == -1.0
        assert s_eval(spec, 1.1) == 1.0

    def test_sinusoid_primitive_at_zero(self) -> None:
        """S(0) = -1/(2 pi) for the sinusoid."""
        assert S_eval(ProbingSpec(), 0.0) == pytest.approx(-1.0 / (2.0 * math.pi), abs=1e-12)

    def test_primitive_zero_mean(self) -> None:
        """S has zero mean over one period for both analytic shapes."""
        tau = (np.arange(100_000) + 0.5) / 100_000.0

        assert abs(float(np.mean(ProbingSpec(shape="sinusoid").primitive(tau)))) < 1e-10
        assert abs(float(np.mean(ProbingSpec(shape="square").primitive(tau)))) < 1e-10

    def test_primitive_derivative_is_wave(self) -> None:
        """dS0/dtau = s for the sinusoid."""
        spec = ProbingSpec()
        tau = np.linspace(0.05, 0.95, 19)
        h = 1e-6
        slope = (spec.primitive(tau + h) - spec.primitive(tau - h)) / (2.0 * h)

        np.testing.assert_allclose(slope, spec.wave(tau), atol=1e-6)

    def test_uncentered_primitive_offset(self) -> None:
        """Without centering the sinusoid primitive starts at zero."""
        spec = ProbingSpec(centered=False)

        assert float(spec.primitive(0.0)) == pytest.approx(0.0, abs=1e-15)

    def test_S_values_uses_epsilon(self) -> None:
        """S(t) evaluates S0 at t / epsilon."""
        spec = ProbingSpec(epsilon=0.01)
        t = np.array([0.0, 0.0025, 0.005])

        np.testing.assert_allclose(spec.S_values(t), spec.primitive(t / 0.01))

    def test_sinusoid_richness(self) -> None:
        """The integral of S^2 over one period is epsilon / (8 pi^2)."""
        eps = 0.01
        spec = ProbingSpec(epsilon=eps)
        n = 1000
        t = np.arange(n) * eps / n
        integral = float(np.sum(spec.S_values(t) ** 2) * eps / n)

        assert integral == pytest.approx(eps / (8.0 * math.pi**2), abs=1e-8)


class TestTabulated:
    """Tests for tabulated waveforms."""

    def test_sample_mean_removed(self) -> None:
        """An offset in the samples is removed at construction."""
        samples = tuple(1.0 + math.sin(2.0 * math.pi * k / 16) for k in range(16))
        spec = ProbingSpec(shape="tabulated", samples=samples)

        assert abs(sum(spec.samples)) < 1e-12

    def test_interpolates_samples(self) -> None:
        """At the sample phases s equals the (centered) samples."""
        spec = ProbingSpec(shape="tabulated", samples=(0.0, 1.0, 0.0, -1.0))

        assert s_eval(spec, 0.25) == pytest.approx(1.0)
        assert s_eval(spec, 0.125) == pytest.approx(0.5)
        assert s_eval(spec, 1.75) == pytest.approx(-1.0)

    def test_primitive_zero_mean(self) -> None:
        """The tabulated primitive has zero mean over a period."""
        samples = tuple(math.sin(2.0 * math.pi * k / 32) + 0.3 * math.cos(6.0 * math.pi * k / 32) for k in range(32))
        spec = ProbingSpec(shape="tabulated", samples=samples)
        tau = (np.arange(200_000) + 0.5) / 200_000.0

        assert abs(float(np.mean(spec.primitive(tau)))) < 1e-9

    def test_primitive_close_to_sinusoid(self) -> None:
        """A finely tabulated sine reproduces the analytic primitive."""
        samples = tuple(math.sin(2.0 * math.pi * k / 256) for k in range(256))
        spec = ProbingSpec(shape="tabulated", samples=samples)
        tau = np.linspace(0.0, 1.0, 41)

        np.testing.assert_allclose(spec.primitive(tau), ProbingSpec().primitive(tau), atol=1e-4)

    def test_load_tabulated(self, tmp_path: Path) -> None:
        """Sample files hold one value per line."""
        path = tmp_path / "wave.txt"
        path.write_text("0\n1\n0\n-1\n", encoding="utf-8")

        spec = load_tabulated(path, epsilon=0.01, scaling=(2.0,))

        assert spec.shape == "tabulated"
        assert spec.b.tolist() == [2.0]
        assert s_eval(spec, 0.25) == pytest.approx(1.0)

    def test_load_missing_file(self, tmp_path: Path) -> None:
        """Unreadable sample files raise ConfigurationError."""
        with pytest.raises(ConfigurationError, match="cannot read probe samples"):
            load_tabulated(tmp_path / "missing.txt", epsilon=0.01)


class TestInjectedInput:
    """Tests for injected_input."""

    def test_adds_scaled_probe(self) -> None:
        """u = u_C + s(t/epsilon) b."""
        spec = ProbingSpec(epsilon=0.01, scaling=(2.0,))

        u = injected_input(spec, [1.0], 0.0025)

        assert u[0] == pytest.approx(3.0)

    def test_zero_at_period_start(self) -> None:
        """The sinusoid vanishes at integer phases."""
        spec = ProbingSpec(epsilon=0.01)

        assert injected_input(spec, [0.5], 0.0)[0] == pytest.approx(0.5)
