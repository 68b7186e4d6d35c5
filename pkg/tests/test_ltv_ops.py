"""Tests for the sampled delay, windowed-mean and lag operators."""

from __future__ import annotations

import cmath
import math

import numpy as np
import pytest

from signal_injection import (
    ConfigurationError,
    DelayOperator,
    LowpassOperator,
    ProbingSpec,
    RegressionSignal,
    WzohOperator,
    build_Y,
    gd_freq_response,
    gd_table,
    snap_to_grid,
)


class TestSnapToGrid:
    """Tests for snap_to_grid."""

    def test_integer_multiple(self) -> None:
        """Lengths on the grid give their step count."""
        assert snap_to_grid(0.01, 0.0001, "filter.delay") == 100

    def test_not_a_multiple(self) -> None:
        """Off-grid lengths are rejected with the parameter name."""
        with pytest.raises(ConfigurationError, match="not an integer multiple") as exc_info:
            snap_to_grid(0.015, 0.01, "filter.delay")

        assert exc_info.value.key == "filter.delay"

    def test_non_positive(self) -> None:
        """Zero lengths and steps are rejected."""
        with pytest.raises(ConfigurationError, match="must be positive"):
            snap_to_grid(0.0, 0.01, "filter.delay")

        with pytest.raises(ConfigurationError, match="dt must be positive"):
            snap_to_grid(0.01, 0.0, "filter.delay")


class TestDelayOperator:
    """Tests for DelayOperator."""

    def test_outputs_lag_input(self) -> None:
        """Output k is input k - steps, zero before that."""
        op = DelayOperator(0.3, 0.1)
        outputs = [op.step(float(v)) for v in range(1, 7)]

        assert op.steps == 3
        assert outputs == [0.0, 0.0, 0.0, 1.0, 2.0, 3.0]

    def test_warm_after_delay(self) -> None:
        """The operator is warm once the padding has left the buffer."""
        op = DelayOperator(0.3, 0.1)
        for _ in range(3):
            op.step(1.0)

        assert op.warm is False
        op.step(1.0)
        assert op.warm is True

    def test_vector_channels(self) -> None:
        """Vector inputs are delayed channel by channel."""
        op = DelayOperator(0.2, 0.1, width=2)
        op.step(np.array([1.0, 10.0]))
        op.step(np.array([2.0, 20.0]))
        out = op.step(np.array([3.0, 30.0]))

        np.testing.assert_array_equal(out, [1.0, 10.0])


class TestWzohOperator:
    """Tests for the windowed mean."""

    def test_ramp_mean(self) -> None:
        """The mean of v = t over [t - w, t] is t - w/2."""
        dt = 0.01
        op = WzohOperator(0.2, dt)
        out = 0.0
        for k in range(50):
            out = op.step(k * dt)

        assert op.warm is True
        assert out == pytest.approx(49 * dt - 0.1, abs=1e-12)

    def test_constant_after_warmup(self) -> None:
        """A constant input averages to itself once warm."""
        op = WzohOperator(0.1, 0.01)
        out = 0.0
        for _ in range(20):
            out = op.step(3.0)

        assert out == pytest.approx(3.0)

    def test_removes_injected_ripple(self) -> None:
        """epsilon S y_v averages out over two probing periods."""
        eps = 0.01
        dt = eps / 100
        spec = ProbingSpec(epsilon=eps)
        op = WzohOperator(2 * eps, dt)
        out = 1.0
        for k in range(400):
            out = op.step(eps * float(spec.S_values(k * dt)) * 2.0)

        assert abs(out) < 1e-8

    def test_recovers_delayed_average_to_second_order(self) -> None:
        """The 2 epsilon mean of an injected output tracks y_bar(t - epsilon) with an O(epsilon^2) error."""

        def sup_error(eps: float) -> float:
            dt = eps / 100
            spec = ProbingSpec(epsilon=eps)
            op = WzohOperator(2 * eps, dt)
            worst = 0.0
            for k in range(round(1.0 / dt) + 1):
                t = k * dt
                y_bar = 1.0 + 0.5 * math.sin(2.0 * t)
                yv = 2.0 + math.sin(3.0 * t)
                out = op.step(y_bar + eps * float(spec.S_values(t)) * yv)
                if t >= 0.1:
                    worst = max(worst, abs(out - (1.0 + 0.5 * math.sin(2.0 * (t - eps)))))
            return worst

        ratio = sup_error(0.02) / sup_error(0.01)

        assert 3.0 <= ratio <= 5.5

    @pytest.mark.parametrize("kind", ["delay", "wzoh"])
    def test_gain_at_most_one(self, kind: str) -> None:
        """Bounded inputs give outputs bounded by the same max-norm, warm-up included."""
        rng = np.random.default_rng(5)
        op = DelayOperator(0.01, 0.001) if kind == "delay" else WzohOperator(0.02, 0.001)
        inputs = rng.uniform(-1.0, 1.0, size=2000)
        inputs[::97] = 1.0
        outputs = np.array([op.step(float(v)) for v in inputs])

        assert np.abs(outputs).max() <= np.abs(inputs).max() + 1e-12
        # a long constant stretch reaches the bound
        for _ in range(40):
            last = op.step(-1.0)
        assert last == pytest.approx(-1.0, abs=1e-12)


class TestLowpassOperator:
    """Tests for the first-order lag."""

    def test_single_step(self) -> None:
        """One step from rest follows 1 - exp(-a dt)."""
        op = LowpassOperator(500.0, 1e-5)

        assert op.step(1.0) == pytest.approx(1.0 - math.exp(-500.0 * 1e-5), rel=1e-9)

    def test_step_response_time(self) -> None:
        """The step response crosses 0.99 near ln(100)/a."""
        a = 500.0
        dt = 1e-5
        op = LowpassOperator(a, dt)
        crossing = None
        for k in range(1, 2000):
            if op.step(1.0) >= 0.99:
                crossing = k * dt
                break

        assert crossing is not None
        assert crossing == pytest.approx(math.log(100.0) / a, rel=0.01)

    def test_initial_state(self) -> None:
        """The state starts at the given initial value."""
        op = LowpassOperator(10.0, 1e-3, width=2, initial=np.array([1.0, 2.0]))

        out = op.step(np.array([1.0, 2.0]))

        np.testing.assert_allclose(out, [1.0, 2.0])

    def test_invalid_pole(self) -> None:
        """Non-positive poles are rejected."""
        with pytest.raises(ConfigurationError, match="pole a must be positive"):
            LowpassOperator(0.0, 1e-3)


class TestRegressionSignal:
    """Tests for Y = D_d[y] - Z_2d[y]."""

    def test_recovers_scaled_primitive(self) -> None:
        """For y = 1 + 2 epsilon S, Y equals 2 epsilon S(t - d)."""
        eps = 0.01
        dt = eps / 100
        spec = ProbingSpec(epsilon=eps)
        regression = RegressionSignal(eps, dt)
        worst = 0.0
        for k in range(600):
            t = k * dt
            y = 1.0 + eps * float(spec.S_values(t)) * 2.0
            Y = regression.step(np.array([y]))
            if regression.warm:
                expected = 0.02 * float(spec.S_values(t - eps))
                worst = max(worst, abs(float(Y[0]) - expected))

        assert worst < 1e-6

    def test_warm_after_window(self) -> None:
        """Y is warm only after the 2d window has filled."""
        regression = RegressionSignal(0.01, 0.001)
        for _ in range(20):
            regression.step(np.array([1.0]))

        assert regression.warm is False
        regression.step(np.array([1.0]))
        assert regression.warm is True

    def test_constant_output_gives_zero(self) -> None:
        """A constant output has no regression signal once warm."""
        regression = RegressionSignal(0.01, 0.001)
        Y = np.zeros(1)
        for _ in range(40):
            Y = regression.step(np.array([5.0]))

        assert abs(float(Y[0])) < 1e-12

    def test_linear_in_output(self) -> None:
        """Y of a combination of outputs is the same combination of their Y."""
        rng = np.random.default_rng(13)
        first = rng.standard_normal(300)
        second = rng.standard_normal(300)
        ops = [RegressionSignal(0.01, 0.001) for _ in range(3)]
        for a, b in zip(first, second, strict=True):
            Y_first = ops[0].step(np.array([a]))
            Y_second = ops[1].step(np.array([b]))
            Y_combined = ops[2].step(np.array([2.0 * a - 3.0 * b]))

            np.testing.assert_allclose(Y_combined, 2.0 * Y_first - 3.0 * Y_second, atol=1e-11)

    def test_mismatched_steps(self) -> None:
        """Operators on different grids cannot be paired."""
        delay = DelayOperator(0.01, 0.001)
        wzoh = WzohOperator(0.02, 0.0005)

        with pytest.raises(ConfigurationError, match="different steps"):
            build_Y(1.0, delay, wzoh)

    def test_mismatched_window(self) -> None:
        """The window must be exactly twice the delay."""
        delay = DelayOperator(0.01, 0.001)
        wzoh = WzohOperator(0.03, 0.001)

        with pytest.raises(ConfigurationError, match="twice the delay"):
            build_Y(1.0, delay, wzoh)


class TestGdFrequencyResponse:
    """Tests for the frequency response of the regression high-pass."""

    def test_zero_frequency(self) -> None:
        """G_d blocks DC."""
        assert gd_freq_response(0.01, 0.0) == 0j

    def test_unit_gain_at_half_sample_rate(self) -> None:
        """|G_d(j pi/d)| = 1."""
        d = 0.01

        assert abs(gd_freq_response(d, math.pi / d)) == pytest.approx(1.0, abs=1e-12)

    def test_small_at_low_frequency(self) -> None:
        """Slow components are strongly attenuated."""
        assert abs(gd_freq_response(0.01, 1.0)) < 0.02

    def test_matches_direct_formula(self) -> None:
        """The factored form equals e^{-ds} + (e^{-2ds} - 1)/(2ds)."""
        d = 0.01
        for omega in (0.05, 10.0, 70.0, 250.0):
            s = 1j * omega
            direct = cmath.exp(-d * s) + (cmath.exp(-2 * d * s) - 1.0) / (2 * d * s)

            assert gd_freq_response(d, omega) == pytest.approx(direct, abs=1e-9)

    def test_magnitude_monotone(self) -> None:
        """|G_d| increases on (0, pi/(2d)]."""
        d = 0.01
        omegas = np.linspace(1.0, math.pi / (2 * d), 200)
        magnitude, _ = gd_table(d, omegas)

        assert np.all(np.diff(magnitude) > 0.0)

    def test_table_phase(self) -> None:
        """The phase is -omega d while the gain factor is positive."""
        d = 0.01
        _, phase = gd_table(d, [100.0])

        assert phase[0] == pytest.approx(-1.0)

    def test_invalid_delay(self) -> None:
        """d must be positive."""
        with pytest.raises(ConfigurationError, match="d must be positive"):
            gd_freq_response(0.0, 1.0)
