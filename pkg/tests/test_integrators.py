"""Tests for the fixed-step integration schemes."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from signal_injection import IdaPbcGains, MagLevModel, SimulationAbort, ida_pbc, rk4_step
from signal_injection.integrators import affine_decay_step


class TestRk4Step:
    """Tests for rk4_step."""

    def test_linear_system_matches_matrix_exponential(self) -> None:
        """A damped oscillator follows expm(A t) x0."""
        A = np.array([[0.0, 1.0], [-100.0, -2.0]])
        x0 = np.array([1.0, 0.0])
        dt = 1e-3
        x = x0.copy()
        for k in range(1000):
            x = rk4_step(lambda _t, s: A @ s, x, k * dt, dt)

        np.testing.assert_allclose(x, expm(A * 1.0) @ x0, atol=1e-8)

    def test_maglev_closed_loop_matches_reference_solver(self, maglev: MagLevModel) -> None:
        """The IDA-PBC loop agrees with a tight adaptive solution."""
        params = maglev.params
        gains = IdaPbcGains(lambda_star=params.lambda_star)

        def closed_loop(_t: float, x: np.ndarray) -> np.ndarray:
            current = params.current(float(x[0]), float(x[1]))
            u = ida_pbc(gains, x, params.R, current, params.m)
            return maglev.dynamics(x, np.array([u]))

        x0 = np.array([params.lambda_star * 1.01, 2e-4, 0.0])
        dt = 1e-4
        x = x0.copy()
        for k in range(1000):
            x = rk4_step(closed_loop, x, k * dt, dt)
        reference = solve_ivp(closed_loop, (0.0, 0.1), x0, method="DOP853", rtol=1e-11, atol=1e-13)

        np.testing.assert_allclose(x, reference.y[:, -1], rtol=1e-6, atol=1e-10)

    def test_non_finite_derivative(self) -> None:
        """A non-finite stage aborts with the given label."""
        with pytest.raises(SimulationAbort, match="non-finite plant state at t=0.5") as exc_info:
            rk4_step(lambda _t, s: np.full_like(s, np.nan), np.array([1.0]), 0.5, 0.1, "plant state")

        assert exc_info.value.snapshot == (1.0,)


class TestAffineDecayStep:
    """Tests for the exact affine step."""

    def test_matches_matrix_exponential(self) -> None:
        """The step equals the exponential of the augmented system."""
        rate, drive, dt, x0 = 300.0, 5.0, 1e-2, 0.4
        augmented = np.array([[-rate, drive], [0.0, 0.0]])

        expected = (expm(augmented * dt) @ np.array([x0, 1.0]))[0]

        assert float(affine_decay_step(x0, drive, rate, dt)) == pytest.approx(expected, rel=1e-12)

    def test_never_passes_equilibrium(self) -> None:
        """Very stiff steps land on drive / rate, not beyond it."""
        value = float(affine_decay_step(0.0, 2.0, 1e9, 1.0))

        assert value == pytest.approx(2e-9)

    def test_zero_rate(self) -> None:
        """Without decay the drive is integrated."""
        value = affine_decay_step(np.array([1.0, 2.0]), np.array([3.0, -1.0]), np.array([0.0, 0.0]), 0.5)

        np.testing.assert_allclose(value, [2.5, 1.5])
