"""Tests for the virtual-output driven observers."""

from __future__ import annotations

import logging
import math

import numpy as np
import pytest

from signal_injection import (
    ConfigurationError,
    ElectricalObserver,
    IdaPbcGains,
    MagLevAdaptiveObserver,
    MagLevLuenberger,
    MagLevModel,
    MagLevObserverGains,
    OpticalSwitchModel,
    OpticalSwitchObserver,
    electrical_observer_step,
    ida_pbc,
    maglev_adaptive_observer_step,
    optsw_observer_step,
    rk4_step,
)
from signal_injection.observers import (
    ElectricalObserverState,
    MagLevObserverState,
    OptSwObserverState,
    ProjectionFloor,
    kkl_decay_rate,
    project_virtual_output,
    virtual_output_floor,
)


def _equilibrium_signals(model: MagLevModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(y, u, yv) of the MagLev plant resting at q = 0."""
    params = model.params
    x = np.array([params.lambda_star, 0.0, 0.0])
    return model.natural_output(x), np.array([params.equilibrium_voltage(0.0)]), model.true_virtual_output(x)


class TestProjectionFloor:
    """Tests for the virtual-output projection."""

    def test_passes_values_above_floor(self) -> None:
        """Values above the floor are unchanged."""
        floor = ProjectionFloor(0.1)

        assert floor.apply(0.5, 1e-3) == 0.5
        assert floor.excitation_lost is False

    def test_clamps_and_flags_dwell(self) -> None:
        """Staying on the floor longer than the dwell flags lost excitation."""
        floor = ProjectionFloor(0.1, dwell=0.045, logger=logging.getLogger("test"))
        for _ in range(4):
            assert floor.apply(-1.0, 0.01) == 0.1

        assert floor.excitation_lost is False
        floor.apply(0.05, 0.01)
        assert floor.excitation_lost is True

    def test_dwell_resets(self) -> None:
        """Leaving the floor resets the dwell timer."""
        floor = ProjectionFloor(0.1, dwell=0.05)
        for _ in range(4):
            floor.apply(0.0, 0.01)
        floor.apply(1.0, 0.01)
        for _ in range(4):
            floor.apply(0.0, 0.01)

        assert floor.excitation_lost is False

    def test_invalid_settings(self) -> None:
        """Floor and dwell must be positive."""
        with pytest.raises(ConfigurationError, match="floor must be positive"):
            ProjectionFloor(0.0)

        with pytest.raises(ConfigurationError, match="dwell must be positive"):
            ProjectionFloor(0.1, dwell=0.0)

    def test_project_function(self) -> None:
        """project_virtual_output is max(yv_hat, floor)."""
        assert project_virtual_output(-0.3, 0.2) == 0.2
        assert project_virtual_output(0.7, 0.2) == 0.7

    def test_floor_from_nominal(self) -> None:
        """The floor is a fraction of the nominal virtual output."""
        assert virtual_output_floor(0.8, 0.05) == pytest.approx(0.04)

        with pytest.raises(ConfigurationError, match="positive and finite"):
            virtual_output_floor(0.0, 0.05)


class TestElectricalObserver:
    """Tests for the electrical-coordinate observer."""

    def test_converges_on_maglev(self, maglev: MagLevModel) -> None:
        """The flux error decays at gamma * y_v^2."""
        general = maglev.to_quadratic()
        y, u, yv = _equilibrium_signals(maglev)
        gamma = 8000.0
        dt = 1e-4
        state = ElectricalObserverState(x_hat_E=np.zeros(1), gamma=gamma)
        initial_error = maglev.params.lambda_star
        for _ in range(10):
            electrical_observer_step(state, y, u, yv, general, dt)

        error = maglev.params.lambda_star - float(state.x_hat_E[0])
        expected = initial_error * math.exp(-gamma * float(yv[0]) ** 2 * 10 * dt)
        assert error == pytest.approx(expected, rel=1e-2)

        for _ in range(190):
            electrical_observer_step(state, y, u, yv, general, dt)
        assert float(state.x_hat_E[0]) == pytest.approx(maglev.params.lambda_star, abs=1e-9)

    def test_wrong_state_length(self, maglev: MagLevModel) -> None:
        """The estimate must match the number of electrical ports."""
        y, u, yv = _equilibrium_signals(maglev)
        state = ElectricalObserverState(x_hat_E=np.zeros(2), gamma=1.0)

        with pytest.raises(ConfigurationError, match="x_hat_E must have length 1"):
            electrical_observer_step(state, y, u, yv, maglev.to_quadratic(), 1e-4)

    def test_observer_object(self, maglev: MagLevModel) -> None:
        """The observer object reports hatted channel names and no mechanical state."""
        y, u, yv = _equilibrium_signals(maglev)
        obs = ElectricalObserver(maglev.to_quadratic(), gamma=8000.0, logger=logging.getLogger("test"))
        obs.start(y, u, yv)
        obs.step(y, u, yv, 1e-4)

        assert obs.started is True
        assert list(obs.channels()) == ["lambda_hat"]
        with pytest.raises(ConfigurationError, match="does not estimate the mechanical state"):
            obs.state_estimate()

    def test_invalid_gain(self) -> None:
        """The gain must be positive."""
        with pytest.raises(ConfigurationError, match="gain must be positive"):
            ElectricalObserverState(x_hat_E=np.zeros(1), gamma=0.0)


class TestOpticalSwitchObserver:
    """Tests for the optical-switch observer."""

    def test_charge_error_decay(self, optical_switch: OpticalSwitchModel) -> None:
        """With exact y_v the charge error decays at gamma * (y_v / b)^2."""
        x = np.array([1.0, 0.5, 0.0])
        y = float(optical_switch.natural_output(x)[0])
        yv = float(optical_switch.true_virtual_output(x)[0])
        state = OptSwObserverState(Q_hat=0.0, p_hat=0.0, gamma=20.0)
        for _ in range(100):
            Q_hat, q_hat, _ = optsw_observer_step(state, y, y, yv, optical_switch, 1e-3)

        assert 1.0 - Q_hat == pytest.approx(math.exp(-20.0 * yv**2 * 0.1), rel=1e-6)
        assert q_hat == pytest.approx(0.5)

    def test_momentum_at_rest(self, optical_switch: OpticalSwitchModel) -> None:
        """At a consistent equilibrium the momentum estimate stays at zero."""
        q0 = 0.5
        x = np.array([optical_switch.params.equilibrium_charge(q0), q0, 0.0])
        y = float(optical_switch.natural_output(x)[0])
        yv = float(optical_switch.true_virtual_output(x)[0])
        state = OptSwObserverState(Q_hat=float(x[0]), p_hat=0.0, gamma=20.0)
        for _ in range(100):
            optsw_observer_step(state, y, y, yv, optical_switch, 1e-3)

        assert state.p_hat == pytest.approx(0.0, abs=1e-12)
        assert state.Q_hat == pytest.approx(float(x[0]), rel=1e-12)

    def test_start_inverts_output(self, optical_switch: OpticalSwitchModel) -> None:
        """start sets Q_hat and q_hat from the first measurement."""
        x = np.array([1.2, 0.4, 0.0])
        y = optical_switch.natural_output(x)
        yv = optical_switch.true_virtual_output(x)
        obs = OpticalSwitchObserver(optical_switch, gamma=20.0, floor=0.05)

        obs.start(y, y, yv)

        assert obs.channels()["Q_hat"] == pytest.approx(1.2)
        assert obs.channels()["q_hat"] == pytest.approx(0.4)
        np.testing.assert_allclose(obs.state_estimate(), [1.2, 0.4, 0.0])

    def test_floor_protects_position(self, optical_switch: OpticalSwitchModel) -> None:
        """A negative y_v estimate is clamped before the position is inverted."""
        obs = OpticalSwitchObserver(optical_switch, gamma=20.0, floor=0.05)
        obs.start(np.array([1.0]), np.array([1.0]), np.array([-2.0]))

        assert obs.channels()["q_hat"] == pytest.approx(1.0 / 0.05 - 1.0)


class TestMagLevAdaptiveObserver:
    """Tests for the adaptive MagLev observer."""

    def test_kkl_rate(self) -> None:
        """The KKL rate is gamma_p / (k m)."""
        model = MagLevModel()
        rate = kkl_decay_rate(MagLevObserverGains(gamma_p=30.0), model.params)

        assert rate == pytest.approx(30.0 / (model.params.k * model.params.m))
        assert 55000.0 < rate < 56000.0

    def test_momentum_error_decay(self, maglev: MagLevModel) -> None:
        """With exact flux and y_v the momentum error decays at the KKL rate."""
        y, u, yv = _equilibrium_signals(maglev)
        gains = MagLevObserverGains()
        obs = MagLevAdaptiveObserver(
            maglev, gains, floor=0.04, R_hat0=maglev.params.R, p_hat0=1e-3
        )
        obs.start(y, u, yv)
        dt = 1e-6
        for _ in range(20):
            obs.step(y, u, yv, dt)

        measured = -math.log(obs.p_hat / 1e-3) / (20 * dt)
        assert measured == pytest.approx(kkl_decay_rate(gains, maglev.params), rel=0.01)

    def test_resistance_converges(self, maglev: MagLevModel) -> None:
        """At rest the resistance error decays at gamma_R * y^2."""
        y, u, yv = _equilibrium_signals(maglev)
        gains = MagLevObserverGains(gamma_R=50_000.0)
        obs = MagLevAdaptiveObserver(maglev, gains, floor=0.04, R_hat0=2.0)
        obs.start(y, u, yv)
        dt = 1e-5
        for _ in range(1000):
            obs.step(y, u, yv, dt)

        expected = (maglev.params.R - 2.0) * math.exp(-gains.gamma_R * float(y[0]) ** 2 * 1000 * dt)
        assert maglev.params.R - obs.resistance_estimate() == pytest.approx(expected, rel=1e-3)

    def test_regression_identity_at_start(self, maglev: MagLevModel) -> None:
        """Y_R = R phi_R for consistent filters at equilibrium."""
        y, u, yv = _equilibrium_signals(maglev)
        obs = MagLevAdaptiveObserver(maglev, MagLevObserverGains(), floor=0.04, R_hat0=2.0)

        obs.start(y, u, yv)
        channels = obs.channels()

        assert channels["Y_R"] == pytest.approx(maglev.params.R * channels["phi_R"], rel=1e-12)
        assert channels["q_hat"] == pytest.approx(0.0, abs=1e-12)
        assert obs.x2_hat == pytest.approx(float(yv[0]))

    def test_regression_identity_along_trajectory(self, maglev: MagLevModel) -> None:
        """On a moving IDA-PBC trajectory Y_R tracks R phi_R up to a residual first order in dt."""
        params = maglev.params
        a = MagLevObserverGains().a

        def worst_residual(dt: float) -> tuple[float, float]:
            law = IdaPbcGains(lambda_star=params.lambda_star)
            x = np.array([params.lambda_star, 5e-4, 0.0])
            y = maglev.natural_output(x)
            u = np.array([ida_pbc(law, x, params.R, float(y[0]), params.m)])
            yv = maglev.true_virtual_output(x)
            obs = MagLevAdaptiveObserver(maglev, MagLevObserverGains(), floor=0.04, R_hat0=params.R)
            obs.start(y, u, yv)
            residual = 0.0
            scale = 0.0
            for k in range(round(0.5 / dt)):
                obs.step(y, u, yv, dt)

                def plant(_t: float, state: np.ndarray, u: np.ndarray = u) -> np.ndarray:
                    return maglev.dynamics(state, u)

                x = rk4_step(plant, x, k * dt, dt, "plant state")
                y = maglev.natural_output(x)
                u = np.array([ida_pbc(law, x, params.R, float(y[0]), params.m)])
                yv = maglev.true_virtual_output(x)
                if (k + 1) * dt >= 0.05:
                    y_r = obs.state.regression_output(float(y[0]), float(yv[0]) / maglev.b, a)
                    expected = params.R * obs.state.phi_R
                    residual = max(residual, abs(y_r - expected))
                    scale = max(scale, abs(expected))
            return residual, scale

        coarse, scale = worst_residual(1e-4)
        fine, _ = worst_residual(5e-5)

        assert coarse / scale < 0.05
        assert 1.6 <= coarse / fine <= 2.5

    def test_flux_forms(self, maglev: MagLevModel) -> None:
        """The corrected flux injection converges and the verbatim sign diverges."""
        y, u, yv = _equilibrium_signals(maglev)
        lambda_star = maglev.params.lambda_star
        x2 = float(yv[0]) / maglev.b
        errors: dict[str, list[float]] = {}
        for form in ("corrected", "verbatim"):
            gains = MagLevObserverGains(flux_form=form)
            state = MagLevObserverState(
                R_hat=maglev.params.R,
                x1_hat=1.05 * lambda_star,
                z=gains.gamma_p * x2,
                v1=float(u[0]),
                v2=float(y[0]) / x2,
                phi_R=-float(y[0]),
            )
            trace = []
            for _ in range(200):
                _, flux, _, _ = maglev_adaptive_observer_step(
                    state, gains, float(y[0]), float(u[0]), float(yv[0]), maglev, 1e-5
                )
                trace.append(abs(flux - lambda_star))
            errors[form] = trace

        initial = 0.05 * lambda_star
        corrected = np.asarray(errors["corrected"])
        verbatim = np.asarray(errors["verbatim"])
        assert np.all(np.diff(corrected) <= 1e-15)
        assert corrected[-1] < 1e-3 * initial
        assert np.all(np.diff(verbatim) > 0.0)
        assert verbatim[-1] > 100.0 * initial

    def test_reports_guesses_before_start(self, maglev: MagLevModel) -> None:
        """Before start the initial guesses are reported."""
        obs = MagLevAdaptiveObserver(
            maglev, MagLevObserverGains(), floor=0.04, R_hat0=2.0, q_hat0=0.001, p_hat0=0.002
        )

        np.testing.assert_allclose(
            obs.state_estimate(), [maglev.params.lambda_star, 0.001, 0.002]
        )
        assert obs.started is False

    def test_step_function(self, maglev: MagLevModel) -> None:
        """The functional form returns (R_hat, lambda_hat, q_hat, p_hat)."""
        y, u, yv = _equilibrium_signals(maglev)
        gains = MagLevObserverGains()
        x2 = float(yv[0])
        state = MagLevObserverState(
            R_hat=maglev.params.R,
            x1_hat=maglev.params.lambda_star,
            z=gains.gamma_p * x2,
            v1=float(u[0]),
            v2=float(y[0]) / x2,
            phi_R=-float(y[0]),
        )

        result = maglev_adaptive_observer_step(
            state, gains, float(y[0]), float(u[0]), x2, maglev, 1e-5
        )

        assert result[0] == pytest.approx(maglev.params.R)
        assert result[1] == pytest.approx(maglev.params.lambda_star)
        assert result[2] == pytest.approx(0.0, abs=1e-12)
        assert result[3] == pytest.approx(0.0, abs=1e-9)

    def test_invalid_gains(self) -> None:
        """Gains must be positive and the flux form known."""
        with pytest.raises(ConfigurationError, match="gamma_p must be positive"):
            MagLevObserverGains(gamma_p=0.0)

        with pytest.raises(ConfigurationError, match="unknown flux form"):
            MagLevObserverGains(flux_form="other")

    def test_invalid_initial_resistance(self, maglev: MagLevModel) -> None:
        """The initial resistance estimate must be positive."""
        with pytest.raises(ConfigurationError, match="initial resistance"):
            MagLevAdaptiveObserver(maglev, MagLevObserverGains(), floor=0.04, R_hat0=0.0)


class TestMagLevLuenberger:
    """Tests for the Luenberger momentum observer."""

    def test_corrected_steady_state(self, maglev: MagLevModel) -> None:
        """With a biased flux the estimates settle where both derivatives vanish."""
        params = maglev.params
        km = params.k * params.m
        x2 = params.c / params.k
        x1 = 1.1 * params.lambda_star
        force = x1 * x1 / (2.0 * params.k) - params.m * params.G
        obs = MagLevLuenberger(params, l1=60.0, l2=0.5, logger=logging.getLogger("test"))
        obs.start(x2, 0.0)
        for _ in range(2000):
            obs.step(x2, x1, 1e-3)

        assert obs.state.z1 == pytest.approx(x2 - force / 0.5, rel=1e-6)
        assert obs.p_hat == pytest.approx(km * 60.0 * force / 0.5, rel=1e-6)

    def test_verbatim_steady_state(self, maglev: MagLevModel) -> None:
        """The verbatim form settles at z2 = x2 + force / l2."""
        params = maglev.params
        x2 = params.c / params.k
        x1 = 1.1 * params.lambda_star
        force = x1 * x1 / (2.0 * params.k) - params.m * params.G
        obs = MagLevLuenberger(params, l1=60.0, l2=0.5, form="verbatim")
        obs.start(x2, 0.0)
        for _ in range(4000):
            obs.step(x2, x1, 1e-2)

        assert obs.p_hat == pytest.approx(x2 + force / 0.5, rel=1e-6)

    def test_invalid_settings(self, maglev: MagLevModel) -> None:
        """Gains must be positive and the form known."""
        with pytest.raises(ConfigurationError, match="gains must be positive"):
            MagLevLuenberger(maglev.params, l1=0.0, l2=0.5)

        with pytest.raises(ConfigurationError, match="unknown Luenberger form"):
            MagLevLuenberger(maglev.params, l1=60.0, l2=0.5, form="other")
