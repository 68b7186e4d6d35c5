"""State observers driven by the estimated virtual output.

Three observers are provided:

- the electrical-coordinate observer of a general quadratic plant, which
  uses the linear regression B_E y = Y_v x_E;
- the full-state observer of the optical switch, which recovers the
  position algebraically from the virtual output;
- the adaptive MagLev observer, which also estimates the coil resistance
  from a filtered linear regression and the momentum through a KKL
  coordinate change z = p + gamma_p * x2.

A Luenberger observer for the MagLev momentum is included for comparison.

Every observer consumes the virtual output after projection onto
[floor, inf). An estimate pinned at the floor for longer than the
configured dwell means the probing signal no longer excites the output;
this is logged once as a warning and reported by ``excitation_lost``.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from .constants import DEFAULT_FLOOR_DWELL
from .ems_models import MagLevModel, MagLevParams, OpticalSwitchModel, QuadraticEmsModel
from .exceptions import ConfigurationError
from .integrators import rk4_step

FloatArray = npt.NDArray[np.float64]

FLUX_FORMS: frozenset[str] = frozenset({"corrected", "verbatim"})
LUENBERGER_FORMS: frozenset[str] = frozenset({"corrected", "verbatim"})


class ProjectionFloor:
    """Lower clamp on the virtual-output estimate with dwell monitoring.

    Attributes:
        floor: Smallest value passed on to an observer.
        dwell: Time on the floor after which excitation counts as lost.
        excitation_lost: Sticky flag, set once the dwell is exceeded.
    """

    def __init__(
        self,
        floor: float,
        dwell: float = DEFAULT_FLOOR_DWELL,
        logger: logging.Logger | None = None,
    ) -> None:
        if floor <= 0.0:
            raise ConfigurationError("projection floor must be positive", key="observer.floor")
        if dwell <= 0.0:
            raise ConfigurationError("floor dwell must be positive", key="observer.floor_dwell")
        self.floor = floor
        self.dwell = dwell
        self.excitation_lost = False
        self._time_on_floor = 0.0
        self._logger = logger

    def apply(self, yv_hat: float, dt: float = 0.0) -> float:
        """Clamp ``yv_hat`` and account ``dt`` of dwell if it was clamped."""
        if yv_hat > self.floor:
            self._time_on_floor = 0.0
            return yv_hat
        self._time_on_floor += dt
        if self._time_on_floor > self.dwell and not self.excitation_lost:
            self.excitation_lost = True
            if self._logger:
                self._logger.warning(
                    "Virtual-output estimate held at floor %g for %gs; excitation lost",
                    self.floor,
                    self._time_on_floor,
                )
        return self.floor


def project_virtual_output(yv_hat: float, floor: float) -> float:
    """Return max(yv_hat, floor)."""
    return max(yv_hat, floor)


# --- Electrical coordinates of a general quadratic plant --------------------------------


@dataclass
class ElectricalObserverState:
    """Estimate of the electrical coordinates x_E = (Q, lambda).

    Attributes:
        x_hat_E: Current estimate, length n_C + n_L.
        gamma: Observer gain.
    """

    x_hat_E: FloatArray
    gamma: float

    def __post_init__(self) -> None:
        """Validate the gain."""
        self.x_hat_E = np.atleast_1d(np.asarray(self.x_hat_E, dtype=np.float64)).copy()
        if self.gamma <= 0.0:
            raise ConfigurationError("observer gain must be positive", key="observer.gamma")


def electrical_observer_step(
    state: ElectricalObserverState,
    y: npt.ArrayLike,
    u: npt.ArrayLike,
    yv_hat: npt.ArrayLike,
    model: QuadraticEmsModel,
    dt: float,
) -> FloatArray:
    """Advance x_hat_E' = -R_E y + g_E u + gamma Y_v' (B_E y - Y_v x_hat_E).

    Args:
        state: Observer state, updated in place.
        y: Natural output of the general model.
        u: Input applied over the step.
        yv_hat: Virtual-output estimate, one entry per port.
        model: The plant, supplying R_E, g_E, Y_v and B_E.
        dt: Step size.

    Returns:
        The new estimate of x_E.
    """
    if state.x_hat_E.shape != (model.n_inputs,):
        raise ConfigurationError(
            f"x_hat_E must have length {model.n_inputs}, got {state.x_hat_E.shape}"
        )
    y_arr = np.atleast_1d(np.asarray(y, dtype=np.float64))
    u_arr = np.atleast_1d(np.asarray(u, dtype=np.float64))
    r_e, g_e = model.electrical_matrices()
    y_reg, b_e = model.regression_matrices(np.atleast_1d(np.asarray(yv_hat, dtype=np.float64)))
    known = -r_e @ y_arr + g_e @ u_arr
    innovation_source = state.gamma * y_reg.T @ (b_e @ y_arr)
    gain = state.gamma * y_reg.T @ y_reg

    def field(_t: float, xe: FloatArray) -> FloatArray:
        return known + innovation_source - gain @ xe

    state.x_hat_E = rk4_step(field, state.x_hat_E, 0.0, dt, "electrical observer")
    return state.x_hat_E.copy()


# --- Optical switch ---------------------------------------------------------------------


@dataclass
class OptSwObserverState:
    """Optical-switch observer state.

    Attributes:
        Q_hat: Charge estimate.
        p_hat: Momentum estimate.
        gamma: Charge-observer gain.
    """

    Q_hat: float
    p_hat: float
    gamma: float

    def __post_init__(self) -> None:
        """Validate the gain."""
        if self.gamma <= 0.0:
            raise ConfigurationError("observer gain must be positive", key="observer.gamma")


def optsw_observer_step(
    state: OptSwObserverState,
    y: float,
    u: float,
    yv_hat: float,
    model: OpticalSwitchModel,
    dt: float,
) -> tuple[float, float, float]:
    """Advance the optical-switch observer by one step.

    The position estimate is algebraic, q_hat = b/(R_C c1 yv_hat) - c0, and
    held over the step while (Q_hat, p_hat) follow

        Q_hat' = (u - y)/R_C + gamma yv_hat (y/R_C - yv_hat Q_hat / b)
        p_hat' = -a1 q_hat - a2 q_hat^3 + Q_hat^2/(2 c1 (q_hat + c0)^2) - (R_M/m) p_hat

    Args:
        state: Observer state, updated in place.
        y: Measured capacitor voltage.
        u: Applied voltage over the step.
        yv_hat: Projected virtual-output estimate (> 0).
        model: The optical-switch model.
        dt: Step size.

    Returns:
        (Q_hat, q_hat, p_hat) after the step.
    """
    pr = model.params
    q_hat = model.position_from_virtual_output(yv_hat)
    scaled = yv_hat / model.b
    spring = -pr.a1 * q_hat - pr.a2 * q_hat**3
    gap = 2.0 * pr.c1 * (q_hat + pr.c0) ** 2

    def field(_t: float, xi: FloatArray) -> FloatArray:
        charge, p = xi
        return np.array(
            [
                (u - y) / pr.r_c + state.gamma * scaled * (y / pr.r_c - scaled * charge),
                spring + charge * charge / gap - pr.r_m * p / pr.m,
            ]
        )

    xi = rk4_step(field, np.array([state.Q_hat, state.p_hat]), 0.0, dt, "optical-switch observer")
    state.Q_hat, state.p_hat = float(xi[0]), float(xi[1])
    return state.Q_hat, q_hat, state.p_hat


# --- MagLev adaptive observer -----------------------------------------------------------


@dataclass(frozen=True)
class MagLevObserverGains:
    """Gains of the adaptive MagLev observer.

    Attributes:
        gamma_R: Resistance adaptation gain.
        gamma_lambda: Flux observer gain.
        gamma_p: KKL gain; the momentum error decays at gamma_p / (k m).
        a: Pole of the regression filters a / (s + a).
        flux_form: "corrected" uses the gradient injection
            +gamma_lambda x2_hat (y - x2_hat lambda_hat); "verbatim" uses
            -gamma_lambda (y - x2_hat lambda_hat) and is kept for ablation.

    Example:
        >>> gains = MagLevObserverGains(gamma_R=500.0, gamma_lambda=8000.0, gamma_p=30.0, a=500.0)
    """

    gamma_R: float = 500.0
    gamma_lambda: float = 8000.0
    gamma_p: float = 30.0
    a: float = 500.0
    flux_form: str = "corrected"

    def __post_init__(self) -> None:
        """Validate gains."""
        for name in ("gamma_R", "gamma_lambda", "gamma_p", "a"):
            if getattr(self, name) <= 0.0:
                raise ConfigurationError(f"{name} must be positive", key=f"observer.{name}")
        if self.flux_form not in FLUX_FORMS:
            raise ConfigurationError(
                f"unknown flux form {self.flux_form!r}", key="observer.flux_form"
            )


@dataclass
class MagLevObserverState:
    """Internal state of the adaptive MagLev observer.

    Attributes:
        R_hat: Resistance estimate.
        x1_hat: Flux estimate.
        z: KKL state, z = p + gamma_p x2.
        v1: a/(s+a) applied to u.
        v2: a/(s+a) applied to y / x2_hat.
        phi_R: -a/(s+a) applied to y.
    """

    R_hat: float
    x1_hat: float
    z: float = 0.0
    v1: float = 0.0
    v2: float = 0.0
    phi_R: float = 0.0

    def as_array(self) -> FloatArray:
        return np.array([self.R_hat, self.x1_hat, self.z, self.v1, self.v2, self.phi_R])

    def load(self, values: FloatArray) -> None:
        (self.R_hat, self.x1_hat, self.z, self.v1, self.v2, self.phi_R) = (
            float(v) for v in values
        )

    def regression_output(self, y: float, x2_hat: float, a: float) -> float:
        """Y_R = -v1 + a y / x2_hat - a v2, equal to R phi_R for exact data."""
        return -self.v1 + a * y / x2_hat - a * self.v2


def maglev_adaptive_observer_step(
    state: MagLevObserverState,
    gains: MagLevObserverGains,
    y: float,
    u: float,
    yv_hat: float,
    model: MagLevModel,
    dt: float,
) -> tuple[float, float, float, float]:
    """Advance the adaptive MagLev observer by one step.

    With x2_hat = yv_hat / b = (c - q_hat)/k, the internal states follow

        R_hat'  = gamma_R phi_R (Y_R - phi_R R_hat)
        x1_hat' = -R_hat y + u + gamma_lambda x2_hat (y - x2_hat x1_hat)
        z'      = -(gamma_p/(k m)) z + x1_hat^2/(2k) + (gamma_p^2/(k m)) x2_hat - m G
        v1'     = -a v1 + a u
        v2'     = -a v2 + a y / x2_hat
        phi_R'  = -a phi_R - a y

    with (y, u, yv_hat) held over the step.

    Args:
        state: Observer state, updated in place.
        gains: Observer gains.
        y: Measured coil current.
        u: Applied voltage over the step.
        yv_hat: Projected virtual-output estimate (> 0).
        model: The MagLev model (parameters and injection scaling).
        dt: Step size.

    Returns:
        (R_hat, lambda_hat, q_hat, p_hat) after the step.
    """
    pr = model.params
    x2 = yv_hat / model.b
    a = gains.a
    km = pr.k * pr.m
    kkl_rate = gains.gamma_p / km
    kkl_drive = gains.gamma_p * gains.gamma_p / km * x2 - pr.m * pr.G
    verbatim = gains.flux_form == "verbatim"

    def field(_t: float, xi: FloatArray) -> FloatArray:
        r_hat, x1, z, v1, v2, phi = xi
        y_r = -v1 + a * y / x2 - a * v2
        innovation = y - x2 * x1
        correction = -gains.gamma_lambda * innovation if verbatim else (
            gains.gamma_lambda * x2 * innovation
        )
        return np.array(
            [
                gains.gamma_R * phi * (y_r - phi * r_hat),
                -r_hat * y + u + correction,
                -kkl_rate * z + x1 * x1 / (2.0 * pr.k) + kkl_drive,
                -a * v1 + a * u,
                -a * v2 + a * y / x2,
                -a * phi - a * y,
            ]
        )

    state.load(rk4_step(field, state.as_array(), 0.0, dt, "MagLev observer"))
    q_hat = model.position_from_virtual_output(yv_hat)
    p_hat = state.z - gains.gamma_p * x2
    return state.R_hat, state.x1_hat, q_hat, p_hat


# --- MagLev Luenberger comparison -------------------------------------------------------


@dataclass
class MagLevLuenbergerState:
    """Luenberger observer for the MagLev momentum.

    Attributes:
        z1: Estimate of x2 = (c - q)/k.
        z2: Momentum estimate.
        l1: Gain on x2 - z1 in the z1 equation.
        l2: Gain on the innovation in the z2 equation.
        form: "corrected" feeds -l2 (x2 - z1) to z2, giving the error
            polynomial s^2 + l1 s + l2/(k m); "verbatim" feeds +l2 (x2 - z2).
    """

    z1: float
    z2: float
    l1: float
    l2: float
    form: str = "corrected"

    def __post_init__(self) -> None:
        """Validate gains."""
        if self.l1 <= 0.0 or self.l2 <= 0.0:
            raise ConfigurationError("Luenberger gains must be positive", key="observer.l1")
        if self.form not in LUENBERGER_FORMS:
            raise ConfigurationError(
                f"unknown Luenberger form {self.form!r}", key="observer.luenberger_form"
            )


def maglev_luenberger_step(
    state: MagLevLuenbergerState,
    x2_hat: float,
    x1_hat: float,
    params: MagLevParams,
    dt: float,
) -> float:
    """Advance the Luenberger comparison observer and return its momentum estimate."""
    km = params.k * params.m
    force = x1_hat * x1_hat / (2.0 * params.k) - params.m * params.G
    verbatim = state.form == "verbatim"

    def field(_t: float, zeta: FloatArray) -> FloatArray:
        z1, z2 = zeta
        feedback = state.l2 * (x2_hat - z2) if verbatim else -state.l2 * (x2_hat - z1)
        return np.array([-z2 / km + state.l1 * (x2_hat - z1), force + feedback])

    zeta = rk4_step(field, np.array([state.z1, state.z2]), 0.0, dt, "Luenberger observer")
    state.z1, state.z2 = float(zeta[0]), float(zeta[1])
    return state.z2


# --- Observer objects used by the simulator ---------------------------------------------


class StateObserver(ABC):
    """Observer advanced in lockstep with a simulated plant.

    ``start`` is called once, when the virtual-output estimate becomes
    usable; until then the initial guesses are reported unchanged.
    """

    def __init__(self, projection: ProjectionFloor | None = None) -> None:
        self.projection = projection
        self.started = False

    @property
    def excitation_lost(self) -> bool:
        """Whether the projected virtual output sat on its floor too long."""
        return self.projection.excitation_lost if self.projection else False

    def _project(self, yv_hat: float, dt: float = 0.0) -> float:
        if self.projection is None:
            return yv_hat
        return self.projection.apply(yv_hat, dt)

    @abstractmethod
    def start(self, y: FloatArray, u: FloatArray, yv_hat: FloatArray) -> None:
        """Initialize internal filters from the first usable measurements."""

    @abstractmethod
    def step(self, y: FloatArray, u: FloatArray, yv_hat: FloatArray, dt: float) -> None:
        """Advance one step with (y, u, yv_hat) held."""

    @abstractmethod
    def channels(self) -> dict[str, float]:
        """Current estimates, keyed by trajectory column name."""

    def state_estimate(self) -> FloatArray:
        """Estimate of the full plant state, in model order."""
        raise ConfigurationError(
            f"{type(self).__name__} does not estimate the mechanical state",
            key="control.feedback",
        )

    def resistance_estimate(self) -> float | None:
        """Estimated resistance, if the observer adapts one."""
        return None


class ElectricalObserver(StateObserver):
    """Observer of the electrical coordinates of a quadratic plant.

    Usage:
        obs = ElectricalObserver(model.to_quadratic(), gamma=8000.0)
        obs.start(y, u, yv_hat)
        obs.step(y, u, yv_hat, dt)
    """

    def __init__(
        self,
        model: QuadraticEmsModel,
        gamma: float,
        initial: npt.ArrayLike | None = None,
        logger: logging.Logger | None = None,
    ) -> None:
        super().__init__()
        self.model = model
        start = np.zeros(model.n_inputs) if initial is None else initial
        self.state = ElectricalObserverState(x_hat_E=np.asarray(start), gamma=gamma)
        self._names = tuple(f"{name}_hat" for name in model.state_names[: model.n_inputs])
        self._logger = logger

    def start(self, y: FloatArray, u: FloatArray, yv_hat: FloatArray) -> None:
        self.started = True
        if self._logger:
            self._logger.debug("Electrical observer started at x_hat_E=%s", self.state.x_hat_E)

    def step(self, y: FloatArray, u: FloatArray, yv_hat: FloatArray, dt: float) -> None:
        electrical_observer_step(self.state, y, u, yv_hat, self.model, dt)

    def channels(self) -> dict[str, float]:
        return {name: float(v) for name, v in zip(self._names, self.state.x_hat_E, strict=True)}


class OpticalSwitchObserver(StateObserver):
    """Full-state observer of the optical switch."""

    def __init__(
        self,
        model: OpticalSwitchModel,
        gamma: float,
        floor: float,
        dwell: float = DEFAULT_FLOOR_DWELL,
        q_hat0: float | None = None,
        logger: logging.Logger | None = None,
    ) -> None:
        super().__init__(ProjectionFloor(floor, dwell, logger))
        self.model = model
        self.state = OptSwObserverState(Q_hat=0.0, p_hat=0.0, gamma=gamma)
        self.q_hat = model.params.c0 if q_hat0 is None else q_hat0
        self._logger = logger

    def start(self, y: FloatArray, u: FloatArray, yv_hat: FloatArray) -> None:
        yv = self._project(float(yv_hat[0]))
        # Q = b y / (R_C yv) inverts the output map at the current estimate
        self.state.Q_hat = self.model.b * float(y[0]) / (self.model.params.r_c * yv)
        self.q_hat = self.model.position_from_virtual_output(yv)
        self.started = True
        if self._logger:
            self._logger.debug(
                "Optical-switch observer started: Q_hat=%g, q_hat=%g", self.state.Q_hat, self.q_hat
            )

    def step(self, y: FloatArray, u: FloatArray, yv_hat: FloatArray, dt: float) -> None:
        yv = self._project(float(yv_hat[0]), dt)
        _, self.q_hat, _ = optsw_observer_step(
            self.state, float(y[0]), float(u[0]), yv, self.model, dt
        )

    def channels(self) -> dict[str, float]:
        return {"Q_hat": self.state.Q_hat, "q_hat": self.q_hat, "p_hat": self.state.p_hat}

    def state_estimate(self) -> FloatArray:
        return np.array([self.state.Q_hat, self.q_hat, self.state.p_hat])


class MagLevAdaptiveObserver(StateObserver):
    """Adaptive observer estimating resistance, flux, position and momentum.

    Until ``start`` the initial guesses are reported. At start the
    regression filters are placed at the steady state of the current
    measurements (v1 = u, v2 = y/x2, phi_R = -y) and z is set so that
    p_hat equals its initial guess.

    Usage:
        obs = MagLevAdaptiveObserver(model, MagLevObserverGains(), floor=0.04, R_hat0=2.0)
    """

    def __init__(
        self,
        model: MagLevModel,
        gains: MagLevObserverGains,
        floor: float,
        R_hat0: float,
        x1_hat0: float | None = None,
        q_hat0: float = 0.0,
        p_hat0: float = 0.0,
        dwell: float = DEFAULT_FLOOR_DWELL,
        logger: logging.Logger | None = None,
    ) -> None:
        super().__init__(ProjectionFloor(floor, dwell, logger))
        if R_hat0 <= 0.0:
            raise ConfigurationError("initial resistance estimate must be positive", key="observer.R_hat0")
        self.model = model
        self.gains = gains
        flux = model.params.lambda_star if x1_hat0 is None else x1_hat0
        self.state = MagLevObserverState(R_hat=R_hat0, x1_hat=flux)
        self.q_hat = q_hat0
        self.p_hat = p_hat0
        self.Y_R = 0.0
        self._logger = logger

    def start(self, y: FloatArray, u: FloatArray, yv_hat: FloatArray) -> None:
        yv = self._project(float(yv_hat[0]))
        x2 = yv / self.model.b
        y0 = float(y[0])
        self.state.v1 = float(u[0])
        self.state.v2 = y0 / x2
        self.state.phi_R = -y0
        self.state.z = self.p_hat + self.gains.gamma_p * x2
        self.q_hat = self.model.position_from_virtual_output(yv)
        self.Y_R = self.state.regression_output(y0, x2, self.gains.a)
        self.started = True
        if self._logger:
            self._logger.debug(
                "MagLev observer started: R_hat=%g, x2_hat=%g, q_hat=%g",
                self.state.R_hat,
                x2,
                self.q_hat,
            )

    def step(self, y: FloatArray, u: FloatArray, yv_hat: FloatArray, dt: float) -> None:
        yv = self._project(float(yv_hat[0]), dt)
        y0 = float(y[0])
        _, _, self.q_hat, self.p_hat = maglev_adaptive_observer_step(
            self.state, self.gains, y0, float(u[0]), yv, self.model, dt
        )
        self.Y_R = self.state.regression_output(y0, yv / self.model.b, self.gains.a)

    def channels(self) -> dict[str, float]:
        return {
            "R_hat": self.state.R_hat,
            "lambda_hat": self.state.x1_hat,
            "q_hat": self.q_hat,
            "p_hat": self.p_hat,
            "phi_R": self.state.phi_R,
            "Y_R": self.Y_R,
        }

    def state_estimate(self) -> FloatArray:
        return np.array([self.state.x1_hat, self.q_hat, self.p_hat])

    def resistance_estimate(self) -> float:
        return self.state.R_hat

    @property
    def x2_hat(self) -> float:
        """Current (c - q_hat)/k."""
        return (self.model.params.c - self.q_hat) / self.model.params.k


class MagLevLuenberger:
    """Luenberger momentum observer run next to the adaptive observer.

    It consumes the adaptive observer's x2_hat and flux estimate and logs
    its own momentum estimate for comparison.
    """

    def __init__(
        self,
        params: MagLevParams,
        l1: float,
        l2: float,
        form: str = "corrected",
        logger: logging.Logger | None = None,
    ) -> None:
        self.params = params
        self.state = MagLevLuenbergerState(z1=0.0, z2=0.0, l1=l1, l2=l2, form=form)
        self._logger = logger
        if self._logger:
            self._logger.debug(
                "Luenberger observer: l1=%g, l2=%g, poles of s^2 + %g s + %g",
                l1,
                l2,
                l1,
                l2 / (params.k * params.m),
            )

    def start(self, x2_hat: float, p_hat0: float) -> None:
        """Consistent initialization: z1 = x2_hat, z2 = p_hat0."""
        self.state.z1 = x2_hat
        self.state.z2 = p_hat0

    def step(self, x2_hat: float, x1_hat: float, dt: float) -> float:
        """Advance one step and return the momentum estimate."""
        return maglev_luenberger_step(self.state, x2_hat, x1_hat, self.params, dt)

    @property
    def p_hat(self) -> float:
        return self.state.z2


def kkl_decay_rate(gains: MagLevObserverGains, params: MagLevParams) -> float:
    """Decay rate gamma_p / (k m) of the momentum error when the flux is exact."""
    return gains.gamma_p / (params.k * params.m)


def virtual_output_floor(nominal_yv: float, fraction: float) -> float:
    """Projection floor as a fraction of the nominal virtual output."""
    if not math.isfinite(nominal_yv) or nominal_yv <= 0.0:
        raise ConfigurationError("nominal virtual output must be positive and finite")
    return fraction * nominal_yv
