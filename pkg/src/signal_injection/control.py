"""Nominal controllers and reference schedules.

The MagLev controllers take the state (lambda, q, p) either from the
plant (state feedback) or from an observer (sensorless operation); the
simulator decides which. Controllers return the nominal input u_C; the
probing signal is added downstream.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from .constants import DEFAULT_RAMP_TIME
from .ems_models import MagLevParams
from .exceptions import ConfigurationError

FloatArray = npt.NDArray[np.float64]


@dataclass(frozen=True)
class PulseTrain:
    """Piecewise-constant position reference with linear edges.

    The levels are visited in order and repeat with the given period;
    each level holds for period / len(levels). Every change of level
    after t = 0 is a linear ramp of duration ``ramp`` starting at the
    switching instant.

    Attributes:
        levels: Reference positions visited in one period.
        period: Duration of one full cycle.
        ramp: Duration of each edge.

    Example:
        >>> ref = PulseTrain(levels=(0.0, -0.001), period=2.0, ramp=0.01)
        >>> ref(0.5), ref(1.5)
        (0.0, -0.001)
    """

    levels: tuple[float, ...] = (0.0,)
    period: float = 1.0
    ramp: float = DEFAULT_RAMP_TIME

    def __post_init__(self) -> None:
        """Validate the schedule."""
        if not self.levels:
            raise ConfigurationError("pulse train needs at least one level", key="control.levels")
        if self.period <= 0.0:
            raise ConfigurationError("period must be positive", key="control.period")
        if not 0.0 <= self.ramp <= self.hold:
            raise ConfigurationError(
                "ramp must be in [0, period / len(levels)]", key="control.ramp"
            )

    @property
    def hold(self) -> float:
        """Time spent at each level, ramp included."""
        return self.period / len(self.levels)

    def __call__(self, t: float) -> float:
        """Reference value at time ``t``."""
        n = len(self.levels)
        index = math.floor(t / self.hold)
        local = t - index * self.hold
        level = self.levels[index % n]
        if index <= 0 or local >= self.ramp:
            return level
        previous = self.levels[(index - 1) % n]
        return previous + (level - previous) * local / self.ramp


@dataclass(frozen=True)
class IdaPbcGains:
    """Gains and set point of the MagLev IDA-PBC law.

    Attributes:
        K_p: Proportional gain.
        alpha: Interconnection parameter.
        lambda_star: Flux set point, sqrt(2 k m G).
        q_star: Position set point.
        p_star: Momentum set point.
        resistance_sign: +1 adds R_hat i (holds the equilibrium); -1
            subtracts it and is kept for ablation runs.

    Example:
        >>> gains = IdaPbcGains(K_p=200.7, alpha=33.4, lambda_star=MagLevParams().lambda_star)
    """

    K_p: float = 200.7
    alpha: float = 33.4
    lambda_star: float = 0.0
    q_star: float = 0.0
    p_star: float = 0.0
    resistance_sign: float = 1.0

    def __post_init__(self) -> None:
        """Validate gains."""
        if self.K_p <= 0.0:
            raise ConfigurationError("K_p must be positive", key="control.K_p")
        if self.alpha <= 0.0:
            raise ConfigurationError("alpha must be positive", key="control.alpha")
        if self.resistance_sign not in (1.0, -1.0):
            raise ConfigurationError(
                "resistance sign must be +1 or -1", key="control.resistance_sign"
            )


def ida_pbc(
    gains: IdaPbcGains,
    state: npt.ArrayLike,
    R_hat: float,
    i: float,
    mass: float,
    q_star: float | None = None,
) -> float:
    """Full-state IDA-PBC law for the MagLev plant.

    u_C = +-R_hat i - K_p((lambda - lambda*)/alpha + (q - q*)) - (alpha/m + K_p)(p - p*)

    Args:
        gains: Gains and set point.
        state: (lambda, q, p), true or estimated.
        R_hat: Resistance used for the feedforward term.
        i: Coil current, measured or true.
        mass: Ball mass m.
        q_star: Overrides ``gains.q_star`` (time-varying reference).

    Returns:
        The nominal control u_C.
    """
    flux, q, p = (float(v) for v in np.asarray(state, dtype=np.float64))
    target = gains.q_star if q_star is None else q_star
    return (
        gains.resistance_sign * R_hat * i
        - gains.K_p * ((flux - gains.lambda_star) / gains.alpha + (q - target))
        - (gains.alpha / mass + gains.K_p) * (p - gains.p_star)
    )


@dataclass
class BackstepGains:
    """Gains and integrator state of the backstepping-plus-integral law.

    Attributes:
        gamma1: Momentum gain.
        gamma2: Position gain.
        K_i: Integral gain.
        u_I: Integrator state, u_I' = q - q*.
    """

    gamma1: float = 340.0
    gamma2: float = 3.0
    K_i: float = 1.0
    u_I: float = 0.0

    def __post_init__(self) -> None:
        """Validate gains."""
        for name in ("gamma1", "gamma2", "K_i"):
            if getattr(self, name) <= 0.0:
                raise ConfigurationError(f"{name} must be positive", key=f"control.{name}")


def backstepping_integral(
    gains: BackstepGains,
    state: tuple[float, float],
    params: MagLevParams,
    q_star: float,
    p_star: float,
    dt: float,
    resistance: float | None = None,
) -> float:
    """Backstepping control with integral action.

    u0 = R (c - q) |Upsilon|^(1/2) sign(Upsilon) - K_i u_I with
    Upsilon = (2/k)(m G - gamma1 (p - p*) - gamma2 m (q - q*)).
    The output uses the integrator value at the start of the step; u_I
    is then advanced by dt (q - q*).

    Args:
        gains: Gains; ``gains.u_I`` is updated in place.
        state: (q, p), true or estimated.
        params: Plant parameters.
        q_star: Position reference.
        p_star: Momentum reference.
        dt: Step size.
        resistance: Resistance to use, ``params.R`` if None.

    Returns:
        The control u0.
    """
    q, p = state
    r = params.R if resistance is None else resistance
    upsilon = (2.0 / params.k) * (
        params.m * params.G - gains.gamma1 * (p - p_star) - gains.gamma2 * params.m * (q - q_star)
    )
    u0 = r * (params.c - q) * math.copysign(math.sqrt(abs(upsilon)), upsilon) - gains.K_i * gains.u_I
    gains.u_I += dt * (q - q_star)
    return u0


class Controller(ABC):
    """Nominal control law evaluated once per simulation step."""

    feedback_required: bool = True

    @abstractmethod
    def compute(
        self,
        t: float,
        x: FloatArray,
        resistance: float,
        y: FloatArray,
        dt: float,
    ) -> FloatArray:
        """Return u_C for state ``x``, resistance and output ``y`` at time ``t``."""

    def reference(self, t: float) -> float | None:
        """Position reference at ``t``, if the law tracks one."""
        return None


class OpenLoopControl(Controller):
    """Constant input with optional slow sinusoidal modulation.

    u_C(t) = u_open + u_amplitude * sin(2 pi u_frequency t)
    """

    feedback_required = False

    def __init__(self, u_open: float, u_amplitude: float = 0.0, u_frequency: float = 0.0) -> None:
        if u_frequency < 0.0:
            raise ConfigurationError("u_frequency must be non-negative", key="control.u_frequency")
        self.u_open = u_open
        self.u_amplitude = u_amplitude
        self.u_frequency = u_frequency

    def compute(
        self,
        t: float,
        x: FloatArray,
        resistance: float,
        y: FloatArray,
        dt: float,
    ) -> FloatArray:
        value = self.u_open + self.u_amplitude * math.sin(2.0 * math.pi * self.u_frequency * t)
        return np.array([value])


class IdaPbcController(Controller):
    """IDA-PBC tracking a pulse-train position reference."""

    def __init__(
        self,
        gains: IdaPbcGains,
        params: MagLevParams,
        reference: PulseTrain | None = None,
        logger: logging.Logger | None = None,
    ) -> None:
        self.gains = gains
        self.params = params
        self._reference = reference
        self._logger = logger
        if self._logger:
            self._logger.debug(
                "IDA-PBC: K_p=%g, alpha=%g, lambda*=%g", gains.K_p, gains.alpha, gains.lambda_star
            )

    def reference(self, t: float) -> float:
        return self.gains.q_star if self._reference is None else self._reference(t)

    def compute(
        self,
        t: float,
        x: FloatArray,
        resistance: float,
        y: FloatArray,
        dt: float,
    ) -> FloatArray:
        u = ida_pbc(self.gains, x, resistance, float(y[0]), self.params.m, self.reference(t))
        return np.array([u])


class BacksteppingController(Controller):
    """Backstepping-plus-integral law tracking a pulse-train reference."""

    def __init__(
        self,
        gains: BackstepGains,
        params: MagLevParams,
        reference: PulseTrain | None = None,
        q_star: float = 0.0,
        logger: logging.Logger | None = None,
    ) -> None:
        self.gains = gains
        self.params = params
        self._reference = reference
        self._q_star = q_star
        self._logger = logger
        if self._logger:
            self._logger.debug(
                "Backstepping: gamma1=%g, gamma2=%g, K_i=%g", gains.gamma1, gains.gamma2, gains.K_i
            )

    def reference(self, t: float) -> float:
        return self._q_star if self._reference is None else self._reference(t)

    def compute(
        self,
        t: float,
        x: FloatArray,
        resistance: float,
        y: FloatArray,
        dt: float,
    ) -> FloatArray:
        u = backstepping_integral(
            self.gains,
            (float(x[1]), float(x[2])),
            self.params,
            self.reference(t),
            0.0,
            dt,
            resistance,
        )
        return np.array([u])
