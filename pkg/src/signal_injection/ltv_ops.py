"""Sampled realizations of the delay, windowed-mean and lag operators.

All operators advance one sample per call on a fixed grid ``dt``.
Delays and window lengths must be integer multiples of ``dt``; history
before the first sample is taken as zero and the operator reports
``warm`` once its output no longer depends on that padding.
"""

from __future__ import annotations

import cmath
import math
from abc import ABC, abstractmethod
from typing import overload

import numpy as np
import numpy.typing as npt

from .constants import SNAP_TOLERANCE
from .exceptions import ConfigurationError

FloatArray = npt.NDArray[np.float64]


def snap_to_grid(length: float, dt: float, name: str) -> int:
    """Return ``length / dt`` as an integer step count.

    Args:
        length: Delay or window length, time units.
        dt: Step size.
        name: Parameter name used in error messages.

    Returns:
        Number of steps n >= 1 with n * dt == length to within tolerance.

    Raises:
        ConfigurationError: If ``length`` is not a positive multiple of ``dt``.
    """
    if dt <= 0.0:
        raise ConfigurationError("dt must be positive", key="sim.dt")
    if length <= 0.0:
        raise ConfigurationError(f"{name} must be positive", key=name)
    steps = round(length / dt)
    if steps < 1 or abs(steps * dt - length) > SNAP_TOLERANCE * length:
        raise ConfigurationError(
            f"{name}={length!r} is not an integer multiple of dt={dt!r}", key=name
        )
    return int(steps)


class SampledOperator(ABC):
    """Single-writer operator advanced one grid sample at a time.

    Scalar inputs give scalar outputs; arrays of shape ``(width,)`` are
    processed channel by channel.
    """

    kind: str = ""

    def __init__(self, dt: float, width: int = 1) -> None:
        if dt <= 0.0:
            raise ConfigurationError("dt must be positive", key="sim.dt")
        if width < 1:
            raise ConfigurationError("width must be at least 1")
        self.dt = dt
        self.width = width
        self._count = 0

    @property
    def warm(self) -> bool:
        """True once outputs no longer use zero-padded history."""
        return True

    @abstractmethod
    def _advance(self, v: FloatArray) -> FloatArray:
        """Consume one sample and return the output sample."""

    @overload
    def step(self, v: float) -> float: ...

    @overload
    def step(self, v: FloatArray) -> FloatArray: ...

    def step(self, v: float | FloatArray) -> float | FloatArray:
        """Consume one input sample and return the corresponding output."""
        sample = np.asarray(v, dtype=np.float64)
        out = self._advance(sample.reshape(self.width))
        self._count += 1
        if sample.ndim == 0:
            return float(out[0])
        return out


class DelayOperator(SampledOperator):
    """Pure delay: output(t) = v(t - d)."""

    kind = "delay"

    def __init__(self, d: float, dt: float, width: int = 1) -> None:
        super().__init__(dt, width)
        self.steps = snap_to_grid(d, dt, "filter.delay")
        self.delay = self.steps * dt
        self._buffer = np.zeros((self.steps, width))
        self._index = 0

    @property
    def warm(self) -> bool:
        return self._count > self.steps

    def _advance(self, v: FloatArray) -> FloatArray:
        out = self._buffer[self._index].copy()
        self._buffer[self._index] = v
        self._index = (self._index + 1) % self.steps
        return out


class WzohOperator(SampledOperator):
    """Weighted zero-order hold: the mean of v over the last ``w`` time units.

    Keeps a running trapezoidal integral chi and returns
    (chi(t) - chi(t - w)) / w.
    """

    kind = "wzoh"

    def __init__(self, w: float, dt: float, width: int = 1) -> None:
        super().__init__(dt, width)
        self.steps = snap_to_grid(w, dt, "filter.window")
        self.window = self.steps * dt
        self.chi = np.zeros(width)
        self._previous: FloatArray | None = None
        self._buffer = np.zeros((self.steps, width))
        self._index = 0

    @property
    def warm(self) -> bool:
        return self._count > self.steps

    def _advance(self, v: FloatArray) -> FloatArray:
        if self._previous is not None:
            self.chi = self.chi + 0.5 * self.dt * (self._previous + v)
        self._previous = v.copy()
        oldest = self._buffer[self._index].copy()
        self._buffer[self._index] = self.chi
        self._index = (self._index + 1) % self.steps
        return (self.chi - oldest) / self.window


class LowpassOperator(SampledOperator):
    """First-order lag a/(s + a) with unit DC gain.

    The state follows xdot = -a x + a v with v held over the step. One RK4
    step of this linear ODE is x + (v - x)(1 - P(-a dt)), P being the
    fourth-order Taylor polynomial of the exponential.
    """

    kind = "lowpass"

    def __init__(
        self,
        a: float,
        dt: float,
        width: int = 1,
        initial: float | FloatArray = 0.0,
    ) -> None:
        super().__init__(dt, width)
        if a <= 0.0:
            raise ConfigurationError("lowpass pole a must be positive", key="observer.a")
        self.a = a
        z = -a * dt
        self._factor = 1.0 + z + z * z / 2.0 + z**3 / 6.0 + z**4 / 24.0
        self.state = np.broadcast_to(np.asarray(initial, dtype=np.float64), (width,)).copy()

    def _advance(self, v: FloatArray) -> FloatArray:
        self.state = v + (self.state - v) * self._factor
        return self.state.copy()


def delay_step(op: DelayOperator, v: float) -> float:
    """Return the sample fed to ``op`` d/dt steps ago (0 during warm-up)."""
    return op.step(v)


def wzoh_step(op: WzohOperator, v: float) -> float:
    """Return the windowed mean of v over [t - w, t]."""
    return op.step(v)


def lowpass_step(op: LowpassOperator, v: float) -> float:
    """Advance the lag one step and return its state."""
    return op.step(v)


@overload
def build_Y(y: float, delay: DelayOperator, wzoh: WzohOperator) -> float: ...


@overload
def build_Y(y: FloatArray, delay: DelayOperator, wzoh: WzohOperator) -> FloatArray: ...


def build_Y(
    y: float | FloatArray,
    delay: DelayOperator,
    wzoh: WzohOperator,
) -> float | FloatArray:
    """Regression signal Y = D_d[y] - Z_2d[y] for one output sample.

    Args:
        y: Measured output sample (scalar or vector).
        delay: Delay operator with delay d.
        wzoh: Windowed-mean operator with window 2d.

    Returns:
        Componentwise difference of the two operator outputs.

    Raises:
        ConfigurationError: If the operators are not on the same grid or
            the window is not twice the delay.
    """
    if delay.dt != wzoh.dt:
        raise ConfigurationError(
            f"paired operators use different steps ({delay.dt!r} vs {wzoh.dt!r})", key="sim.dt"
        )
    if wzoh.steps != 2 * delay.steps:
        raise ConfigurationError("windowed mean must span twice the delay", key="filter.window")
    if isinstance(y, np.ndarray):
        return delay.step(y) - wzoh.step(y)
    return delay.step(float(y)) - wzoh.step(float(y))


class RegressionSignal:
    """Paired D_d and Z_2d operators producing Y sample by sample.

    Attributes:
        delay: The delay operator.
        wzoh: The windowed-mean operator over 2d.
    """

    def __init__(self, d: float, dt: float, width: int = 1) -> None:
        self.delay = DelayOperator(d, dt, width)
        self.wzoh = WzohOperator(2.0 * self.delay.delay, dt, width)

    @property
    def warm(self) -> bool:
        """True once both operators are past their zero-padded history."""
        return self.delay.warm and self.wzoh.warm

    def step(self, y: FloatArray) -> FloatArray:
        """Feed one output sample and return Y."""
        return build_Y(np.asarray(y, dtype=np.float64).reshape(self.delay.width), self.delay, self.wzoh)


def gd_freq_response(d: float, omega: float) -> complex:
    """Frequency response of G_d(s) = e^{-ds} + (e^{-2ds} - 1)/(2ds) at s = j*omega.

    With theta = omega*d the expression factors as e^{-j theta}(1 - sin(theta)/theta),
    which is evaluated here so that the removable singularity at omega = 0
    (limit 0) and small frequencies stay accurate.

    Raises:
        ConfigurationError: If ``d`` is not positive.
    """
    if d <= 0.0:
        raise ConfigurationError("d must be positive", key="d")
    theta = omega * d
    if theta == 0.0:
        return 0j
    if abs(theta) < 1e-3:
        t2 = theta * theta
        gain = t2 / 6.0 - t2 * t2 / 120.0 + t2**3 / 5040.0
    else:
        gain = 1.0 - math.sin(theta) / theta
    return cmath.exp(-1j * theta) * gain


def gd_table(d: float, omegas: npt.ArrayLike) -> tuple[FloatArray, FloatArray]:
    """Magnitude and phase (radians) of G_d on a frequency grid."""
    values = np.array([gd_freq_response(d, float(w)) for w in np.asarray(omegas, dtype=np.float64)])
    return np.abs(values), np.angle(values)
