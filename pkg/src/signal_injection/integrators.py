"""Fixed-step integration schemes.

Every ODE in a simulation advances on the same grid. Inputs that come
from measurements are held constant over a step (zero-order hold).
"""

from __future__ import annotations

from collections.abc import Callable

import numpy as np
import numpy.typing as npt

from .exceptions import SimulationAbort

FloatArray = npt.NDArray[np.float64]
VectorField = Callable[[float, FloatArray], FloatArray]


def _check_finite(value: FloatArray, t: float, x: FloatArray, label: str) -> None:
    if not np.all(np.isfinite(value)):
        raise SimulationAbort(t, label, snapshot=x.tolist())


def rk4_step(
    field: VectorField,
    x: FloatArray,
    t: float,
    dt: float,
    label: str = "state derivative",
) -> FloatArray:
    """Advance ``x`` by one classical fourth-order Runge-Kutta step.

    Args:
        field: Right-hand side f(t, x).
        x: State at time ``t``.
        t: Current time.
        dt: Step size.
        label: Name reported if the derivative becomes non-finite.

    Returns:
        The state at ``t + dt``.

    Raises:
        SimulationAbort: If any stage derivative is not finite.

    Example:
        >>> rk4_step(lambda t, x: -x, np.array([1.0]), 0.0, 0.01)
        array([0.99004983])
    """
    k1 = field(t, x)
    _check_finite(k1, t, x, label)
    half = 0.5 * dt
    k2 = field(t + half, x + half * k1)
    _check_finite(k2, t, x, label)
    k3 = field(t + half, x + half * k2)
    _check_finite(k3, t, x, label)
    k4 = field(t + dt, x + dt * k3)
    _check_finite(k4, t, x, label)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def affine_decay_step(
    x: npt.ArrayLike,
    drive: npt.ArrayLike,
    rate: npt.ArrayLike,
    dt: float,
) -> FloatArray:
    """Exact step of xdot = drive - rate * x with frozen coefficients.

    Gradient estimators driven by held regressors have this form, with
    ``rate >= 0``. The update is unconditionally stable and never moves
    ``x`` past the frozen equilibrium ``drive / rate``.

    Args:
        x: Current value(s).
        drive: Constant forcing term over the step.
        rate: Non-negative decay rate over the step.
        dt: Step size.

    Returns:
        The value(s) at the end of the step.
    """
    x_arr = np.asarray(x, dtype=np.float64)
    drive_arr = np.asarray(drive, dtype=np.float64)
    rate_arr = np.asarray(rate, dtype=np.float64)
    scaled = rate_arr * dt
    decay = np.exp(-scaled)
    # (1 - e^{-r dt}) / r, continuous at r = 0
    safe = np.where(scaled > 0.0, scaled, 1.0)
    gain = np.where(scaled > 0.0, -np.expm1(-scaled) / safe, 1.0) * dt
    return np.asarray(x_arr * decay + drive_arr * gain, dtype=np.float64)
