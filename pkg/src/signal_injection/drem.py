"""Gradient estimators for the injected-output regression.

Contains the determinant/adjugate mixing step that turns a q-dimensional
regression C = Phi theta into q scalar regressions, the scalar gradient
law driven by the mixed regressor, the virtual-output filter and two
moving-window comparators: a least-squares demodulator and a regularized
gradient estimator driven by the observation error over the window.

The scalar laws are linear in the estimate once their regressors are
held over a step, so each step is taken exactly with
:func:`~signal_injection.integrators.affine_decay_step`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt
from scipy.linalg import expm, lu_factor

from .constants import DEFAULT_HORIZON_ALPHA, DEFAULT_HORIZON_GAMMA
from .exceptions import ConfigurationError, NoExcitationError
from .integrators import affine_decay_step
from .ltv_ops import snap_to_grid

FloatArray = npt.NDArray[np.float64]


@dataclass
class ScalarGradState:
    """State of the virtual-output gradient filter.

    Attributes:
        theta_hat: Estimate of theta_2 = epsilon * y_v, one entry per output.
        gamma: Adaptation gain.
        epsilon: Probing period scale, used for y_v = theta_2 / epsilon.
        gamma_star: Optional lower bound with gamma * epsilon >= gamma_star.
    """

    theta_hat: FloatArray
    gamma: float
    epsilon: float
    gamma_star: float | None = None

    def __post_init__(self) -> None:
        """Validate gains."""
        self.theta_hat = np.atleast_1d(np.asarray(self.theta_hat, dtype=np.float64)).copy()
        if self.gamma <= 0.0:
            raise ConfigurationError("gamma must be positive", key="filter.gamma")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigurationError("epsilon must be in (0, 1)", key="probe.epsilon")
        if self.gamma_star is not None:
            if self.gamma_star <= 0.0:
                raise ConfigurationError("gamma_star must be positive", key="filter.gamma_star")
            # gamma = gamma_star / epsilon sits on the bound up to rounding
            if self.gamma * self.epsilon < self.gamma_star * (1.0 - 1e-12):
                raise ConfigurationError(
                    "gamma * epsilon must not be below gamma_star", key="filter.gamma"
                )

    @property
    def yv_hat(self) -> FloatArray:
        """Virtual-output estimate theta_hat / epsilon."""
        return self.theta_hat / self.epsilon


@dataclass(frozen=True)
class MixedRegression:
    """Mixed scalar regressions Delta * theta_i = C_mixed_i.

    Attributes:
        delta: det(Phi).
        c_mixed: adj(Phi) @ C.
    """

    delta: float
    c_mixed: FloatArray = field(repr=True)


def virtual_output_filter_step(
    state: ScalarGradState,
    S_now: float,
    Y_now: npt.ArrayLike,
    dt: float,
) -> FloatArray:
    """Advance the virtual-output filter by one step.

    Integrates yv_hat' = gamma' S (Y - epsilon S yv_hat), gamma' = gamma/epsilon,
    with S and Y held over the step, and stores theta_hat = epsilon * yv_hat.

    Args:
        state: Filter state, updated in place.
        S_now: S(t) at the start of the step.
        Y_now: Regression signal Y(t), one entry per output.
        dt: Step size.

    Returns:
        The new virtual-output estimate.
    """
    eps = state.epsilon
    gamma_prime = state.gamma / eps
    y_sig = np.asarray(Y_now, dtype=np.float64).reshape(state.theta_hat.shape)
    yv = affine_decay_step(
        state.yv_hat,
        gamma_prime * S_now * y_sig,
        gamma_prime * eps * S_now * S_now,
        dt,
    )
    state.theta_hat = eps * yv
    return yv


class VirtualOutputFilter:
    """Gradient filter estimating y_v from the regression Y = S theta_2.

    Usage:
        flt = VirtualOutputFilter(gamma=3.5e8, epsilon=1 / 300)
        for each sample: yv_hat = flt.step(S(t), Y(t), dt)
    """

    def __init__(
        self,
        gamma: float,
        epsilon: float,
        width: int = 1,
        initial: float | FloatArray = 0.0,
        gamma_star: float | None = None,
        logger: logging.Logger | None = None,
    ) -> None:
        """Initialize the filter.

        Args:
            gamma: Adaptation gain of the theta_2 law.
            epsilon: Probing period scale.
            width: Number of output channels.
            initial: Initial virtual-output estimate.
            gamma_star: Optional bound checked against gamma * epsilon.
            logger: Optional logger for debugging.
        """
        start = np.broadcast_to(np.asarray(initial, dtype=np.float64), (width,))
        self.state = ScalarGradState(
            theta_hat=epsilon * start,
            gamma=gamma,
            epsilon=epsilon,
            gamma_star=gamma_star,
        )
        self._logger = logger
        if self._logger:
            self._logger.debug(
                "Virtual-output filter: gamma=%g, epsilon=%g, gamma*epsilon=%g",
                gamma,
                epsilon,
                gamma * epsilon,
            )

    @property
    def yv_hat(self) -> FloatArray:
        """Current virtual-output estimate."""
        return self.state.yv_hat

    def step(self, S_now: float, Y_now: npt.ArrayLike, dt: float) -> FloatArray:
        """Advance one step and return the virtual-output estimate."""
        return virtual_output_filter_step(self.state, S_now, Y_now, dt)


def _adjugate_small(phi: FloatArray) -> FloatArray:
    q = phi.shape[0]
    if q == 1:
        return np.ones((1, 1))
    if q == 2:
        return np.array([[phi[1, 1], -phi[0, 1]], [-phi[1, 0], phi[0, 0]]])
    r0, r1, r2 = phi
    return np.column_stack([np.cross(r1, r2), np.cross(r2, r0), np.cross(r0, r1)])


def _lu_det(matrix: FloatArray) -> float:
    lu, piv = lu_factor(matrix, check_finite=True)
    swaps = int(np.count_nonzero(piv != np.arange(piv.size)))
    sign = -1.0 if swaps % 2 else 1.0
    return sign * float(np.prod(np.diag(lu)))


def extend_mix(C: npt.ArrayLike, Phi: npt.ArrayLike) -> MixedRegression:
    """Mix an extended regression C = Phi theta into scalar regressions.

    Args:
        C: Extended measurement vector of length q.
        Phi: Extended q x q regressor matrix.

    Returns:
        Delta = det(Phi) and C_mixed = adj(Phi) @ C, so that
        C_mixed = Delta * theta whenever C = Phi theta.

    Raises:
        ConfigurationError: If Phi is not square or C has the wrong length.

    Example:
        >>> mixed = extend_mix([5.0, 6.0], [[1.0, 2.0], [3.0, 4.0]])
        >>> mixed.delta, mixed.c_mixed.tolist()
        (-2.0, [8.0, -9.0])
    """
    phi = np.atleast_2d(np.asarray(Phi, dtype=np.float64))
    c_vec = np.atleast_1d(np.asarray(C, dtype=np.float64))
    q = phi.shape[0]
    if phi.shape != (q, q):
        raise ConfigurationError(f"Phi must be square, got shape {phi.shape}")
    if c_vec.shape != (q,):
        raise ConfigurationError(f"C must have length {q}, got shape {c_vec.shape}")
    if q <= 3:
        adj = _adjugate_small(phi)
        if q == 1:
            delta = float(phi[0, 0])
        elif q == 2:
            delta = float(phi[0, 0] * phi[1, 1] - phi[0, 1] * phi[1, 0])
        else:
            delta = float(phi[0] @ adj[:, 0])
        return MixedRegression(delta=delta, c_mixed=adj @ c_vec)
    delta = _lu_det(phi)
    # (adj(Phi) C)_i is the determinant of Phi with column i replaced by C
    mixed = np.empty(q)
    for i in range(q):
        replaced = phi.copy()
        replaced[:, i] = c_vec
        mixed[i] = _lu_det(replaced)
    return MixedRegression(delta=delta, c_mixed=mixed)


def scalar_gradient_step(
    theta_i: float,
    Delta: float,
    C_i: float,
    gamma_i: float,
    dt: float,
) -> float:
    """One step of theta_i' = gamma_i Delta (C_i - Delta theta_i).

    Raises:
        ConfigurationError: If ``gamma_i`` is not positive.
    """
    if gamma_i <= 0.0:
        raise ConfigurationError("gamma_i must be positive")
    return float(affine_decay_step(theta_i, gamma_i * Delta * C_i, gamma_i * Delta * Delta, dt))


class DremEstimator:
    """Element-wise gradient estimator fed by mixed regressions.

    Each parameter is estimated independently from
    Delta * theta_i = C_mixed_i, so with exact data every |theta_i - theta_hat_i|
    is non-increasing.
    """

    def __init__(self, gammas: npt.ArrayLike, initial: npt.ArrayLike | None = None) -> None:
        self.gammas = np.atleast_1d(np.asarray(gammas, dtype=np.float64))
        if np.any(self.gammas <= 0.0):
            raise ConfigurationError("all DREM gains must be positive")
        if initial is None:
            self.theta_hat = np.zeros_like(self.gammas)
        else:
            self.theta_hat = np.atleast_1d(np.asarray(initial, dtype=np.float64)).copy()

    def update(self, C: npt.ArrayLike, Phi: npt.ArrayLike, dt: float) -> FloatArray:
        """Mix (C, Phi) and advance every scalar estimate by one step."""
        mixed = extend_mix(C, Phi)
        self.theta_hat = affine_decay_step(
            self.theta_hat,
            self.gammas * mixed.delta * mixed.c_mixed,
            self.gammas * mixed.delta**2,
            dt,
        )
        return self.theta_hat.copy()


def window_demod_baseline(
    y: npt.ArrayLike,
    S: npt.ArrayLike,
    n: int,
    epsilon: float,
    dt: float,
) -> tuple[float, float]:
    """Least-squares fit y = theta_1 + S theta_2 over the last n periods.

    Args:
        y: Output history on the grid ``dt``, most recent sample last.
        S: Matching samples of S.
        n: Number of probing periods in the window.
        epsilon: Probing period scale.
        dt: Sampling step of the histories.

    Returns:
        (theta_1, theta_2 / epsilon): averaged output and virtual output,
        fitted to the trailing n * epsilon / dt samples.

    Raises:
        ConfigurationError: If ``n`` is not a positive integer, n * epsilon
            is off the grid, or the histories differ in length or are
            shorter than the window.
        NoExcitationError: If S is constant over the window.

    Example:
        >>> S = -np.cos(2 * np.pi * np.arange(1000) / 100) / (2 * np.pi)
        >>> [round(v, 9) for v in window_demod_baseline(1.0 + 0.02 * S, S, 10, 0.01, 1e-4)]
        [1.0, 2.0]
    """
    if n < 1:
        raise ConfigurationError("window must span at least one period", key="filter.baseline_periods")
    y_arr = np.asarray(y, dtype=np.float64).ravel()
    s_arr = np.asarray(S, dtype=np.float64).ravel()
    if y_arr.shape != s_arr.shape:
        raise ConfigurationError("y and S histories must have the same length")
    size = snap_to_grid(n * epsilon, dt, "filter.baseline_periods")
    if y_arr.size < max(size, 2):
        raise ConfigurationError(
            f"history of {y_arr.size} samples is shorter than the {size}-sample window",
            key="filter.baseline_periods",
        )
    y_win = y_arr[-size:]
    s_win = s_arr[-size:]
    s_mean = float(s_win.mean())
    y_mean = float(y_win.mean())
    s_dev = s_win - s_mean
    spread = float(s_dev @ s_dev)
    if spread <= 1e-12 * float(s_win @ s_win) or spread == 0.0:
        raise NoExcitationError()
    theta_2 = float(s_dev @ (y_win - y_mean)) / spread
    theta_1 = y_mean - theta_2 * s_mean
    return theta_1, theta_2 / epsilon


class _SampleWindow:
    """Ring buffer of the last ``size`` (y, S) samples."""

    def __init__(self, size: int) -> None:
        self.size = size
        self.y = np.zeros(size)
        self.s = np.zeros(size)
        self._index = 0
        self._count = 0

    @property
    def full(self) -> bool:
        return self._count >= self.size

    def push(self, y: float, S_now: float) -> None:
        self.y[self._index] = y
        self.s[self._index] = S_now
        self._index = (self._index + 1) % self.size
        self._count += 1

    def ordered(self) -> tuple[FloatArray, FloatArray]:
        """Histories oldest first."""
        return np.roll(self.y, -self._index), np.roll(self.s, -self._index)


class WindowDemodulator:
    """Moving-window demodulation of y over the last n probing periods."""

    def __init__(self, n: int, epsilon: float, dt: float) -> None:
        if n < 1:
            raise ConfigurationError(
                "window must span at least one period", key="filter.baseline_periods"
            )
        self.n = n
        self.epsilon = epsilon
        self.dt = dt
        self._window = _SampleWindow(snap_to_grid(n * epsilon, dt, "filter.baseline_periods"))
        self.yv_hat = 0.0

    @property
    def size(self) -> int:
        """Samples in the window."""
        return self._window.size

    @property
    def warm(self) -> bool:
        """True once the window is filled with measured samples."""
        return self._window.full

    def step(self, y: float, S_now: float) -> float:
        """Push one sample; return the current estimate (0 until warm)."""
        self._window.push(y, S_now)
        if self.warm:
            y_hist, s_hist = self._window.ordered()
            _, self.yv_hat = window_demod_baseline(y_hist, s_hist, self.n, self.epsilon, self.dt)
        return self.yv_hat


def horizon_gradient_step(
    theta_hat: npt.ArrayLike,
    y: npt.ArrayLike,
    S: npt.ArrayLike,
    gamma: float,
    alpha: float,
    dt: float,
) -> FloatArray:
    """One step of the regularized moving-horizon gradient law.

    With phi = (1, S) and the window averages R = <phi phi'>, c = <phi y>
    held over the step,

        theta_hat' = gamma (R + alpha I)^-1 (c - R theta_hat),

    taken exactly through the exponential of the augmented system. The
    frozen equilibrium is the window least-squares fit.

    Args:
        theta_hat: Current (theta_1, theta_2) with theta_2 = epsilon * y_v.
        y: Output samples of the window.
        S: Matching samples of S.
        gamma: Adaptation gain.
        alpha: Regularization added to the window Gram matrix.
        dt: Step size.

    Returns:
        The estimate at the end of the step.
    """
    y_arr = np.asarray(y, dtype=np.float64).ravel()
    s_arr = np.asarray(S, dtype=np.float64).ravel()
    phi = np.vstack([np.ones_like(s_arr), s_arr])
    gram = phi @ phi.T / s_arr.size
    moments = phi @ y_arr / s_arr.size
    regularized = gram + alpha * np.eye(2)
    try:
        rates = np.linalg.solve(regularized, np.column_stack([gram, moments]))
    except np.linalg.LinAlgError:
        raise NoExcitationError() from None
    augmented = np.zeros((3, 3))
    augmented[:2, :2] = -gamma * rates[:, :2]
    augmented[:2, 2] = gamma * rates[:, 2]
    transition = expm(augmented * dt)
    return np.asarray(transition[:2, :2] @ np.asarray(theta_hat, dtype=np.float64) + transition[:2, 2])


class HorizonGradientEstimator:
    """Gradient estimator driven by the observation error over the last n periods.

    Fits y = theta_1 + S theta_2 like :class:`WindowDemodulator`, but
    moves the estimate towards the window fit at a finite rate set by
    ``gamma`` instead of jumping to it. The offset estimate starts at the
    window mean once the window is full; until then the initial virtual
    output is reported.

    Usage:
        est = HorizonGradientEstimator(10, epsilon=1 / 300, dt=1 / 30000)
        for each sample: yv_hat = est.step(y, S(t))
    """

    def __init__(
        self,
        n: int,
        epsilon: float,
        dt: float,
        gamma: float = DEFAULT_HORIZON_GAMMA,
        alpha: float = DEFAULT_HORIZON_ALPHA,
        initial: float = 0.0,
    ) -> None:
        if n < 1:
            raise ConfigurationError(
                "window must span at least one period", key="filter.baseline_periods"
            )
        if gamma <= 0.0:
            raise ConfigurationError("horizon gain must be positive", key="filter.horizon_gamma")
        if alpha < 0.0:
            raise ConfigurationError(
                "horizon regularization must be non-negative", key="filter.horizon_alpha"
            )
        self.n = n
        self.epsilon = epsilon
        self.dt = dt
        self.gamma = gamma
        self.alpha = alpha
        self._window = _SampleWindow(snap_to_grid(n * epsilon, dt, "filter.baseline_periods"))
        self.theta_hat = np.array([0.0, epsilon * initial])
        self._started = False

    @property
    def warm(self) -> bool:
        """True once the window is filled with measured samples."""
        return self._window.full

    @property
    def yv_hat(self) -> float:
        """Current virtual-output estimate theta_2 / epsilon."""
        return float(self.theta_hat[1]) / self.epsilon

    def step(self, y: float, S_now: float) -> float:
        """Push one sample, advance once the window is full and return the estimate."""
        self._window.push(y, S_now)
        if self.warm:
            if not self._started:
                self.theta_hat[0] = float(self._window.y.mean())
                self._started = True
            self.theta_hat = horizon_gradient_step(
                self.theta_hat, self._window.y, self._window.s, self.gamma, self.alpha, self.dt
            )
        return self.yv_hat
