"""Port-Hamiltonian electromechanical plants.

The general model has state x = (Q, lambda, q, p): capacitor charges,
inductor fluxes, mechanical positions and momenta. With quadratic
electrical energies

    H = 1/2 Q' C(q)^-1 Q + 1/2 lambda' L(q)^-1 lambda + 1/2 p' M^-1 p + V(q)

the dynamics are xdot = F grad H + g u with

    F = [[-R_C^-1, 0, 0, 0], [0, -R_L, 0, 0], [0, 0, 0, I], [0, 0, -I, -R_M]]
    g = [[R_C^-1, 0], [0, I], [0, 0], [0, 0]].

Two concrete plants are provided with scalar arithmetic: the 1-dof
magnetic levitation system, state (lambda, q, p), and the optical switch,
state (Q, q, p). Both convert to the general form for cross-checks.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from .constants import DEFAULT_GUARD_MARGIN, GRAVITY
from .exceptions import AdmissibilityError, ConfigurationError

FloatArray = npt.NDArray[np.float64]
MatrixMap = Callable[[FloatArray], FloatArray]


class EmsModel(ABC):
    """Common interface of the simulated plants.

    Attributes:
        state_names: Names of the state coordinates, in storage order.
    """

    state_names: tuple[str, ...] = ()

    @property
    def n_states(self) -> int:
        """Dimension of the state vector."""
        return len(self.state_names)

    @property
    @abstractmethod
    def n_inputs(self) -> int:
        """Number of input channels (n_C + n_L)."""

    @abstractmethod
    def check_admissible(self, x: FloatArray) -> None:
        """Raise AdmissibilityError if ``x`` is outside the guarded region."""

    @abstractmethod
    def dynamics(self, x: FloatArray, u: FloatArray) -> FloatArray:
        """State derivative F grad H(x) + g u."""

    @abstractmethod
    def natural_output(self, x: FloatArray) -> FloatArray:
        """Measured output."""

    @abstractmethod
    def true_virtual_output(self, x: FloatArray) -> FloatArray:
        """Ripple coefficient of the output under injection along b."""

    @abstractmethod
    def hamiltonian(self, x: FloatArray) -> float:
        """Total stored energy H(x)."""

    @abstractmethod
    def dissipation(self, x: FloatArray) -> float:
        """Dissipated power grad H' R grad H >= 0."""

    @abstractmethod
    def supply(self, x: FloatArray, u: FloatArray) -> float:
        """Power supplied through the port, (g' grad H)' u."""

    @abstractmethod
    def input_matrix(self) -> FloatArray:
        """Constant input matrix g, shape (n_states, n_inputs)."""

    @property
    @abstractmethod
    def injection(self) -> FloatArray:
        """Injection scaling vector b used for the virtual output."""

    def averaged_dynamics(self, x_bar: FloatArray, u_c: FloatArray) -> FloatArray:
        """Vector field of the averaged system, driven by the nominal input only."""
        return self.dynamics(x_bar, u_c)

    def ripple_direction(self) -> FloatArray:
        """g b: direction of the first-order state ripple epsilon*S*g*b."""
        return self.input_matrix() @ self.injection

    @property
    def port_scale(self) -> float:
        """Factor mapping the measured output onto the natural port output."""
        return 1.0


def _require_spd(name: str, matrix: FloatArray, semidefinite: bool = False) -> None:
    if matrix.size == 0:
        return
    if not np.allclose(matrix, matrix.T):
        raise ConfigurationError(f"{name} must be symmetric")
    smallest = float(np.linalg.eigvalsh(matrix).min())
    if smallest < 0.0 or (not semidefinite and smallest == 0.0):
        kind = "positive semidefinite" if semidefinite else "positive definite"
        raise ConfigurationError(f"{name} must be {kind}")


def _zero_matrix_map(n: int, n_m: int) -> MatrixMap:
    return lambda q: np.zeros((n_m, n, n))


@dataclass(frozen=True, eq=False)
class QuadraticEmsModel(EmsModel):
    """General electromechanical plant with quadratic electrical energies.

    Attributes:
        n_c: Number of capacitive ports.
        n_l: Number of inductive ports.
        n_m: Number of mechanical degrees of freedom.
        r_c: Capacitive-port resistance matrix (n_c x n_c), positive definite.
        r_l: Inductive-port resistance matrix (n_l x n_l), positive definite.
        r_m: Mechanical damping (n_m x n_m), positive semidefinite.
        inertia: Mass matrix M of the kinetic energy.
        capacitance: q -> C(q), symmetric positive definite.
        capacitance_grad: q -> dC/dq, shape (n_m, n_c, n_c).
        inductance: q -> L(q), symmetric positive definite.
        inductance_grad: q -> dL/dq, shape (n_m, n_l, n_l).
        potential: q -> V(q), mechanical potential energy.
        potential_grad: q -> grad V(q).
        b: Injection vector (b_CE, b_LE).
        q_lower: Lower guard of the admissible positions.
        q_upper: Upper guard of the admissible positions.
        guard_margin: Distance kept from the guards.
    """

    n_c: int
    n_l: int
    n_m: int
    r_c: FloatArray
    r_l: FloatArray
    r_m: FloatArray
    inertia: FloatArray
    capacitance: MatrixMap
    capacitance_grad: MatrixMap
    inductance: MatrixMap
    inductance_grad: MatrixMap
    potential: Callable[[FloatArray], float] = field(default=lambda q: 0.0)
    potential_grad: MatrixMap | None = None
    b: FloatArray = field(default_factory=lambda: np.zeros(0))
    q_lower: FloatArray | None = None
    q_upper: FloatArray | None = None
    guard_margin: float = DEFAULT_GUARD_MARGIN

    def __post_init__(self) -> None:
        """Validate dimensions and dissipation matrices."""
        if min(self.n_c, self.n_l, self.n_m) < 0 or self.n_c + self.n_l == 0:
            raise ConfigurationError("model needs at least one electrical port")
        shapes = {
            "r_c": (self.r_c, self.n_c),
            "r_l": (self.r_l, self.n_l),
            "r_m": (self.r_m, self.n_m),
            "inertia": (self.inertia, self.n_m),
        }
        for name, (matrix, n) in shapes.items():
            if np.shape(matrix) != (n, n):
                raise ConfigurationError(f"{name} must have shape ({n}, {n})")
        _require_spd("r_c", self.r_c)
        _require_spd("r_l", self.r_l)
        _require_spd("r_m", self.r_m, semidefinite=True)
        _require_spd("inertia", self.inertia)
        b = np.asarray(self.b, dtype=np.float64)
        if b.size == 0:
            b = np.ones(self.n_c + self.n_l)
        if b.shape != (self.n_c + self.n_l,):
            raise ConfigurationError("b must have one entry per input channel", key="probe.scaling")
        object.__setattr__(self, "b", b)
        if self.potential_grad is None:
            object.__setattr__(self, "potential_grad", lambda q: np.zeros(self.n_m))
        names = (
            [f"Q{i + 1}" if self.n_c > 1 else "Q" for i in range(self.n_c)]
            + [f"lambda{i + 1}" if self.n_l > 1 else "lambda" for i in range(self.n_l)]
            + [f"q{i + 1}" if self.n_m > 1 else "q" for i in range(self.n_m)]
            + [f"p{i + 1}" if self.n_m > 1 else "p" for i in range(self.n_m)]
        )
        object.__setattr__(self, "state_names", tuple(names))

    @property
    def n_inputs(self) -> int:
        return self.n_c + self.n_l

    @property
    def injection(self) -> FloatArray:
        return self.b

    def split(self, x: FloatArray) -> tuple[FloatArray, FloatArray, FloatArray, FloatArray]:
        """Return the (Q, lambda, q, p) blocks of a state vector."""
        i1 = self.n_c
        i2 = i1 + self.n_l
        i3 = i2 + self.n_m
        return x[:i1], x[i1:i2], x[i2:i3], x[i3:]

    def check_admissible(self, x: FloatArray) -> None:
        _, _, q, _ = self.split(x)
        for i, value in enumerate(q):
            name = self.state_names[self.n_c + self.n_l + i]
            if self.q_upper is not None and value >= self.q_upper[i] - self.guard_margin:
                raise AdmissibilityError(name, float(value), float(self.q_upper[i]))
            if self.q_lower is not None and value <= self.q_lower[i] + self.guard_margin:
                raise AdmissibilityError(name, float(value), float(self.q_lower[i]))

    def _efforts(self, x: FloatArray) -> tuple[FloatArray, FloatArray, FloatArray, FloatArray]:
        """Co-energy variables (v_C, i_L, dH/dq, dH/dp)."""
        charge, flux, q, p = self.split(x)
        v_c = np.linalg.solve(self.capacitance(q), charge) if self.n_c else np.zeros(0)
        i_l = np.linalg.solve(self.inductance(q), flux) if self.n_l else np.zeros(0)
        assert self.potential_grad is not None
        dh_dq = np.asarray(self.potential_grad(q), dtype=np.float64).copy()
        # electrical force F_E = -d(H_C + H_L)/dq
        if self.n_c:
            dh_dq -= 0.5 * np.einsum("i,kij,j->k", v_c, self.capacitance_grad(q), v_c)
        if self.n_l:
            dh_dq -= 0.5 * np.einsum("i,kij,j->k", i_l, self.inductance_grad(q), i_l)
        dh_dp = np.linalg.solve(self.inertia, p) if self.n_m else np.zeros(0)
        return v_c, i_l, dh_dq, dh_dp

    def dynamics(self, x: FloatArray, u: FloatArray) -> FloatArray:
        self.check_admissible(x)
        v_c, i_l, dh_dq, dh_dp = self._efforts(x)
        u_c = u[: self.n_c]
        u_l = u[self.n_c :]
        charge_rate = np.linalg.solve(self.r_c, u_c - v_c) if self.n_c else np.zeros(0)
        flux_rate = -self.r_l @ i_l + u_l
        return np.concatenate([charge_rate, flux_rate, dh_dp, -dh_dq - self.r_m @ dh_dp])

    def natural_output(self, x: FloatArray) -> FloatArray:
        self.check_admissible(x)
        v_c, i_l, _, _ = self._efforts(x)
        y_c = np.linalg.solve(self.r_c, v_c) if self.n_c else np.zeros(0)
        return np.concatenate([y_c, i_l])

    def true_virtual_output(self, x: FloatArray) -> FloatArray:
        self.check_admissible(x)
        _, _, q, _ = self.split(x)
        parts = []
        if self.n_c:
            b_ce = np.linalg.solve(self.r_c, self.b[: self.n_c])
            parts.append(np.linalg.solve(self.r_c, np.linalg.solve(self.capacitance(q), b_ce)))
        if self.n_l:
            parts.append(np.linalg.solve(self.inductance(q), self.b[self.n_c :]))
        return np.concatenate(parts)

    def hamiltonian(self, x: FloatArray) -> float:
        charge, flux, q, p = self.split(x)
        v_c, i_l, _, dh_dp = self._efforts(x)
        return float(0.5 * charge @ v_c + 0.5 * flux @ i_l + 0.5 * p @ dh_dp + self.potential(q))

    def dissipation(self, x: FloatArray) -> float:
        v_c, i_l, _, dh_dp = self._efforts(x)
        electric = float(v_c @ np.linalg.solve(self.r_c, v_c)) if self.n_c else 0.0
        return electric + float(i_l @ self.r_l @ i_l) + float(dh_dp @ self.r_m @ dh_dp)

    def supply(self, x: FloatArray, u: FloatArray) -> float:
        return float(self.natural_output(x) @ u)

    def input_matrix(self) -> FloatArray:
        g = np.zeros((self.n_states, self.n_inputs))
        if self.n_c:
            g[: self.n_c, : self.n_c] = np.linalg.inv(self.r_c)
        g[self.n_c : self.n_c + self.n_l, self.n_c :] = np.eye(self.n_l)
        return g

    def electrical_matrices(self) -> tuple[FloatArray, FloatArray]:
        """R_E = diag(R_C^-1, R_L) and g_E = diag(R_C^-1, I)."""
        n_e = self.n_inputs
        r_e = np.zeros((n_e, n_e))
        g_e = np.zeros((n_e, n_e))
        if self.n_c:
            r_c_inv = np.linalg.inv(self.r_c)
            r_e[: self.n_c, : self.n_c] = r_c_inv
            g_e[: self.n_c, : self.n_c] = r_c_inv
        r_e[self.n_c :, self.n_c :] = self.r_l
        g_e[self.n_c :, self.n_c :] = np.eye(self.n_l)
        return r_e, g_e

    def regression_matrices(self, yv: FloatArray) -> tuple[FloatArray, FloatArray]:
        """Y_v = diag(y_vC' R_C, y_vL') and B_E = diag(b_CE', b_LE').

        Only blocks with at least one port contribute a row, so that
        B_E y = Y_v x_E holds with x_E = (Q, lambda).
        """
        n_e = self.n_inputs
        rows_y: list[FloatArray] = []
        rows_b: list[FloatArray] = []
        if self.n_c:
            row = np.zeros(n_e)
            row[: self.n_c] = yv[: self.n_c] @ self.r_c
            rows_y.append(row)
            brow = np.zeros(n_e)
            brow[: self.n_c] = self.b[: self.n_c]
            rows_b.append(brow)
        if self.n_l:
            row = np.zeros(n_e)
            row[self.n_c :] = yv[self.n_c :]
            rows_y.append(row)
            brow = np.zeros(n_e)
            brow[self.n_c :] = self.b[self.n_c :]
            rows_b.append(brow)
        return np.vstack(rows_y), np.vstack(rows_b)

    def electrical_state(self, x: FloatArray) -> FloatArray:
        """x_E = (Q, lambda)."""
        return x[: self.n_inputs].copy()


@dataclass(frozen=True)
class MagLevParams:
    """Parameters of the 1-dof magnetic levitation system.

    The inductance is L(q) = k / (c - q), admissible for q < c.

    Attributes:
        m: Ball mass, kg.
        G: Gravity, m/s^2.
        R: Coil resistance, ohm.
        c: Position offset, m.
        k: Inductance constant, H*m.

    Example:
        >>> params = MagLevParams()  # simulation column of the parameter table
        >>> round(params.lambda_star, 5)
        0.10298
    """

    m: float = 0.0844
    G: float = GRAVITY
    R: float = 2.52
    c: float = 0.005
    k: float = 6404.2e-6

    def __post_init__(self) -> None:
        """Validate parameter signs."""
        for name in ("m", "G", "R", "c", "k"):
            if getattr(self, name) <= 0.0:
                raise ConfigurationError(f"{name} must be positive", key=f"maglev.{name.lower()}")

    @property
    def lambda_star(self) -> float:
        """Flux that balances gravity, sqrt(2 k m G)."""
        return math.sqrt(2.0 * self.k * self.m * self.G)

    def current(self, flux: float, q: float) -> float:
        """Coil current i = lambda (c - q) / k."""
        return flux * (self.c - q) / self.k

    def equilibrium_voltage(self, q: float) -> float:
        """Voltage holding lambda = lambda_star at position q."""
        return self.R * self.current(self.lambda_star, q)


@dataclass(frozen=True, eq=False)
class MagLevModel(EmsModel):
    """Magnetic levitation plant, state (lambda, q, p).

    H = m G q + p^2/(2m) + lambda^2 (c - q)/(2k), with

        lambda' = -R i + u,  q' = p/m,  p' = -m G + lambda^2/(2k).

    Attributes:
        params: Physical parameters.
        b: Injection scaling.
        guard_margin: Distance kept from q = c.
    """

    params: MagLevParams = field(default_factory=MagLevParams)
    b: float = 1.0
    guard_margin: float = DEFAULT_GUARD_MARGIN
    state_names: tuple[str, ...] = ("lambda", "q", "p")

    @property
    def n_inputs(self) -> int:
        return 1

    @property
    def injection(self) -> FloatArray:
        return np.array([self.b])

    def check_admissible(self, x: FloatArray) -> None:
        bound = self.params.c
        if x[1] >= bound - self.guard_margin:
            raise AdmissibilityError("q", float(x[1]), bound)

    def dynamics(self, x: FloatArray, u: FloatArray) -> FloatArray:
        self.check_admissible(x)
        pr = self.params
        flux, q, p = float(x[0]), float(x[1]), float(x[2])
        return np.array(
            [
                -pr.R * pr.current(flux, q) + float(u[0]),
                p / pr.m,
                -pr.m * pr.G + flux * flux / (2.0 * pr.k),
            ]
        )

    def natural_output(self, x: FloatArray) -> FloatArray:
        self.check_admissible(x)
        return np.array([self.params.current(float(x[0]), float(x[1]))])

    def true_virtual_output(self, x: FloatArray) -> FloatArray:
        self.check_admissible(x)
        return np.array([self.b * (self.params.c - float(x[1])) / self.params.k])

    def hamiltonian(self, x: FloatArray) -> float:
        pr = self.params
        flux, q, p = float(x[0]), float(x[1]), float(x[2])
        return pr.m * pr.G * q + p * p / (2.0 * pr.m) + flux * flux * (pr.c - q) / (2.0 * pr.k)

    def dissipation(self, x: FloatArray) -> float:
        i = self.params.current(float(x[0]), float(x[1]))
        return self.params.R * i * i

    def supply(self, x: FloatArray, u: FloatArray) -> float:
        return self.params.current(float(x[0]), float(x[1])) * float(u[0])

    def input_matrix(self) -> FloatArray:
        return np.array([[1.0], [0.0], [0.0]])

    def position_from_virtual_output(self, yv: float) -> float:
        """Invert y_v = b (c - q)/k for the position."""
        return self.params.c - self.params.k * yv / self.b

    def to_quadratic(self) -> QuadraticEmsModel:
        """The same plant in the general (Q, lambda, q, p) form."""
        pr = self.params
        return QuadraticEmsModel(
            n_c=0,
            n_l=1,
            n_m=1,
            r_c=np.zeros((0, 0)),
            r_l=np.array([[pr.R]]),
            r_m=np.zeros((1, 1)),
            inertia=np.array([[pr.m]]),
            capacitance=lambda q: np.zeros((0, 0)),
            capacitance_grad=_zero_matrix_map(0, 1),
            inductance=lambda q: np.array([[pr.k / (pr.c - q[0])]]),
            inductance_grad=lambda q: np.array([[[pr.k / (pr.c - q[0]) ** 2]]]),
            potential=lambda q: pr.m * pr.G * float(q[0]),
            potential_grad=lambda q: np.array([pr.m * pr.G]),
            b=np.array([self.b]),
            q_upper=np.array([pr.c]),
            guard_margin=self.guard_margin,
        )


@dataclass(frozen=True)
class OpticalSwitchParams:
    """Parameters of the electrostatic optical switch.

    The capacitance is C(q) = c1 (q + c0), admissible for q > 0.

    Attributes:
        m: Actuator mass.
        a1: Linear spring constant.
        a2: Cubic spring constant.
        c0: Capacitance offset.
        c1: Capacitance slope.
        r_c: Series resistance.
        r_m: Mechanical damping.
    """

    m: float = 1e-3
    a1: float = 1.0
    a2: float = 1e4
    c0: float = 1e-3
    c1: float = 1e-3
    r_c: float = 1.0
    r_m: float = 1e-2

    def __post_init__(self) -> None:
        """Validate parameter signs."""
        for name in ("m", "a1", "a2", "c0", "c1", "r_c", "r_m"):
            if getattr(self, name) <= 0.0:
                raise ConfigurationError(f"{name} must be positive", key=f"optsw.{name}")

    def capacitance(self, q: float) -> float:
        """C(q) = c1 (q + c0)."""
        return self.c1 * (q + self.c0)

    def equilibrium_charge(self, q: float) -> float:
        """Charge whose electrostatic force balances the springs at rest at ``q``."""
        spring = self.a1 * q + self.a2 * q**3
        return (q + self.c0) * math.sqrt(2.0 * self.c1 * spring)


@dataclass(frozen=True, eq=False)
class OpticalSwitchModel(EmsModel):
    """Optical switch plant, state (Q, q, p).

    The measured output is the capacitor voltage y = v_C = Q / C(q) and the
    virtual output is y_v = b / (R_C C(q)), so that y / R_C = y_v Q for b = 1.

    Attributes:
        params: Physical parameters.
        b: Injection scaling.
        guard_margin: Distance kept from q = 0.
    """

    params: OpticalSwitchParams = field(default_factory=OpticalSwitchParams)
    b: float = 1.0
    guard_margin: float = DEFAULT_GUARD_MARGIN
    state_names: tuple[str, ...] = ("Q", "q", "p")

    @property
    def n_inputs(self) -> int:
        return 1

    @property
    def injection(self) -> FloatArray:
        return np.array([self.b])

    def check_admissible(self, x: FloatArray) -> None:
        if x[1] <= self.guard_margin:
            raise AdmissibilityError("q", float(x[1]), 0.0)

    def _voltage(self, x: FloatArray) -> float:
        return float(x[0]) / self.params.capacitance(float(x[1]))

    def dynamics(self, x: FloatArray, u: FloatArray) -> FloatArray:
        self.check_admissible(x)
        pr = self.params
        charge, q, p = float(x[0]), float(x[1]), float(x[2])
        v_c = self._voltage(x)
        force = charge * charge / (2.0 * pr.c1 * (q + pr.c0) ** 2)
        return np.array(
            [
                (-v_c + float(u[0])) / pr.r_c,
                p / pr.m,
                -pr.a1 * q - pr.a2 * q**3 + force - pr.r_m * p / pr.m,
            ]
        )

    def natural_output(self, x: FloatArray) -> FloatArray:
        self.check_admissible(x)
        return np.array([self._voltage(x)])

    def true_virtual_output(self, x: FloatArray) -> FloatArray:
        self.check_admissible(x)
        return np.array([self.b / (self.params.r_c * self.params.capacitance(float(x[1])))])

    def hamiltonian(self, x: FloatArray) -> float:
        pr = self.params
        charge, q, p = float(x[0]), float(x[1]), float(x[2])
        return (
            p * p / (2.0 * pr.m)
            + pr.a1 * q * q / 2.0
            + pr.a2 * q**4 / 4.0
            + charge * charge / (2.0 * pr.capacitance(q))
        )

    def dissipation(self, x: FloatArray) -> float:
        v_c = self._voltage(x)
        velocity = float(x[2]) / self.params.m
        return v_c * v_c / self.params.r_c + self.params.r_m * velocity * velocity

    def supply(self, x: FloatArray, u: FloatArray) -> float:
        return self._voltage(x) / self.params.r_c * float(u[0])

    def input_matrix(self) -> FloatArray:
        return np.array([[1.0 / self.params.r_c], [0.0], [0.0]])

    @property
    def port_scale(self) -> float:
        """The port output of the general form is y / R_C."""
        return 1.0 / self.params.r_c

    def position_from_virtual_output(self, yv: float) -> float:
        """Invert y_v = b / (R_C c1 (q + c0)) for the position."""
        pr = self.params
        return self.b / (pr.r_c * pr.c1 * yv) - pr.c0

    def to_quadratic(self) -> QuadraticEmsModel:
        """The same plant in the general form (its output is y / R_C)."""
        pr = self.params
        return QuadraticEmsModel(
            n_c=1,
            n_l=0,
            n_m=1,
            r_c=np.array([[pr.r_c]]),
            r_l=np.zeros((0, 0)),
            r_m=np.array([[pr.r_m]]),
            inertia=np.array([[pr.m]]),
            capacitance=lambda q: np.array([[pr.c1 * (q[0] + pr.c0)]]),
            capacitance_grad=lambda q: np.array([[[pr.c1]]]),
            inductance=lambda q: np.zeros((0, 0)),
            inductance_grad=_zero_matrix_map(0, 1),
            potential=lambda q: pr.a1 * float(q[0]) ** 2 / 2.0 + pr.a2 * float(q[0]) ** 4 / 4.0,
            potential_grad=lambda q: np.array([pr.a1 * q[0] + pr.a2 * q[0] ** 3]),
            b=np.array([self.b]),
            q_lower=np.array([0.0]),
            guard_margin=self.guard_margin,
        )


def dynamics(model: EmsModel, x: npt.ArrayLike, u: npt.ArrayLike) -> FloatArray:
    """State derivative of ``model`` at ``x`` under input ``u``."""
    return model.dynamics(np.asarray(x, dtype=np.float64), np.atleast_1d(np.asarray(u, dtype=np.float64)))


def natural_output(model: EmsModel, x: npt.ArrayLike) -> FloatArray:
    """Measured output of ``model`` at ``x``."""
    return model.natural_output(np.asarray(x, dtype=np.float64))


def true_virtual_output(model: EmsModel, x: npt.ArrayLike) -> FloatArray:
    """Ground-truth virtual output of ``model`` at ``x``."""
    return model.true_virtual_output(np.asarray(x, dtype=np.float64))


def averaged_dynamics(model: EmsModel, x_bar: npt.ArrayLike, u_c: npt.ArrayLike) -> FloatArray:
    """Averaged vector field: the plant driven by the nominal input alone."""
    return model.averaged_dynamics(
        np.asarray(x_bar, dtype=np.float64), np.atleast_1d(np.asarray(u_c, dtype=np.float64))
    )
