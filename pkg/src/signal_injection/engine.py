"""Fixed-step closed-loop simulation of injected electromechanical plants.

One scenario is one sequential loop on a uniform grid t_k = k dt. Per
step the controller computes u_C from the true state (state feedback) or
from the observer (sensorless), the probe s(t/epsilon) b is added, the
plant advances one RK4 step with the probe evaluated at the stage times,
the output is measured with noise, the delay/window operators produce Y,
the virtual-output filter advances and finally the observer advances.

Every scenario owns its random stream, so equal scenarios give equal
trajectories bit for bit.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from collections.abc import Callable, Iterator
from dataclasses import dataclass, field
from pathlib import Path
from typing import TextIO

import numpy as np
import numpy.typing as npt

from .constants import (
    CSV_PRECISION,
    DEFAULT_FLOOR_DWELL,
    DEFAULT_GAMMA_STAR,
    DEFAULT_HORIZON_ALPHA,
    DEFAULT_HORIZON_GAMMA,
    DEFAULT_RAMP_TIME,
    DEFAULT_STEPS_PER_PERIOD,
    MIN_STEPS_PER_PERIOD,
    NOISE_BLOCK_SIZE,
    PROJECTION_FLOOR_FRACTION,
)
from .control import (
    BackstepGains,
    BacksteppingController,
    Controller,
    IdaPbcController,
    IdaPbcGains,
    OpenLoopControl,
    PulseTrain,
)
from .drem import HorizonGradientEstimator, VirtualOutputFilter, WindowDemodulator
from .ems_models import EmsModel, MagLevModel, OpticalSwitchModel, QuadraticEmsModel
from .exceptions import ConfigurationError, SimulationAbort
from .integrators import rk4_step as rk4_step
from .ltv_ops import RegressionSignal, snap_to_grid
from .observers import (
    ElectricalObserver,
    MagLevAdaptiveObserver,
    MagLevLuenberger,
    MagLevObserverGains,
    OpticalSwitchObserver,
    StateObserver,
    virtual_output_floor,
)
from .signals import ProbingSpec

FloatArray = npt.NDArray[np.float64]

NOISE_CONVENTIONS: frozenset[str] = frozenset({"power", "variance"})
OBSERVER_KINDS: frozenset[str] = frozenset({"none", "electrical", "optical-switch", "maglev"})
CONTROL_KINDS: frozenset[str] = frozenset({"open-loop", "ida-pbc", "backstepping"})
FEEDBACK_KINDS: frozenset[str] = frozenset({"state", "observer"})


# --- Measurement noise ------------------------------------------------------------------


@dataclass(frozen=True)
class NoiseSpec:
    """Band-limited white measurement noise.

    Attributes:
        power: Noise power. With the "power" convention the variance is
            power / sample_time; with "variance" it is ``power`` itself.
        sample_time: Interval over which each draw is held.
        seed: Seed of the scenario's random generator.
        convention: "power" or "variance".

    Example:
        >>> NoiseSpec(power=1e-10, sample_time=1e-3).std
        0.00031622776601683794
    """

    power: float = 0.0
    sample_time: float = 1e-3
    seed: int = 0
    convention: str = "power"

    def __post_init__(self) -> None:
        """Validate the noise parameters."""
        if self.power < 0.0:
            raise ConfigurationError("noise power must be non-negative", key="noise.power")
        if self.sample_time <= 0.0:
            raise ConfigurationError("sample_time must be positive", key="noise.sample_time")
        if self.convention not in NOISE_CONVENTIONS:
            raise ConfigurationError(
                f"unknown noise convention {self.convention!r}", key="noise.convention"
            )

    @property
    def variance(self) -> float:
        """Variance of each held draw."""
        if self.convention == "variance":
            return self.power
        return self.power / self.sample_time

    @property
    def std(self) -> float:
        """Standard deviation of each held draw."""
        return math.sqrt(self.variance)


class MeasurementNoise:
    """Seeded sample-and-hold Gaussian noise source.

    Draw k is held on [k * sample_time, (k + 1) * sample_time). Draws are
    consumed in order, so the sequence depends only on the seed; with zero
    power the generator is never touched.
    """

    def __init__(self, spec: NoiseSpec, width: int = 1) -> None:
        self.spec = spec
        self.width = width
        self._rng = np.random.default_rng(spec.seed)
        self._std = spec.std
        self._block = np.zeros((0, width))
        self._position = 0
        self._index = -1
        self._value = np.zeros(width)

    def _next_draw(self) -> FloatArray:
        if self._position >= self._block.shape[0]:
            self._block = self._rng.standard_normal((NOISE_BLOCK_SIZE, self.width)) * self._std
            self._position = 0
        value = self._block[self._position]
        self._position += 1
        return value

    def sample(self, t: float) -> FloatArray:
        """Noise vector held at time ``t`` (times must be non-decreasing)."""
        if self._std == 0.0:
            return np.zeros(self.width)
        index = math.floor(t / self.spec.sample_time + 1e-9)
        while self._index < index:
            self._value = self._next_draw()
            self._index += 1
        return self._value.copy()


def noise_sample(source: MeasurementNoise, t: float) -> float:
    """First channel of the noise held at time ``t``."""
    return float(source.sample(t)[0])


# --- Scenario ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FilterSettings:
    """Virtual-output filter and baseline settings.

    Attributes:
        gamma_star: Bound on gamma * epsilon.
        gamma: Filter gain; gamma_star / epsilon when None.
        delay_periods: Delay d in probing periods; the window is 2d.
        baseline_periods: Window of both comparators in periods (0
            disables them).
        initial: Initial virtual-output estimate.
        horizon_gamma: Gain of the moving-horizon gradient comparator.
        horizon_alpha: Its Gram-matrix regularization.
    """

    gamma_star: float = DEFAULT_GAMMA_STAR
    gamma: float | None = None
    delay_periods: int = 1
    baseline_periods: int = 0
    initial: float = 0.0
    horizon_gamma: float = DEFAULT_HORIZON_GAMMA
    horizon_alpha: float = DEFAULT_HORIZON_ALPHA

    def __post_init__(self) -> None:
        """Validate filter settings."""
        if self.delay_periods < 1:
            raise ConfigurationError("delay_periods must be at least 1", key="filter.delay_periods")
        if self.baseline_periods < 0:
            raise ConfigurationError(
                "baseline_periods must be non-negative", key="filter.baseline_periods"
            )
        if self.horizon_gamma <= 0.0:
            raise ConfigurationError("horizon_gamma must be positive", key="filter.horizon_gamma")
        if self.horizon_alpha < 0.0:
            raise ConfigurationError(
                "horizon_alpha must be non-negative", key="filter.horizon_alpha"
            )

    def resolved_gamma(self, epsilon: float) -> float:
        """Filter gain at probing period ``epsilon``."""
        return self.gamma_star / epsilon if self.gamma is None else self.gamma


@dataclass(frozen=True)
class ObserverSettings:
    """Observer choice, gains and initial guesses.

    Attributes:
        kind: "none", "electrical", "optical-switch" or "maglev".
        gamma: Gain of the electrical and optical-switch observers.
        gains: Gains of the adaptive MagLev observer.
        R_hat0: Initial resistance estimate.
        x1_hat0: Initial flux estimate (lambda* when None).
        q_hat0: Position reported before the observer starts.
        p_hat0: Initial momentum estimate.
        floor_fraction: Projection floor relative to the nominal y_v.
        floor_dwell: Time on the floor before excitation counts as lost.
        luenberger: Also run the Luenberger momentum observer.
        l1: Luenberger gain l1.
        l2: Luenberger gain l2.
        luenberger_form: "corrected" or "verbatim".
    """

    kind: str = "none"
    gamma: float = 8000.0
    gains: MagLevObserverGains = field(default_factory=MagLevObserverGains)
    R_hat0: float = 2.0
    x1_hat0: float | None = None
    q_hat0: float = 0.0
    p_hat0: float = 0.0
    floor_fraction: float = PROJECTION_FLOOR_FRACTION
    floor_dwell: float = DEFAULT_FLOOR_DWELL
    luenberger: bool = False
    l1: float = 60.0
    l2: float = 0.5
    luenberger_form: str = "corrected"

    def __post_init__(self) -> None:
        """Validate the observer choice."""
        if self.kind not in OBSERVER_KINDS:
            raise ConfigurationError(f"unknown observer {self.kind!r}", key="observer.kind")
        if not 0.0 < self.floor_fraction < 1.0:
            raise ConfigurationError(
                "floor_fraction must be in (0, 1)", key="observer.floor_fraction"
            )


@dataclass(frozen=True)
class ControlSettings:
    """Controller choice, gains and reference schedule.

    Attributes:
        kind: "open-loop", "ida-pbc" or "backstepping".
        feedback: "state" (true state, true resistance) or "observer".
        u_open: Constant open-loop input.
        u_amplitude: Amplitude of the open-loop modulation.
        u_frequency: Frequency of the open-loop modulation, Hz.
        K_p: IDA-PBC proportional gain.
        alpha: IDA-PBC interconnection parameter.
        resistance_sign: Sign of the IDA-PBC resistance term.
        gamma1: Backstepping momentum gain.
        gamma2: Backstepping position gain.
        K_i: Backstepping integral gain.
        levels: Pulse-train levels of the position reference.
        period: Pulse-train period.
        ramp: Pulse-train edge duration.
    """

    kind: str = "open-loop"
    feedback: str = "state"
    u_open: float = 0.0
    u_amplitude: float = 0.0
    u_frequency: float = 0.0
    K_p: float = 200.7
    alpha: float = 33.4
    resistance_sign: float = 1.0
    gamma1: float = 340.0
    gamma2: float = 3.0
    K_i: float = 1.0
    levels: tuple[float, ...] = (0.0,)
    period: float = 1.0
    ramp: float = DEFAULT_RAMP_TIME

    def __post_init__(self) -> None:
        """Validate the controller choice."""
        if self.kind not in CONTROL_KINDS:
            raise ConfigurationError(f"unknown controller {self.kind!r}", key="control.kind")
        if self.feedback not in FEEDBACK_KINDS:
            raise ConfigurationError(
                f"unknown feedback source {self.feedback!r}", key="control.feedback"
            )

    def pulse_train(self) -> PulseTrain:
        """Position reference described by these settings."""
        return PulseTrain(levels=self.levels, period=self.period, ramp=self.ramp)


@dataclass(frozen=True)
class Scenario:
    """Complete description of one simulation run.

    Attributes:
        model: The plant.
        probe: Probing signal; its scaling must equal the model's b.
        filter: Virtual-output filter settings.
        observer: Observer settings.
        control: Controller settings.
        noise: Measurement noise.
        dt: Step size; epsilon / dt must be an integer of at least 10.
        horizon: Final time T.
        x0: Initial plant state (plant default when None).
        t_settle: Start of the steady-state metric window (T / 2 when None).
        name: Label used in logs and file names.
    """

    model: EmsModel
    probe: ProbingSpec
    filter: FilterSettings = field(default_factory=FilterSettings)
    observer: ObserverSettings = field(default_factory=ObserverSettings)
    control: ControlSettings = field(default_factory=ControlSettings)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    dt: float | None = None
    horizon: float = 1.0
    x0: tuple[float, ...] | None = None
    t_settle: float | None = None
    name: str = "scenario"

    def __post_init__(self) -> None:
        """Validate the grid and the compatibility of the parts."""
        eps = self.probe.epsilon
        if self.dt is None:
            object.__setattr__(self, "dt", eps / DEFAULT_STEPS_PER_PERIOD)
        steps = snap_to_grid(eps, self.step, "sim.dt")
        if steps < MIN_STEPS_PER_PERIOD:
            raise ConfigurationError(
                f"dt must resolve the probing period with at least {MIN_STEPS_PER_PERIOD} steps, "
                f"got {steps}",
                key="sim.dt",
            )
        if self.horizon <= 0.0:
            raise ConfigurationError("horizon must be positive", key="sim.horizon")
        if self.horizon < self.warmup:
            raise ConfigurationError(
                f"horizon {self.horizon!r} is shorter than the operator warm-up {self.warmup!r}",
                key="sim.horizon",
            )
        if self.noise.sample_time < self.step * (1.0 - 1e-9):
            raise ConfigurationError("noise sample_time must be at least dt", key="noise.sample_time")
        if not np.allclose(self.probe.b, self.model.injection):
            raise ConfigurationError(
                "probe scaling must match the model injection vector", key="probe.scaling"
            )
        if self.t_settle is not None and not 0.0 <= self.t_settle < self.horizon:
            raise ConfigurationError("t_settle must be in [0, horizon)", key="sim.t_settle")
        if self.x0 is not None and len(self.x0) != self.model.n_states:
            raise ConfigurationError(
                f"x0 must have {self.model.n_states} entries", key="plant.x0"
            )
        if self.filter.baseline_periods and len(self.model.injection) != 1:
            raise ConfigurationError(
                "the window baseline supports single-output plants only",
                key="filter.baseline_periods",
            )
        self._check_components()

    def _check_components(self) -> None:
        kind = self.observer.kind
        if kind == "maglev" and not isinstance(self.model, MagLevModel):
            raise ConfigurationError("maglev observer needs a MagLev plant", key="observer.kind")
        if kind == "optical-switch" and not isinstance(self.model, OpticalSwitchModel):
            raise ConfigurationError(
                "optical-switch observer needs an optical-switch plant", key="observer.kind"
            )
        if self.observer.luenberger and kind != "maglev":
            raise ConfigurationError(
                "the Luenberger comparison runs next to the maglev observer",
                key="observer.luenberger",
            )
        if self.control.kind != "open-loop" and not isinstance(self.model, MagLevModel):
            raise ConfigurationError(
                f"{self.control.kind} control needs a MagLev plant", key="control.kind"
            )
        if self.control.kind != "open-loop" and self.control.feedback == "observer" and kind not in (
            "maglev",
            "optical-switch",
        ):
            raise ConfigurationError(
                "observer feedback needs a full-state observer", key="control.feedback"
            )

    @property
    def step(self) -> float:
        """Step size (resolved)."""
        assert self.dt is not None
        return self.dt

    @property
    def delay(self) -> float:
        """Delay d of the regression operators."""
        return self.filter.delay_periods * self.probe.epsilon

    @property
    def warmup(self) -> float:
        """Time before observers may start: 2d + epsilon."""
        return 2.0 * self.delay + self.probe.epsilon

    @property
    def steps(self) -> int:
        """Number of steps N; the grid has N + 1 points."""
        return math.floor(self.horizon / self.step + 1e-9)

    @property
    def settle_time(self) -> float:
        """Start of the steady-state metric window."""
        return self.horizon / 2.0 if self.t_settle is None else self.t_settle

    def initial_state(self) -> FloatArray:
        """x0, or (lambda*, 0, 0) for the MagLev plant."""
        if self.x0 is not None:
            return np.asarray(self.x0, dtype=np.float64)
        if isinstance(self.model, MagLevModel):
            return np.array([self.model.params.lambda_star, 0.0, 0.0])
        raise ConfigurationError("initial state required for this plant", key="plant.x0")


# --- Trajectory -------------------------------------------------------------------------


ErrorPair = tuple[tuple[str, ...], tuple[str, ...]]


class Trajectory:
    """Uniformly sampled record of a run.

    Attributes:
        time: Grid t_k = k dt, k = 0..N.
        channels: Named columns, each the length of ``time``.
        error_pairs: Metric name -> (estimate columns, truth columns).
        epsilon: Probing period of the run.
        dt: Step size of the run.
        name: Scenario label.
    """

    def __init__(
        self,
        time: FloatArray,
        channels: dict[str, FloatArray],
        error_pairs: dict[str, ErrorPair],
        epsilon: float,
        dt: float,
        name: str = "scenario",
    ) -> None:
        for key, values in channels.items():
            if values.shape != time.shape:
                raise ConfigurationError(f"channel {key!r} does not match the time grid")
        self.time = time
        self.channels = channels
        self.error_pairs = error_pairs
        self.epsilon = epsilon
        self.dt = dt
        self.name = name

    def __getitem__(self, name: str) -> FloatArray:
        if name == "t":
            return self.time
        return self.channels[name]

    def __contains__(self, name: object) -> bool:
        return name == "t" or name in self.channels

    def __len__(self) -> int:
        return int(self.time.size)

    @property
    def columns(self) -> list[str]:
        """CSV header: "t" followed by the channels in recording order."""
        return ["t", *self.channels]

    def select(self, names: list[str]) -> Trajectory:
        """Trajectory restricted to the given channels, in the given order.

        Raises:
            ConfigurationError: If a channel was not recorded.
        """
        missing = [name for name in names if name not in self.channels]
        if missing:
            raise ConfigurationError(f"channels not recorded: {', '.join(missing)}")
        channels = {name: self.channels[name] for name in names}
        pairs = {
            key: pair
            for key, pair in self.error_pairs.items()
            if all(col in channels for col in (*pair[0], *pair[1]))
        }
        return Trajectory(self.time, channels, pairs, self.epsilon, self.dt, self.name)

    def rows(self) -> Iterator[list[str]]:
        """Formatted CSV rows, full double precision."""
        data = np.column_stack([self.time, *self.channels.values()])
        for row in data:
            yield [f"{v:.{CSV_PRECISION}g}" for v in row]

    def write_csv(self, stream: TextIO) -> None:
        """Write header and rows to an open text stream."""
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(self.columns)
        writer.writerows(self.rows())

    def to_csv(self, path: str | Path) -> Path:
        """Write the trajectory to ``path`` and return it."""
        target = Path(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        with target.open("w", encoding="utf-8", newline="") as handle:
            self.write_csv(handle)
        return target

    def to_csv_text(self) -> str:
        """CSV content as a string."""
        buffer = io.StringIO()
        self.write_csv(buffer)
        return buffer.getvalue()


def _channel_names(prefix: str, count: int) -> list[str]:
    if count == 1:
        return [prefix]
    return [f"{prefix}{i + 1}" for i in range(count)]


class _Recorder:
    """Preallocated row storage with a fixed column order."""

    def __init__(self, names: list[str], rows: int) -> None:
        self.names = names
        self.data = np.zeros((rows, len(names)))
        self._slots = {name: i for i, name in enumerate(names)}

    def record(self, k: int, t: float, values: dict[str, float]) -> None:
        row = self.data[k]
        for name, value in values.items():
            row[self._slots[name]] = value
        if not np.all(np.isfinite(row)):
            bad = [n for n, v in zip(self.names, row, strict=True) if not math.isfinite(v)]
            raise SimulationAbort(t, ", ".join(bad), snapshot=row.tolist())


# --- Component construction -------------------------------------------------------------


def _quadratic_form(model: EmsModel) -> QuadraticEmsModel:
    if isinstance(model, QuadraticEmsModel):
        return model
    if isinstance(model, (MagLevModel, OpticalSwitchModel)):
        return model.to_quadratic()
    raise ConfigurationError("electrical observer needs a quadratic plant", key="observer.kind")


def build_observer(
    scn: Scenario,
    x0: FloatArray,
    logger: logging.Logger | None = None,
) -> StateObserver | None:
    """Instantiate the observer selected by the scenario."""
    settings = scn.observer
    if settings.kind == "none":
        return None
    nominal = float(scn.model.true_virtual_output(x0)[0])
    if settings.kind == "electrical":
        return ElectricalObserver(_quadratic_form(scn.model), settings.gamma, logger=logger)
    floor = virtual_output_floor(nominal, settings.floor_fraction)
    if isinstance(scn.model, OpticalSwitchModel):
        return OpticalSwitchObserver(
            scn.model,
            settings.gamma,
            floor,
            settings.floor_dwell,
            q_hat0=float(x0[1]),
            logger=logger,
        )
    assert isinstance(scn.model, MagLevModel)
    return MagLevAdaptiveObserver(
        scn.model,
        settings.gains,
        floor,
        settings.R_hat0,
        x1_hat0=settings.x1_hat0,
        q_hat0=settings.q_hat0,
        p_hat0=settings.p_hat0,
        dwell=settings.floor_dwell,
        logger=logger,
    )


def build_controller(scn: Scenario, logger: logging.Logger | None = None) -> Controller:
    """Instantiate the controller selected by the scenario."""
    settings = scn.control
    if settings.kind == "open-loop":
        return OpenLoopControl(settings.u_open, settings.u_amplitude, settings.u_frequency)
    assert isinstance(scn.model, MagLevModel)
    params = scn.model.params
    if settings.kind == "ida-pbc":
        gains = IdaPbcGains(
            K_p=settings.K_p,
            alpha=settings.alpha,
            lambda_star=params.lambda_star,
            resistance_sign=settings.resistance_sign,
        )
        return IdaPbcController(gains, params, settings.pulse_train(), logger=logger)
    backstep = BackstepGains(gamma1=settings.gamma1, gamma2=settings.gamma2, K_i=settings.K_i)
    return BacksteppingController(backstep, params, settings.pulse_train(), logger=logger)


# --- Simulation -------------------------------------------------------------------------


def run_scenario(scn: Scenario, logger: logging.Logger | None = None) -> Trajectory:
    """Simulate a scenario on its fixed grid.

    Args:
        scn: The scenario.
        logger: Optional logger for progress and diagnostics.

    Returns:
        The complete trajectory, floor(T/dt) + 1 samples per channel.

    Raises:
        AdmissibilityError: If the plant leaves its admissible region.
        SimulationAbort: If any state, estimate or input becomes non-finite.
    """
    model = scn.model
    probe = scn.probe
    eps = probe.epsilon
    dt = scn.step
    n_steps = scn.steps
    b = probe.b

    x = scn.initial_state()
    y_true = model.natural_output(x)
    width = y_true.size
    noise = MeasurementNoise(scn.noise, width)
    regression = RegressionSignal(scn.delay, dt, width)
    flt = VirtualOutputFilter(
        scn.filter.resolved_gamma(eps),
        eps,
        width,
        initial=scn.filter.initial,
        gamma_star=scn.filter.gamma_star,
        logger=logger,
    )
    window: WindowDemodulator | None = None
    horizon: HorizonGradientEstimator | None = None
    if scn.filter.baseline_periods:
        window = WindowDemodulator(scn.filter.baseline_periods, eps, dt)
        horizon = HorizonGradientEstimator(
            scn.filter.baseline_periods,
            eps,
            dt,
            gamma=scn.filter.horizon_gamma,
            alpha=scn.filter.horizon_alpha,
            initial=scn.filter.initial,
        )
    observer = build_observer(scn, x, logger)
    luenberger = None
    if scn.observer.luenberger:
        assert isinstance(model, MagLevModel)
        luenberger = MagLevLuenberger(
            model.params, scn.observer.l1, scn.observer.l2, scn.observer.luenberger_form, logger
        )
    controller = build_controller(scn, logger)
    true_resistance = model.params.R if isinstance(model, MagLevModel) else 0.0
    port_scale = model.port_scale
    gate_step = 2 * regression.delay.steps + snap_to_grid(eps, dt, "sim.dt")

    names: list[str] = list(model.state_names)
    y_names = _channel_names("y", width)
    u_names = _channel_names("u", model.n_inputs)
    uc_names = _channel_names("u_c", model.n_inputs)
    Y_names = _channel_names("Y", width)
    yv_hat_names = _channel_names("yv_hat", width)
    yv_names = _channel_names("yv", width)
    names += y_names + u_names + uc_names + ["S"] + Y_names + yv_hat_names + yv_names
    error_pairs: dict[str, ErrorPair] = {"yv": (tuple(yv_hat_names), tuple(yv_names))}
    if window is not None:
        names.append("yv_hat_window")
        error_pairs["yv_window"] = (("yv_hat_window",), tuple(yv_names))
    if horizon is not None:
        names.append("yv_hat_horizon")
        error_pairs["yv_horizon"] = (("yv_hat_horizon",), tuple(yv_names))
    reference_tracked = controller.reference(0.0) is not None
    if reference_tracked:
        names.append("q_star")
        error_pairs["tracking"] = (("q",), ("q_star",))
    if observer is not None:
        obs_names = list(observer.channels())
        names += obs_names
        if isinstance(observer, ElectricalObserver):
            error_pairs["x_E"] = (tuple(obs_names), tuple(model.state_names[: len(obs_names)]))
        else:
            electrical = model.state_names[0]
            error_pairs["x_E"] = ((f"{electrical}_hat",), (electrical,))
            error_pairs["q"] = (("q_hat",), ("q",))
            error_pairs["p"] = (("p_hat",), ("p",))
        if isinstance(observer, MagLevAdaptiveObserver):
            names.append("R")
            error_pairs["R"] = (("R_hat",), ("R",))
    if luenberger is not None:
        names.append("p_hat_luenberger")
        error_pairs["p_luenberger"] = (("p_hat_luenberger",), ("p",))

    recorder = _Recorder(names, n_steps + 1)
    if logger:
        logger.debug(
            "Scenario %s: %d steps of dt=%g, epsilon=%g, observer=%s, control=%s/%s",
            scn.name,
            n_steps,
            dt,
            eps,
            scn.observer.kind,
            scn.control.kind,
            scn.control.feedback,
        )

    y_meas = y_true + noise.sample(0.0)
    Y = regression.step(y_meas)
    S_now = float(probe.primitive(0.0))
    yv_window = window.step(float(y_meas[0]), S_now) if window else 0.0
    yv_horizon = horizon.step(float(y_meas[0]), S_now) if horizon else 0.0

    for k in range(n_steps + 1):
        t = k * dt
        yv_hat = flt.yv_hat.copy()
        if controller.feedback_required and scn.control.feedback == "observer":
            assert observer is not None
            x_fb = observer.state_estimate()
            r_hat = observer.resistance_estimate()
            resistance = true_resistance if r_hat is None else r_hat
            y_fb = y_meas
        else:
            x_fb, resistance, y_fb = x, true_resistance, y_true
        u_c = controller.compute(t, x_fb, resistance, y_fb, dt)
        u = u_c + float(probe.wave(t / eps)) * b

        if observer is not None and not observer.started and k >= gate_step:
            observer.start(port_scale * y_meas, u, port_scale * yv_hat)
            if luenberger is not None:
                assert isinstance(observer, MagLevAdaptiveObserver)
                luenberger.start(observer.x2_hat, observer.p_hat)

        row: dict[str, float] = dict(zip(model.state_names, x.tolist(), strict=True))
        row.update(zip(y_names, y_meas.tolist(), strict=True))
        row.update(zip(u_names, u.tolist(), strict=True))
        row.update(zip(uc_names, u_c.tolist(), strict=True))
        row["S"] = S_now
        row.update(zip(Y_names, Y.tolist(), strict=True))
        row.update(zip(yv_hat_names, yv_hat.tolist(), strict=True))
        row.update(zip(yv_names, model.true_virtual_output(x).tolist(), strict=True))
        if window is not None:
            row["yv_hat_window"] = yv_window
        if horizon is not None:
            row["yv_hat_horizon"] = yv_horizon
        if reference_tracked:
            row["q_star"] = float(controller.reference(t) or 0.0)
        if observer is not None:
            row.update(observer.channels())
            if isinstance(observer, MagLevAdaptiveObserver):
                row["R"] = true_resistance
        if luenberger is not None:
            row["p_hat_luenberger"] = luenberger.p_hat
        recorder.record(k, t, row)
        if k == n_steps:
            break

        def plant(tau: float, state: FloatArray, u_c: FloatArray = u_c) -> FloatArray:
            return model.dynamics(state, u_c + float(probe.wave(tau / eps)) * b)

        x_next = rk4_step(plant, x, t, dt, "plant state")
        t_next = (k + 1) * dt
        S_next = float(probe.primitive(t_next / eps))
        if regression.warm:
            flt.step(S_now, Y, dt)
        if observer is not None and observer.started:
            # the probe averaged over the step, epsilon (S_{k+1} - S_k) / dt
            u_avg = u_c + eps * (S_next - S_now) / dt * b
            observer.step(port_scale * y_meas, u_avg, port_scale * yv_hat, dt)
            if luenberger is not None:
                assert isinstance(observer, MagLevAdaptiveObserver)
                luenberger.step(observer.x2_hat, observer.state.x1_hat, dt)

        x = x_next
        y_true = model.natural_output(x)
        y_meas = y_true + noise.sample(t_next)
        Y = regression.step(y_meas)
        S_now = S_next
        if window is not None:
            yv_window = window.step(float(y_meas[0]), S_now)
        if horizon is not None:
            yv_horizon = horizon.step(float(y_meas[0]), S_now)

    if logger:
        lost = observer.excitation_lost if observer is not None else False
        logger.info("Scenario %s finished: %d samples, excitation lost: %s", scn.name, n_steps + 1, lost)
    channels = {name: recorder.data[:, i].copy() for i, name in enumerate(names)}
    time = np.arange(n_steps + 1) * dt
    return Trajectory(time, channels, error_pairs, eps, dt, scn.name)


# --- Metrics ----------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricRecord:
    """Steady-state error and excitation summary of a trajectory.

    Attributes:
        t_settle: Start of the evaluation window.
        errors: Metric name -> (sup, rms) of the estimation error norm.
        excitation: Regressor name -> smallest windowed Gram eigenvalue.
        jitter: Estimate name -> RMS of its step-to-step increments.
    """

    t_settle: float
    errors: dict[str, tuple[float, float]]
    excitation: dict[str, float]
    jitter: dict[str, float] = field(default_factory=dict)

    def sup(self, name: str) -> float:
        return self.errors[name][0]

    def rms(self, name: str) -> float:
        return self.errors[name][1]

    def as_row(self) -> dict[str, float]:
        """Flat mapping used for summary CSV files."""
        row: dict[str, float] = {}
        for name, (sup, rms) in self.errors.items():
            row[f"{name}_sup"] = sup
            row[f"{name}_rms"] = rms
        for name, value in self.excitation.items():
            row[f"pe_{name}"] = value
        for name, value in self.jitter.items():
            row[f"jitter_{name}"] = value
        return row

    def format(self) -> str:
        """Human-readable multi-line summary."""
        lines = [f"metrics over t >= {self.t_settle:g}"]
        for name, (sup, rms) in self.errors.items():
            lines.append(f"  {name:<14} sup={sup:.6g} rms={rms:.6g}")
        for name, value in self.excitation.items():
            lines.append(f"  pe[{name}]{'':<9} min Gram eigenvalue={value:.6g}")
        for name, value in self.jitter.items():
            lines.append(f"  jitter[{name}]{'':<5} rms increment={value:.6g}")
        return "\n".join(lines)


def windowed_gram_minimum(values: npt.ArrayLike, window_steps: int, dt: float) -> float:
    """Smallest Gram value sum(phi^2) dt over sliding windows of ``window_steps`` samples.

    Raises:
        ConfigurationError: If fewer samples than one window are given.
    """
    squared = np.asarray(values, dtype=np.float64) ** 2
    if squared.ndim != 1 or squared.size < window_steps:
        raise ConfigurationError("metric window is shorter than the excitation window")
    cumulative = np.concatenate(([0.0], np.cumsum(squared)))
    sums = (cumulative[window_steps:] - cumulative[:-window_steps]) * dt
    return float(sums.min())


def compute_metrics(
    traj: Trajectory,
    t_settle: float,
    pe_window: float | None = None,
) -> MetricRecord:
    """Steady-state sup/RMS errors and excitation diagnostics.

    Args:
        traj: A simulated trajectory.
        t_settle: Start of the evaluation window [t_settle, T].
        pe_window: Window of the Gram diagnostic (epsilon when None).

    Returns:
        The metric record.

    Raises:
        ConfigurationError: If the evaluation window is empty.
    """
    mask = traj.time >= t_settle - 1e-12 * max(1.0, abs(t_settle))
    if t_settle >= traj.time[-1] or not np.any(mask):
        raise ConfigurationError(
            f"empty metric window: t_settle={t_settle!r} with horizon {traj.time[-1]!r}",
            key="sim.t_settle",
        )
    errors: dict[str, tuple[float, float]] = {}
    for name, (estimates, truths) in traj.error_pairs.items():
        diff = np.column_stack(
            [traj[e][mask] - traj[r][mask] for e, r in zip(estimates, truths, strict=True)]
        )
        norm = np.sqrt(np.sum(diff * diff, axis=1))
        errors[name] = (float(norm.max()), float(np.sqrt(np.mean(norm * norm))))
    window = traj.epsilon if pe_window is None else pe_window
    window_steps = snap_to_grid(window, traj.dt, "pe_window")
    excitation: dict[str, float] = {}
    for name in ("S", "phi_R"):
        if name in traj:
            excitation[name] = windowed_gram_minimum(traj[name][mask], window_steps, traj.dt)
    jitter: dict[str, float] = {}
    for name in ("yv_hat", "yv_hat_window", "yv_hat_horizon", "q_hat"):
        if name in traj:
            increments = np.diff(traj[name][mask])
            jitter[name] = float(np.sqrt(np.mean(increments**2))) if increments.size else 0.0
    return MetricRecord(t_settle=t_settle, errors=errors, excitation=excitation, jitter=jitter)


# --- Averaging check --------------------------------------------------------------------


@dataclass(frozen=True)
class AveragingReport:
    """Result of co-integrating the injected and the averaged system.

    Attributes:
        time: Grid of the check.
        residual: x - x_bar - epsilon S(t) g b, one row per grid point.
        sup: Largest absolute residual entry.
    """

    time: FloatArray
    residual: FloatArray
    sup: float


ControlLaw = Callable[[float, FloatArray], FloatArray]


def run_averaging_check(
    model: EmsModel,
    probe: ProbingSpec,
    x0: npt.ArrayLike,
    horizon: float,
    dt: float | None = None,
    u_c: npt.ArrayLike | None = None,
    feedback: ControlLaw | None = None,
    shift_start: bool = False,
) -> AveragingReport:
    """Compare the injected system with its average.

    Both systems start at x0, so the residual begins at -epsilon S(0) g b,
    which vanishes for primitives with S(0) = 0. With ``shift_start`` the
    averaged system, driven by the nominal input alone, starts at
    x0 - epsilon S(0) g b instead and the residual starts at zero. A
    feedback law, if given, is evaluated on each system's own state and
    held over the step; otherwise the constant ``u_c`` is applied.

    Args:
        model: The plant.
        probe: Probing signal (its scaling is the injection b).
        x0: Initial state of the injected system.
        horizon: Final time.
        dt: Step size (epsilon / 100 when None).
        u_c: Constant nominal input, used when ``feedback`` is None.
        feedback: Nominal control law u_C(t, x).
        shift_start: Start the averaged system on the ripple-corrected state.

    Returns:
        The residual history and its sup norm.
    """
    eps = probe.epsilon
    step = eps / DEFAULT_STEPS_PER_PERIOD if dt is None else dt
    snap_to_grid(eps, step, "sim.dt")
    if feedback is None:
        if u_c is None:
            raise ConfigurationError("either u_c or feedback is required")
        constant = np.atleast_1d(np.asarray(u_c, dtype=np.float64))

        def law(_t: float, _x: FloatArray) -> FloatArray:
            return constant

        feedback = law
    b = probe.b
    ripple = model.input_matrix() @ b
    n_steps = math.floor(horizon / step + 1e-9)
    x = np.asarray(x0, dtype=np.float64).copy()
    x_bar = x - eps * float(probe.primitive(0.0)) * ripple if shift_start else x.copy()
    residual = np.zeros((n_steps + 1, x.size))
    for k in range(n_steps + 1):
        t = k * step
        residual[k] = x - x_bar - eps * float(probe.primitive(t / eps)) * ripple
        if k == n_steps:
            break
        u_now = feedback(t, x)
        u_bar = feedback(t, x_bar)

        def injected(tau: float, state: FloatArray, u_now: FloatArray = u_now) -> FloatArray:
            return model.dynamics(state, u_now + float(probe.wave(tau / eps)) * b)

        def averaged(_tau: float, state: FloatArray, u_bar: FloatArray = u_bar) -> FloatArray:
            return model.averaged_dynamics(state, u_bar)

        x = rk4_step(injected, x, t, step, "injected state")
        x_bar = rk4_step(averaged, x_bar, t, step, "averaged state")
    time = np.arange(n_steps + 1) * step
    return AveragingReport(time=time, residual=residual, sup=float(np.abs(residual).max()))
