"""High-frequency signal injection for electromechanical systems.

Simulates probing-signal injection on port-Hamiltonian electromechanical
plants, reconstructs the virtual output from the measured ripple with a
DREM-based filter and feeds it to state observers and sensorless
controllers.

Basic usage:
    from signal_injection import load_config, build_scenario, run_scenario, compute_metrics

    cfg = load_config("maglev.cfg")
    scenario = build_scenario(cfg)
    trajectory = run_scenario(scenario)
    trajectory.to_csv("maglev.csv")
    print(compute_metrics(trajectory, scenario.settle_time).format())

Building blocks directly:
    from signal_injection import ProbingSpec, RegressionSignal, VirtualOutputFilter

    probe = ProbingSpec(shape="sinusoid", epsilon=1 / 300)
    regression = RegressionSignal(d=probe.epsilon, dt=probe.epsilon / 100)
    flt = VirtualOutputFilter(gamma=1e5, epsilon=probe.epsilon)
"""

from __future__ import annotations

from .config import ScenarioConfig, build_scenario, dump_config_text, load_config, parse_config_text
from .constants import (
    CSV_PRECISION,
    DEFAULT_EPSILON,
    DEFAULT_GAMMA_STAR,
    DEFAULT_STEPS_PER_PERIOD,
    MIN_STEPS_PER_PERIOD,
    OUTPUT_DIR_ENV,
)
from .control import (
    BackstepGains,
    BacksteppingController,
    IdaPbcController,
    IdaPbcGains,
    OpenLoopControl,
    PulseTrain,
    backstepping_integral,
    ida_pbc,
)
from .drem import (
    DremEstimator,
    HorizonGradientEstimator,
    ScalarGradState,
    VirtualOutputFilter,
    WindowDemodulator,
    extend_mix,
    horizon_gradient_step,
    scalar_gradient_step,
    virtual_output_filter_step,
    window_demod_baseline,
)
from .ems_models import (
    EmsModel,
    MagLevModel,
    MagLevParams,
    OpticalSwitchModel,
    OpticalSwitchParams,
    QuadraticEmsModel,
    averaged_dynamics,
    dynamics,
    natural_output,
    true_virtual_output,
)
from .engine import (
    ControlSettings,
    FilterSettings,
    MeasurementNoise,
    MetricRecord,
    NoiseSpec,
    ObserverSettings,
    Scenario,
    Trajectory,
    compute_metrics,
    run_averaging_check,
    run_scenario,
)
from .exceptions import (
    AdmissibilityError,
    ConfigurationError,
    NoExcitationError,
    SignalInjectionError,
    SimulationAbort,
)
from .integrators import rk4_step
from .ltv_ops import (
    DelayOperator,
    LowpassOperator,
    RegressionSignal,
    WzohOperator,
    build_Y,
    delay_step,
    gd_freq_response,
    gd_table,
    lowpass_step,
    snap_to_grid,
    wzoh_step,
)
from .observers import (
    ElectricalObserver,
    MagLevAdaptiveObserver,
    MagLevLuenberger,
    MagLevObserverGains,
    OpticalSwitchObserver,
    electrical_observer_step,
    maglev_adaptive_observer_step,
    maglev_luenberger_step,
    optsw_observer_step,
)
from .signals import ProbingSpec, S_eval, injected_input, load_tabulated, s_eval
from .sweep import run_sweep

__version__ = "0.1.0"

__all__ = [
    # Simulation
    "Scenario",
    "FilterSettings",
    "ObserverSettings",
    "ControlSettings",
    "NoiseSpec",
    "MeasurementNoise",
    "Trajectory",
    "MetricRecord",
    "run_scenario",
    "compute_metrics",
    "run_averaging_check",
    "run_sweep",
    "rk4_step",
    # Configuration
    "ScenarioConfig",
    "load_config",
    "parse_config_text",
    "dump_config_text",
    "build_scenario",
    # Probing signals
    "ProbingSpec",
    "load_tabulated",
    "s_eval",
    "S_eval",
    "injected_input",
    # Operators
    "DelayOperator",
    "WzohOperator",
    "LowpassOperator",
    "RegressionSignal",
    "delay_step",
    "wzoh_step",
    "lowpass_step",
    "build_Y",
    "snap_to_grid",
    "gd_freq_response",
    "gd_table",
    # Estimators
    "VirtualOutputFilter",
    "virtual_output_filter_step",
    "ScalarGradState",
    "DremEstimator",
    "extend_mix",
    "scalar_gradient_step",
    "WindowDemodulator",
    "window_demod_baseline",
    "HorizonGradientEstimator",
    "horizon_gradient_step",
    # Plants
    "EmsModel",
    "QuadraticEmsModel",
    "MagLevModel",
    "MagLevParams",
    "OpticalSwitchModel",
    "OpticalSwitchParams",
    "dynamics",
    "natural_output",
    "true_virtual_output",
    "averaged_dynamics",
    # Observers
    "ElectricalObserver",
    "OpticalSwitchObserver",
    "MagLevAdaptiveObserver",
    "MagLevObserverGains",
    "MagLevLuenberger",
    "electrical_observer_step",
    "optsw_observer_step",
    "maglev_adaptive_observer_step",
    "maglev_luenberger_step",
    # Control
    "PulseTrain",
    "IdaPbcGains",
    "IdaPbcController",
    "ida_pbc",
    "BackstepGains",
    "BacksteppingController",
    "backstepping_integral",
    "OpenLoopControl",
    # Exceptions
    "SignalInjectionError",
    "ConfigurationError",
    "AdmissibilityError",
    "SimulationAbort",
    "NoExcitationError",
    # Constants
    "DEFAULT_EPSILON",
    "DEFAULT_GAMMA_STAR",
    "DEFAULT_STEPS_PER_PERIOD",
    "MIN_STEPS_PER_PERIOD",
    "CSV_PRECISION",
    "OUTPUT_DIR_ENV",
]
