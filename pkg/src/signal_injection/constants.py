"""Constants for signal-injection simulation.

Numerical tolerances, default gains and file-format settings shared by
the estimator, observer and simulation modules.
"""

from __future__ import annotations

from typing import Final

# Standard gravity in m/s^2
GRAVITY: Final[float] = 9.81

# Default probing period scale (MagLev simulation study)
DEFAULT_EPSILON: Final[float] = 1.0 / 300.0

# Filter gain constant: gamma = gamma_star / epsilon gives 3.5e8 at epsilon = 1/300
DEFAULT_GAMMA_STAR: Final[float] = 3.5e8 / 300.0

# Relative tolerance when snapping delays and windows onto the step grid
SNAP_TOLERANCE: Final[float] = 1e-9

# Minimum number of samples in a tabulated probing waveform
MIN_TABULATED_SAMPLES: Final[int] = 4

# Distance kept from singular configurations (L(q), C(q)), natural units
DEFAULT_GUARD_MARGIN: Final[float] = 1e-6

# Projection floor for the virtual output, as a fraction of its nominal value
PROJECTION_FLOOR_FRACTION: Final[float] = 0.05

# Time an estimate may sit on the projection floor before warning, seconds
DEFAULT_FLOOR_DWELL: Final[float] = 0.05

# Ramp time of the pulse-train reference edges, seconds
DEFAULT_RAMP_TIME: Final[float] = 5e-3

# Integration steps per probing period: default and enforced minimum
DEFAULT_STEPS_PER_PERIOD: Final[int] = 100
MIN_STEPS_PER_PERIOD: Final[int] = 10

# Significant digits written to trajectory CSV files (full double precision)
CSV_PRECISION: Final[int] = 17

# Environment variable naming the default output directory of the CLI
OUTPUT_DIR_ENV: Final[str] = "SIGNAL_INJECTION_OUTPUT_DIR"

# Samples drawn per refill of the measurement-noise buffer
NOISE_BLOCK_SIZE: Final[int] = 4096

# Moving-horizon gradient comparator: adaptation gain and regularization
DEFAULT_HORIZON_GAMMA: Final[float] = 50.0
DEFAULT_HORIZON_ALPHA: Final[float] = 0.01
