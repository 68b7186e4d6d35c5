"""Custom exceptions for signal-injection simulation.

Provides a hierarchy of exceptions so callers can tell configuration
mistakes apart from runs that had to be aborted.
"""

from __future__ import annotations

from collections.abc import Sequence


class SignalInjectionError(Exception):
    """Base exception for toolkit errors.

    All toolkit-specific exceptions inherit from this class,
    allowing callers to catch every failure with a single except clause.
    """


class ConfigurationError(SignalInjectionError, ValueError):
    """Raised when a scenario or object is configured inconsistently.

    This typically occurs when:
    - A scenario file contains an unknown, duplicate or malformed key
    - A required key is missing
    - A parameter is outside its admissible range

    Attributes:
        key: The offending configuration key, if known.
        line: 1-based line number in the scenario text, if known.
    """

    def __init__(
        self,
        message: str,
        key: str | None = None,
        line: int | None = None,
    ) -> None:
        self.key = key
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class AdmissibilityError(SignalInjectionError):
    """Raised when a plant state leaves its admissible region.

    Position-dependent inductance and capacitance maps are singular at the
    region boundary, so the run is aborted instead of extrapolated.

    Attributes:
        coordinate: Name of the offending state coordinate.
        value: The value that violated the guard.
        bound: The guarded boundary value.
    """

    def __init__(
        self,
        coordinate: str,
        value: float,
        bound: float,
        message: str | None = None,
    ) -> None:
        self.coordinate = coordinate
        self.value = value
        self.bound = bound
        if message is None:
            message = f"{coordinate}={value:.6g} violates guard at {bound:.6g}"
        super().__init__(message)


class SimulationAbort(SignalInjectionError):
    """Raised when a run produces a non-finite value.

    Attributes:
        time: Simulation time of the failing step.
        label: Name of the quantity that became non-finite.
        snapshot: Values of that quantity before the failing step.
    """

    def __init__(
        self,
        time: float,
        label: str,
        snapshot: Sequence[float] = (),
        message: str | None = None,
    ) -> None:
        self.time = time
        self.label = label
        self.snapshot = tuple(float(v) for v in snapshot)
        if message is None:
            message = f"non-finite {label} at t={time:.6g} (last finite: {self.snapshot})"
        super().__init__(message)


class NoExcitationError(SignalInjectionError):
    """Raised when a regression window carries no excitation.

    The window least-squares fit needs a non-constant probing primitive;
    with S identically zero the normal equations are singular.
    """

    def __init__(self, message: str | None = None) -> None:
        if message is None:
            message = "probing primitive is constant over the window - normal equations are singular"
        super().__init__(message)
