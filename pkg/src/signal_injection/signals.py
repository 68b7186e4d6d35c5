"""Probing signals for high-frequency injection.

A probing waveform s is 1-periodic with zero mean. It is injected as
u = u_C + s(t/epsilon) * b, and the filters downstream work with its
zero-mean primitive S(t) = S0(t/epsilon), where

    S0(tau) = int_0^tau s - int_0^1 int_0^sigma s.

The subtracted double integral gives S0 zero mean over a period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import NamedTuple

import numpy as np
import numpy.typing as npt
from scipy.integrate import cumulative_trapezoid

from .constants import MIN_TABULATED_SAMPLES
from .exceptions import ConfigurationError

FloatArray = npt.NDArray[np.float64]

SHAPES: frozenset[str] = frozenset({"sinusoid", "square", "tabulated"})

_TWO_PI = 2.0 * math.pi


class _Table(NamedTuple):
    """Cached node values of a tabulated waveform and its primitive."""

    values: FloatArray
    primitive: FloatArray
    primitive_mean: float


@dataclass(frozen=True)
class ProbingSpec:
    """Periodic probing signal, its period scale and input scaling.

    Attributes:
        shape: Waveform name, one of "sinusoid", "square" or "tabulated".
        epsilon: Period of the injected signal, in (0, 1).
        scaling: Injection vector b, one entry per input channel. Any
            probe amplitude is folded in here.
        samples: One period of samples for the "tabulated" shape, taken at
            tau = k/N. The sample mean is removed at construction.
        centered: Whether S0 includes the double-integral correction.
            Turning it off is only meant for ablation runs.

    Example:
        >>> spec = ProbingSpec(epsilon=1 / 300)
        >>> s_eval(spec, 0.25)
        1.0
    """

    shape: str = "sinusoid"
    epsilon: float = 1.0 / 300.0
    scaling: tuple[float, ...] = (1.0,)
    samples: tuple[float, ...] = field(default=(), repr=False)
    centered: bool = True

    def __post_init__(self) -> None:
        """Validate the waveform and remove the sample mean."""
        if self.shape not in SHAPES:
            raise ConfigurationError(
                f"unknown probe shape {self.shape!r}", key="probe.shape"
            )
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigurationError("epsilon must be in (0, 1)", key="probe.epsilon")
        if not self.scaling or not all(math.isfinite(b) for b in self.scaling):
            raise ConfigurationError("scaling must be a finite, non-empty vector", key="probe.scaling")
        if self.shape == "tabulated":
            if len(self.samples) < MIN_TABULATED_SAMPLES:
                raise ConfigurationError(
                    f"tabulated shape needs at least {MIN_TABULATED_SAMPLES} samples per period, "
                    f"got {len(self.samples)}",
                    key="probe.samples_file",
                )
            raw = np.asarray(self.samples, dtype=np.float64)
            object.__setattr__(self, "samples", tuple(float(v) for v in raw - raw.mean()))

    @property
    def b(self) -> FloatArray:
        """Injection vector as an array."""
        return np.asarray(self.scaling, dtype=np.float64)

    @cached_property
    def _table(self) -> _Table:
        values = np.asarray(self.samples, dtype=np.float64)
        n = values.size
        h = 1.0 / n
        closed = np.append(values, values[0])
        nodes = cumulative_trapezoid(closed, dx=h, initial=0.0)
        # exact mean of the piecewise-quadratic primitive of the linear interpolant
        mean = float(np.sum(h * (nodes[:-1] + h * (closed[:-1] / 3.0 + closed[1:] / 6.0))))
        return _Table(values=closed, primitive=nodes, primitive_mean=mean)

    def wave(self, tau: npt.ArrayLike) -> FloatArray:
        """Evaluate s at dimensionless phases ``tau`` (vectorized)."""
        phase = np.mod(np.asarray(tau, dtype=np.float64), 1.0)
        if self.shape == "sinusoid":
            return np.sin(_TWO_PI * phase)
        if self.shape == "square":
            return np.where(phase < 0.5, 1.0, -1.0)
        table = self._table
        n = table.values.size - 1
        pos = phase * n
        k = np.minimum(pos.astype(np.int64), n - 1)
        u = pos - k
        return table.values[k] + (table.values[k + 1] - table.values[k]) * u

    def primitive(self, tau: npt.ArrayLike) -> FloatArray:
        """Evaluate S0 at dimensionless phases ``tau`` (vectorized)."""
        phase = np.mod(np.asarray(tau, dtype=np.float64), 1.0)
        if self.shape == "sinusoid":
            centered = -np.cos(_TWO_PI * phase) / _TWO_PI
            return centered if self.centered else centered + 1.0 / _TWO_PI
        if self.shape == "square":
            raw = np.where(phase < 0.5, phase, 1.0 - phase)
            return raw - 0.25 if self.centered else raw
        table = self._table
        n = table.values.size - 1
        h = 1.0 / n
        pos = phase * n
        k = np.minimum(pos.astype(np.int64), n - 1)
        u = pos - k
        s0 = table.values[k]
        s1 = table.values[k + 1]
        raw = table.primitive[k] + h * (s0 * u + 0.5 * (s1 - s0) * u * u)
        return raw - table.primitive_mean if self.centered else raw

    def S_values(self, t: npt.ArrayLike) -> FloatArray:
        """Evaluate S(t) = S0(t/epsilon) on an array of times."""
        return self.primitive(np.asarray(t, dtype=np.float64) / self.epsilon)


def load_tabulated(
    path: str | Path,
    epsilon: float,
    scaling: tuple[float, ...] = (1.0,),
) -> ProbingSpec:
    """Build a tabulated probing spec from a one-column sample file.

    Args:
        path: Text file with one sample per line covering one period.
        epsilon: Period scale of the injected signal.
        scaling: Injection vector b.

    Returns:
        A mean-corrected tabulated ProbingSpec.

    Raises:
        ConfigurationError: If the file cannot be read or holds too few samples.
    """
    try:
        samples = np.loadtxt(path, dtype=np.float64, ndmin=1)
    except (OSError, ValueError) as exc:
        raise ConfigurationError(
            f"cannot read probe samples from {path}: {exc}", key="probe.samples_file"
        ) from exc
    if samples.ndim != 1:
        raise ConfigurationError(
            f"probe samples file {path} must have a single column", key="probe.samples_file"
        )
    return ProbingSpec(
        shape="tabulated",
        epsilon=epsilon,
        scaling=scaling,
        samples=tuple(float(v) for v in samples),
    )


def s_eval(spec: ProbingSpec, tau: float) -> float:
    """Return s(tau mod 1) for the probe waveform."""
    return float(spec.wave(tau))


def S_eval(spec: ProbingSpec, t: float) -> float:
    """Return the zero-mean primitive S(t) = S0(t/epsilon)."""
    return float(spec.primitive(t / spec.epsilon))


def injected_input(spec: ProbingSpec, u_c: npt.ArrayLike, t: float) -> FloatArray:
    """Add the probing signal to a nominal control.

    Args:
        spec: Probing signal.
        u_c: Nominal control u_C, same length as ``spec.scaling``.
        t: Time.

    Returns:
        u_C + s(t/epsilon) * b.
    """
    nominal = np.asarray(u_c, dtype=np.float64)
    return nominal + s_eval(spec, t / spec.epsilon) * spec.b
