"""Domain types for IRS-assisted links and exact objective evaluation.

An instance is one direct complex channel plus N cascaded reflected
channels.  A configuration assigns every reflective element one of K
discrete phase shifts {w, 2w, ..., Kw} with w = 2*pi/K, and is stored as
the integer multiples k_n rather than as accumulated float angles: the
sweep solver advances shifts thousands of times, and integer state keeps
every realized angle exactly on the K-point grid.
"""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * math.pi


class ParameterError(ValueError):
    """A scalar parameter or channel/config value is out of its domain."""


class InstanceError(ValueError):
    """Objects from different instances were combined (e.g. wrong length)."""


def wrap_angle(x: float) -> float:
    """Wrap a scalar angle into [0, 2*pi)."""
    y = math.fmod(x, TWO_PI)
    if y < 0.0:
        y += TWO_PI
    # the correction above can round up to exactly 2*pi
    return 0.0 if y >= TWO_PI else y


def wrap_angles(x: np.ndarray) -> np.ndarray:
    """Wrap a 1-D array of angles into [0, 2*pi)."""
    y = np.fmod(np.asarray(x, dtype=np.float64), TWO_PI)
    y[y < 0.0] += TWO_PI
    y[y >= TWO_PI] = 0.0
    return y


def signed_gap(x: float) -> float:
    """Circular difference mapped into (-pi, pi]."""
    y = wrap_angle(x)
    return y - TWO_PI if y > math.pi else y


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """Direct channel plus N >= 1 cascaded reflected channels.

    Every magnitude must be strictly positive: a zero reflected channel
    has no defined phase (drop dead elements before building the set),
    and a zero direct channel leaves the boost normalization undefined.
    """

    direct: complex
    reflected: np.ndarray

    def __post_init__(self):
        d = complex(self.direct)
        r = np.array(self.reflected, dtype=np.complex128, copy=True).ravel()
        if r.size < 1:
            raise ParameterError("at least one reflected channel is required")
        if not (np.isfinite(d.real) and np.isfinite(d.imag)) or not np.all(np.isfinite(r.view(np.float64))):
            raise ParameterError("channels must be finite")
        if d == 0:
            raise ParameterError("direct channel must have positive magnitude")
        if np.any(r == 0):
            raise ParameterError("reflected channels must have positive magnitude")
        r.setflags(write=False)
        object.__setattr__(self, "direct", d)
        object.__setattr__(self, "reflected", r)

    @property
    def size(self) -> int:
        return self.reflected.size

    @cached_property
    def direct_magnitude(self) -> float:
        return abs(self.direct)

    @cached_property
    def direct_power(self) -> float:
        return self.direct.real ** 2 + self.direct.imag ** 2

    @cached_property
    def direct_phase(self) -> float:
        return wrap_angle(math.atan2(self.direct.imag, self.direct.real))

    @cached_property
    def reflected_magnitudes(self) -> np.ndarray:
        m = np.abs(self.reflected)
        m.setflags(write=False)
        return m

    @cached_property
    def reflected_phases(self) -> np.ndarray:
        p = wrap_angles(np.angle(self.reflected))
        p.setflags(write=False)
        return p

    def scaled(self, factor: complex) -> "ChannelSet":
        """New set with every channel multiplied by a common factor."""
        return ChannelSet(self.direct * factor, self.reflected * factor)


@dataclass(frozen=True, eq=False)
class PhaseConfig:
    """Per-element discrete shifts k_n in {1..K}; realized angle is k_n*2*pi/K."""

    k_levels: int
    shifts: np.ndarray

    def __post_init__(self):
        k = int(self.k_levels)
        if k < 2:
            raise ParameterError("k_levels must be at least 2")
        s = np.asarray(self.shifts)
        if not np.issubdtype(s.dtype, np.integer):
            raise ParameterError("shifts must be integers")
        s = s.astype(np.int64, copy=True).ravel()
        if s.size < 1:
            raise ParameterError("shifts must be non-empty")
        if s.min() < 1 or s.max() > k:
            raise ParameterError(f"shifts must lie in 1..{k}")
        s.setflags(write=False)
        object.__setattr__(self, "k_levels", k)
        object.__setattr__(self, "shifts", s)

    @property
    def size(self) -> int:
        return self.shifts.size

    @cached_property
    def step(self) -> float:
        """Grid spacing w = 2*pi/K."""
        return TWO_PI / self.k_levels


def rotation_table(k_levels: int) -> np.ndarray:
    """exp(1j * k * 2*pi/K) for k = 0..K, each from the exact grid angle.

    Index 0 is exactly 1+0j; index K is a full turn and equals 1 only up
    to float rounding of 2*pi.
    """
    return np.exp(1j * (TWO_PI / k_levels) * np.arange(k_levels + 1))


def composite(channels: ChannelSet, config: PhaseConfig) -> complex:
    """Composite channel: direct + sum_n reflected_n * exp(1j*k_n*2*pi/K)."""
    if config.size != channels.size:
        raise InstanceError(
            f"config has {config.size} shifts but instance has {channels.size} elements"
        )
    rot = rotation_table(config.k_levels)
    return complex(channels.direct + np.sum(channels.reflected * rot[config.shifts]))


def snr_boost(channels: ChannelSet, config: PhaseConfig) -> float:
    """|composite|^2 normalized by the direct channel power."""
    g = composite(channels, config)
    return (g.real ** 2 + g.imag ** 2) / channels.direct_power
