"""Random link generation: fixed node geometry, log-distance pathloss,
and per-trial Rayleigh fading.

The direct channel is 10**(-PL0/20) * z0 with PL0 = 32.6 + 36.7*log10(d)
over the transmitter-receiver distance; each cascaded channel is
10**(-(PL1+PL2)/20) * z1 * z2 with PL = 30 + 22*log10(d) applied to the
transmitter-surface and surface-receiver hops.  All fading factors are
unit-power circularly symmetric complex Gaussians (each component has
variance 1/2) and are redrawn independently for every trial.
"""

import math
from dataclasses import dataclass

import numpy as np

from .core import ChannelSet, ParameterError

DIRECT_PATHLOSS_OFFSET_DB = 32.6
DIRECT_PATHLOSS_SLOPE_DB = 36.7
REFLECT_PATHLOSS_OFFSET_DB = 30.0
REFLECT_PATHLOSS_SLOPE_DB = 22.0

_U64 = 1 << 64


@dataclass(frozen=True, eq=False)
class Geometry:
    """Transmitter, reflecting surface, and receiver positions in meters."""

    tx: np.ndarray
    irs: np.ndarray
    rx: np.ndarray

    def __post_init__(self):
        for name in ("tx", "irs", "rx"):
            v = np.asarray(getattr(self, name), dtype=np.float64).ravel()
            if v.size != 3 or not np.all(np.isfinite(v)):
                raise ParameterError(f"{name} must be a finite 3-vector")
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        if min(self.direct_distance, self.tx_irs_distance, self.irs_rx_distance) <= 0.0:
            raise ParameterError("node positions must be pairwise distinct")

    @property
    def direct_distance(self) -> float:
        return float(np.linalg.norm(self.tx - self.rx))

    @property
    def tx_irs_distance(self) -> float:
        return float(np.linalg.norm(self.tx - self.irs))

    @property
    def irs_rx_distance(self) -> float:
        return float(np.linalg.norm(self.irs - self.rx))


@dataclass(frozen=True)
class LinkBudget:
    tx_power_dbm: float = 30.0
    noise_power_dbm: float = -90.0

    def __post_init__(self):
        if not (math.isfinite(self.tx_power_dbm) and math.isfinite(self.noise_power_dbm)):
            raise ParameterError("link budget powers must be finite")


@dataclass(frozen=True)
class RngStream:
    """Counter-based deterministic stream, keyed by (seed, stream_id).

    Backed by numpy's Philox generator with the two ids as its 128-bit
    key, so equal ids reproduce bit-identical draws and distinct ids give
    statistically independent streams regardless of scheduling order.
    Normal variates are produced by the polar Box-Muller construction,
    not by the generator's own normal method.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed % _U64, self.stream_id % _U64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


def default_geometry() -> Geometry:
    """Benchmark layout: far transmitter, surface close to the receiver."""
    return Geometry(tx=(50.0, -200.0, 20.0), irs=(-2.0, -1.0, 0.0), rx=(0.0, 0.0, 0.0))


def pathloss_direct_db(d0: float) -> float:
    """Transmitter-to-receiver pathloss in dB: 32.6 + 36.7*log10(d0)."""
    if not d0 > 0.0:
        raise ParameterError("distance must be positive")
    return DIRECT_PATHLOSS_OFFSET_DB + DIRECT_PATHLOSS_SLOPE_DB * math.log10(d0)


def pathloss_reflect_db(d: float) -> float:
    """Single-hop pathloss via the surface in dB: 30 + 22*log10(d)."""
    if not d > 0.0:
        raise ParameterError("distance must be positive")
    return REFLECT_PATHLOSS_OFFSET_DB + REFLECT_PATHLOSS_SLOPE_DB * math.log10(d)


def dbm_to_watts(p: float) -> float:
    return 10.0 ** ((p - 30.0) / 10.0)


def _complex_normal(gen: np.random.Generator, size: int) -> np.ndarray:
    """Unit-power circularly symmetric complex Gaussians via Box-Muller.

    Draw order contract: one block of radial uniforms, then one block of
    angular uniforms, both of length `size`.  The radial uniform is
    floored at 2**-53 so a zero draw cannot produce a dead channel.
    """
    u = gen.random((2, size))
    radial = np.maximum(u[0], 2.0 ** -53)
    magnitude = np.sqrt(-np.log1p(-radial))
    return magnitude * np.exp((2j * math.pi) * u[1])


def sample_channels(rng: RngStream, geom: Geometry, n_elements: int) -> ChannelSet:
    """Draw one fading realization of the direct and cascaded channels.

    Fading draw order: direct factor first, then all first-hop factors,
    then all second-hop factors.  Distances (hence pathloss amplitudes)
    depend only on the geometry, so across trials only fading varies.
    """
    n = int(n_elements)
    if n < 1:
        raise ParameterError("n_elements must be at least 1")
    direct_amp = 10.0 ** (-pathloss_direct_db(geom.direct_distance) / 20.0)
    cascade_db = pathloss_reflect_db(geom.tx_irs_distance) + pathloss_reflect_db(
        geom.irs_rx_distance
    )
    cascade_amp = 10.0 ** (-cascade_db / 20.0)

    gen = rng.generator()
    z = _complex_normal(gen, 2 * n + 1)
    return ChannelSet(
        direct=direct_amp * complex(z[0]),
        reflected=cascade_amp * z[1 : n + 1] * z[n + 1 :],
    )
