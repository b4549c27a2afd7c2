"""Reference methods: closest-point rounding, per-element descent, and
the exhaustive oracle used to certify the sweep solver's optimality.
"""

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    ChannelSet,
    ParameterError,
    PhaseConfig,
    composite,
    rotation_table,
    snr_boost,
    wrap_angle,
)
from .solver import SolveResult, SolveStats, initial_assignment

DEFAULT_BRUTE_CAP = 10_000_000

_BRUTE_CHUNK = 1 << 18


@dataclass(frozen=True, eq=False)
class BcdReport:
    """Coordinate-descent outcome; `converged` means a full pass changed nothing."""

    config: PhaseConfig
    boost: float
    passes: int
    converged: bool


def cpp(channels: ChannelSet, k_levels: int) -> PhaseConfig:
    """Closest point projection: round the continuous per-element optimum
    alpha_0 - alpha_n to the nearest grid shift (ties toward smaller k).

    Aligns every reflected channel with the direct channel rather than
    with the true optimal composite direction, which can be badly
    suboptimal when the direct channel is weak.
    """
    return initial_assignment(channels, k_levels, channels.direct_phase)


def bcd(
    channels: ChannelSet,
    k_levels: int,
    init: PhaseConfig,
    max_passes: int = 100,
) -> BcdReport:
    """Block coordinate descent: exact single-element maximization in
    fixed index order until a full pass leaves the configuration fixed.

    Each update picks the shift maximizing the composite magnitude with
    all other elements frozen (ties toward the smaller shift), so the
    objective is nondecreasing at every single-coordinate step; this is
    checked as the loop runs.
    """
    k = int(k_levels)
    if max_passes < 1:
        raise ParameterError("max_passes must be at least 1")
    if init.k_levels != k:
        raise ParameterError("init was built for a different k_levels")
    if init.size != channels.size:
        raise ParameterError("init length does not match the instance")

    n = channels.size
    table = rotation_table(k)
    rot = table.tolist()
    h = channels.reflected.tolist()
    shifts = init.shifts.tolist()

    passes = 0
    converged = False
    while passes < max_passes:
        passes += 1
        # fresh summation each pass so running-sum drift never accumulates
        current_shifts = np.asarray(shifts, dtype=np.int64)
        g = complex(channels.direct + np.sum(channels.reflected * table[current_shifts]))
        changed = False
        for i in range(n):
            hi = h[i]
            g_rest = g - hi * rot[shifts[i]]
            best_k = shifts[i]
            c = g_rest + hi * rot[best_k]
            best_power = c.real * c.real + c.imag * c.imag
            current_power = best_power
            for cand in range(1, k + 1):
                if cand == shifts[i]:
                    continue
                c = g_rest + hi * rot[cand]
                p = c.real * c.real + c.imag * c.imag
                if p > best_power or (p == best_power and cand < best_k):
                    best_power = p
                    best_k = cand
            if best_power < current_power:
                raise AssertionError("coordinate update decreased the objective")
            if best_k != shifts[i]:
                changed = True
                shifts[i] = best_k
            g = g_rest + hi * rot[shifts[i]]
        if not changed:
            converged = True
            break

    config = PhaseConfig(k, np.asarray(shifts, dtype=np.int64))
    return BcdReport(
        config=config,
        boost=snr_boost(channels, config),
        passes=passes,
        converged=converged,
    )


def _decode(index: int, n: int, k: int) -> tuple:
    """Odometer decoding with the first element's shift cycling fastest."""
    out = []
    for _ in range(n):
        out.append(index % k + 1)
        index //= k
    return tuple(out)


def brute_force(
    channels: ChannelSet, k_levels: int, cap: int = DEFAULT_BRUTE_CAP
) -> SolveResult:
    """Exhaustive maximization over all K^N configurations.

    Enumerates in odometer order (first element fastest); exact boost
    ties are broken by the lexicographically smallest shift tuple so the
    output is stable across runs and chunkings.  Refuses instances with
    K^N above `cap` to prevent accidental astronomically long runs.
    """
    k = int(k_levels)
    if k < 2:
        raise ParameterError("k_levels must be at least 2")
    n = channels.size
    total = k ** n
    if total > cap:
        raise ParameterError(
            f"brute force needs {total} evaluations, above the cap of {cap}"
        )

    rot = rotation_table(k)
    h = channels.reflected
    best_power = -1.0
    best_config: tuple = ()
    for start in range(0, total, _BRUTE_CHUNK):
        idx = np.arange(start, min(start + _BRUTE_CHUNK, total), dtype=np.int64)
        g = np.full(idx.size, channels.direct, dtype=np.complex128)
        for i in range(n):
            g += h[i] * rot[(idx // k ** i) % k + 1]
        power = g.real ** 2 + g.imag ** 2
        chunk_best = float(power.max())
        if chunk_best < best_power:
            continue
        ties = idx[power == chunk_best]
        candidate = min(_decode(int(t), n, k) for t in ties)
        if chunk_best > best_power or candidate < best_config:
            best_power = chunk_best
            best_config = candidate

    config = PhaseConfig(k, np.asarray(best_config, dtype=np.int64))
    g = composite(channels, config)
    return SolveResult(
        config=config,
        boost=(g.real ** 2 + g.imag ** 2) / channels.direct_power,
        composite=g,
        composite_phase=wrap_angle(math.atan2(g.imag, g.real)),
        arc_index=-1,
        stats=SolveStats(
            distinct_breakpoints=0, arcs_evaluated=total, sort_kind=None
        ),
    )
