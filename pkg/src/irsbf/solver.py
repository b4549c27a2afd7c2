"""Globally optimal discrete phase selection in linear time.

Key geometric fact: for a fixed reference direction mu on the unit
circle, the best shift for element n is the grid rotation that brings
its phase closest to mu, and that choice only changes when mu crosses
one of K switching angles alpha_n + (k - 0.5)*w.  The N*K switching
angles cut the circle into at most N*K arcs on which the whole optimal
configuration is constant, so sweeping the arcs in angular order while
patching the composite sum with just the terms that switch at each
boundary finds the global optimum in one pass.

The sweep itself is O(N); total cost is dominated by sorting the
switching angles, which a bucket ("bin") sort does in expected O(N) for
uniformly distributed channel phases, with an O(N log N) comparison sort
available for clustered phases.
"""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .core import (
    TWO_PI,
    ChannelSet,
    InstanceError,
    ParameterError,
    PhaseConfig,
    composite,
    rotation_table,
    snr_boost,
    wrap_angle,
    wrap_angles,
)

SORT_KINDS = ("bin", "comparison")


@dataclass(frozen=True)
class Breakpoint:
    """One switching angle: past `angle`, element's best shift is `new_shift`."""

    angle: float
    element: int
    new_shift: int


@dataclass(frozen=True, eq=False)
class BreakpointList:
    """All N*K switching angles sorted ascending, with exact-tie groups.

    `angles` holds the raw N*K entries in sorted order and `order` is
    the sorting permutation out of the generation layout (element-major,
    shift-minor), so entry i belongs to element `order[i] // K` and
    switches it to shift `order[i] % K + 1`; each element index appears
    exactly K times.  Entries whose angles are bitwise equal form one
    group; `group_starts[i]` is the index of the first entry of group i,
    so the distinct angles are `angles[group_starts]` and there are
    `distinct_count <= N*K` of them.
    """

    angles: np.ndarray
    order: np.ndarray
    group_starts: np.ndarray
    k_levels: int
    n_elements: int
    sort_kind: str

    def __len__(self) -> int:
        return self.angles.size

    @property
    def distinct_count(self) -> int:
        return self.group_starts.size

    @property
    def distinct_angles(self) -> np.ndarray:
        return self.angles[self.group_starts]

    @cached_property
    def elements(self) -> np.ndarray:
        e = self.order // self.k_levels
        e.setflags(write=False)
        return e

    @cached_property
    def new_shifts(self) -> np.ndarray:
        s = self.order % self.k_levels + 1
        s.setflags(write=False)
        return s

    def entry(self, i: int) -> Breakpoint:
        return Breakpoint(
            float(self.angles[i]), int(self.elements[i]), int(self.new_shifts[i])
        )

    def group_elements(self, group: int) -> np.ndarray:
        """Element indices switching at distinct angle `group`."""
        lo = self.group_starts[group]
        hi = (
            self.group_starts[group + 1]
            if group + 1 < self.distinct_count
            else self.angles.size
        )
        return self.elements[lo:hi]


@dataclass(frozen=True)
class SolveStats:
    distinct_breakpoints: int
    arcs_evaluated: int
    sort_kind: str | None


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Optimal configuration plus the recomputed composite channel.

    `boost` is always a fresh direct-summation evaluation of `config`,
    never the incrementally swept value.  `arc_index` is the 0-based
    winning arc (-1 for solvers that do not sweep arcs) and `trace`
    optionally holds the per-arc composite values seen during the sweep.
    """

    config: PhaseConfig
    boost: float
    composite: complex
    composite_phase: float
    arc_index: int
    stats: SolveStats
    trace: np.ndarray | None = None


def _stable_argsort(values: np.ndarray) -> np.ndarray:
    return np.argsort(values, kind="stable")


def _bin_sort_order(angles: np.ndarray) -> np.ndarray:
    """Sorting permutation via bucket distribution over [0, 2*pi).

    Distributes entries into as many uniform buckets as there are angles
    (a two-digit radix pass on the bucket ids, O(N)), then orders each
    bucket internally: single compare-exchanges for two-entry buckets, a
    three-exchange network for three-entry buckets, and one small stable
    sort over the rare longer buckets.  For uniform phases the expected
    bucket occupancy is 1, making the whole procedure expected O(N).
    Because bucket id is monotone in angle and every step preserves the
    original order of exact ties, the result is always identical to the
    stable comparison sort.
    """
    m = angles.size
    if m < 2:
        return np.zeros(m, dtype=np.int64)
    if m >= 1 << 32:
        return _stable_argsort(angles)
    buckets = np.minimum((angles * (m / TWO_PI)).astype(np.int64), m - 1)

    # LSD radix over two 16-bit digits; numpy's stable sort on uint16
    # keys is a counting/radix pass
    low = (buckets & 0xFFFF).astype(np.uint16)
    order = np.argsort(low, kind="stable")
    if m > 1 << 16:
        high = (buckets >> 16).astype(np.uint16)
        order = order[np.argsort(high[order], kind="stable")]

    a = angles[order]
    bounds = np.concatenate(
        ([0], np.flatnonzero(np.diff(buckets[order]) != 0) + 1, [m])
    )
    starts = bounds[:-1]
    lengths = np.diff(bounds)

    def exchange(left: np.ndarray, right: np.ndarray) -> None:
        swap = a[left] > a[right]
        li, ri = left[swap], right[swap]
        a[li], a[ri] = a[ri], a[li]
        order[li], order[ri] = order[ri], order[li]

    pairs = starts[lengths == 2]
    if pairs.size:
        exchange(pairs, pairs + 1)
    triples = starts[lengths == 3]
    if triples.size:
        for i, j in ((0, 1), (1, 2), (0, 1)):
            exchange(triples + i, triples + j)
    big = lengths >= 4
    if np.any(big):
        s, l = starts[big], lengths[big]
        offsets = np.concatenate(([0], np.cumsum(l)[:-1]))
        pos = np.arange(l.sum()) - np.repeat(offsets, l) + np.repeat(s, l)
        sub = np.argsort(a[pos], kind="stable")
        order[pos] = order[pos][sub]
    return order


def breakpoints(
    channels: ChannelSet, k_levels: int, sort_kind: str = "bin"
) -> BreakpointList:
    """Build and sort the N*K switching angles for an instance.

    Entry (n, k) sits at alpha_n + (k - 0.5)*w wrapped into [0, 2*pi);
    crossing it counterclockwise makes k the preferred shift of element
    n.  Groups are formed by bitwise-equal angles only, so genuinely
    coincident channels switch jointly while near-ties stay separate
    (processing near-ties as distinct degenerate arcs is still exact:
    every visited configuration is feasible and the true optimal arc is
    always among those visited).
    """
    k = int(k_levels)
    if k < 2:
        raise ParameterError("k_levels must be at least 2")
    if sort_kind not in SORT_KINDS:
        raise ParameterError(f"sort_kind must be one of {SORT_KINDS}")
    n = channels.size
    step = TWO_PI / k
    raw = channels.reflected_phases[:, None] + (np.arange(1, k + 1) - 0.5) * step
    angles = wrap_angles(raw.ravel())

    perm = _bin_sort_order(angles) if sort_kind == "bin" else _stable_argsort(angles)
    angles = angles[perm]
    group_starts = np.concatenate(
        ([0], np.flatnonzero(np.diff(angles) != 0.0) + 1)
    ).astype(np.int64)
    for arr in (angles, perm, group_starts):
        arr.setflags(write=False)
    return BreakpointList(
        angles=angles,
        order=perm,
        group_starts=group_starts,
        k_levels=k,
        n_elements=n,
        sort_kind=sort_kind,
    )


def initial_assignment(
    channels: ChannelSet, k_levels: int, reference_angle: float
) -> PhaseConfig:
    """Closest-rotation rule: per element, the shift minimizing the
    circular gap |(k*w + alpha_n - reference) mod 2*pi| taken into
    (-pi, pi], with exact ties broken toward the smaller shift index.
    """
    k = int(k_levels)
    if k < 2:
        raise ParameterError("k_levels must be at least 2")
    step = TWO_PI / k
    target = wrap_angles(reference_angle - channels.reflected_phases)
    lower = np.floor(target / step).astype(np.int64)
    np.clip(lower, 0, k - 1, out=lower)
    gap_lower = target - lower * step
    gap_upper = (lower + 1) * step - target
    mapped_lower = np.where(lower == 0, k, lower)  # shift K is the zero rotation
    mapped_upper = lower + 1
    shifts = np.where(
        gap_lower < gap_upper,
        mapped_lower,
        np.where(
            gap_upper < gap_lower,
            mapped_upper,
            np.minimum(mapped_lower, mapped_upper),
        ),
    )
    return PhaseConfig(k, shifts)


def _result_at(
    channels: ChannelSet,
    k_levels: int,
    reference_angle: float,
    arc_index: int,
    stats: SolveStats,
    trace: np.ndarray | None,
) -> SolveResult:
    config = initial_assignment(channels, k_levels, reference_angle)
    g = composite(channels, config)
    return SolveResult(
        config=config,
        boost=(g.real ** 2 + g.imag ** 2) / channels.direct_power,
        composite=g,
        composite_phase=wrap_angle(math.atan2(g.imag, g.real)),
        arc_index=arc_index,
        stats=stats,
        trace=trace,
    )


def sweep(
    channels: ChannelSet,
    bps: BreakpointList,
    k_levels: int,
    keep_trace: bool = False,
) -> SolveResult:
    """Visit every arc between consecutive distinct switching angles.

    Starts from the midpoint of the first arc with a fresh closest-
    rotation assignment and a direct composite summation; each boundary
    crossing then advances the switching elements' shifts by one grid
    step and patches the composite with only those elements' old/new
    contribution difference.  The winning arc's configuration is finally
    rebuilt from its midpoint and its composite re-summed directly, so
    the returned boost carries no accumulated sweep rounding.
    """
    k = int(k_levels)
    if bps.k_levels != k:
        raise InstanceError("breakpoint list was built for a different k_levels")
    if bps.n_elements != channels.size:
        raise InstanceError("breakpoint list was built for a different instance")

    starts = bps.group_starts
    n_arcs = starts.size
    lam = bps.angles[starts]
    first_mid = 0.5 * (lam[0] + (lam[1] if n_arcs > 1 else lam[0] + TWO_PI))
    first_config = initial_assignment(channels, k, first_mid)
    g_first = composite(channels, first_config)

    rot = rotation_table(k)
    # per-entry composite change h_n*(rot[k]-rot[k-1]), built in the
    # pre-sort (element, shift) layout and gathered once
    delta_raw = (channels.reflected[:, None] * (rot[1:] - rot[:-1])).ravel()
    delta = delta_raw[bps.order]
    group_delta = np.add.reduceat(delta, starts)
    # arc 0 carries g_first; crossing distinct angle i enters arc i
    g_arcs = np.empty(n_arcs, dtype=np.complex128)
    g_arcs[0] = g_first
    g_arcs[1:] = group_delta[1:]
    np.cumsum(g_arcs, out=g_arcs)

    power = g_arcs.real ** 2 + g_arcs.imag ** 2
    best = int(np.argmax(power))  # first max wins on exact ties
    lo = lam[best]
    hi = lam[best + 1] if best + 1 < n_arcs else lam[0] + TWO_PI
    stats = SolveStats(
        distinct_breakpoints=n_arcs, arcs_evaluated=n_arcs, sort_kind=bps.sort_kind
    )
    return _result_at(
        channels,
        k,
        wrap_angle(0.5 * (lo + hi)),
        best,
        stats,
        g_arcs if keep_trace else None,
    )


def solve(
    channels: ChannelSet, k_levels: int, sort_kind: str = "bin"
) -> SolveResult:
    """Globally optimal discrete shifts via breakpoint sort + arc sweep."""
    return sweep(channels, breakpoints(channels, k_levels, sort_kind), k_levels)


def solve_reduced(channels: ChannelSet, k_levels: int) -> SolveResult:
    """Same optimum from at most 2N+1 candidate arcs.

    The optimal composite direction always lies within one grid step
    w = 2*pi/K of the direct channel's phase, so only the window
    [alpha_0 - w, alpha_0 + w) matters.  Each element has exactly two
    switching angles in a half-open window of width 2*w; sweeping just
    those, with the same incremental patching as the full sweep, covers
    every configuration the optimum can take.
    """
    k = int(k_levels)
    if k < 2:
        raise ParameterError("k_levels must be at least 2")
    n = channels.size
    step = TWO_PI / k
    window_start = channels.direct_phase - step

    # element n's switching angles sit at (t - c_n)*step from the window
    # start for integer t; the first one at offset >= 0 has t = ceil(c_n)
    c = (window_start - channels.reflected_phases) / step + 0.5
    t_first = np.ceil(c)
    first_offset = (t_first - c) * step
    first_shift = (t_first.astype(np.int64) - 1) % k + 1

    offsets = np.concatenate((first_offset, first_offset + step))
    shifts_at = np.concatenate((first_shift, first_shift % k + 1))
    elements = np.concatenate((np.arange(n, dtype=np.int64),) * 2)

    # offset-0 entries were crossed before the window opens and are
    # already reflected in the first arc's assignment; anything rounding
    # to the far edge belongs to the next window period
    keep = (offsets > 0.0) & (offsets < 2.0 * step)
    offsets, shifts_at, elements = offsets[keep], shifts_at[keep], elements[keep]

    order = _stable_argsort(offsets)
    offsets, shifts_at, elements = offsets[order], shifts_at[order], elements[order]
    starts = np.concatenate(([0], np.flatnonzero(np.diff(offsets) != 0.0) + 1)).astype(
        np.int64
    )
    boundaries = offsets[starts]
    n_arcs = starts.size + 1

    first_mid = wrap_angle(
        window_start + 0.5 * (boundaries[0] if starts.size else 2.0 * step)
    )
    first_config = initial_assignment(channels, k, first_mid)
    g_first = composite(channels, first_config)

    rot = rotation_table(k)
    delta = channels.reflected[elements] * (rot[shifts_at] - rot[shifts_at - 1])
    g_arcs = np.empty(n_arcs, dtype=np.complex128)
    g_arcs[0] = g_first
    if starts.size:
        g_arcs[1:] = np.add.reduceat(delta, starts)
    np.cumsum(g_arcs, out=g_arcs)

    power = g_arcs.real ** 2 + g_arcs.imag ** 2
    best = int(np.argmax(power))
    lo = boundaries[best - 1] if best > 0 else 0.0
    hi = boundaries[best] if best < starts.size else 2.0 * step
    stats = SolveStats(
        distinct_breakpoints=starts.size,
        arcs_evaluated=n_arcs,
        sort_kind="comparison",
    )
    return _result_at(
        channels, k, wrap_angle(window_start + 0.5 * (lo + hi)), best, stats, None
    )
