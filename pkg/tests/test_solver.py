"""Breakpoint construction, closest-rotation assignment, and the sweep."""

import cmath
import math

import numpy as np
import pytest

from irsbf import (
    ChannelSet,
    InstanceError,
    ParameterError,
    PhaseConfig,
    breakpoints,
    composite,
    initial_assignment,
    signed_gap,
    snr_boost,
    solve,
    solve_reduced,
    sweep,
)
from irsbf.baselines import brute_force
from irsbf.solver import _bin_sort_order, _stable_argsort

from conftest import random_instance, unit_instance

TWO_PI = 2.0 * math.pi


def fig1_instance() -> ChannelSet:
    """Weak direct channel with two strong reflections straddling +90deg;
    aligning to the direct channel is badly suboptimal here."""
    return ChannelSet(
        0.1 + 0j,
        np.array(
            [cmath.exp(1j * (math.pi / 2 - 0.1)), cmath.exp(1j * (math.pi / 2 + 0.1))]
        ),
    )


# ----------------------------------------------------------------------
# breakpoints


def test_single_element_breakpoints_quarter_grid():
    ch = ChannelSet(1.0 + 0j, np.array([1.0 + 0j]))  # alpha_1 = 0
    bps = breakpoints(ch, 4)
    assert np.allclose(
        bps.angles, [math.pi / 4, 3 * math.pi / 4, 5 * math.pi / 4, 7 * math.pi / 4]
    )
    assert bps.distinct_count == 4
    assert all(bps.group_elements(i).tolist() == [0] for i in range(4))


def test_identical_channels_collide_into_joint_groups():
    ch = ChannelSet(1.0 + 0j, np.array([2.0 + 0j, 2.0 + 0j]))
    bps = breakpoints(ch, 2)
    assert bps.distinct_count == 2
    assert np.allclose(bps.distinct_angles, [math.pi / 2, 3 * math.pi / 2])
    for group in range(2):
        assert sorted(bps.group_elements(group).tolist()) == [0, 1]


def test_breakpoint_structure_invariants():
    rng = np.random.default_rng(21)
    for _ in range(30):
        n = int(rng.integers(1, 12))
        k = int(rng.choice([2, 3, 5, 8]))
        bps = breakpoints(random_instance(rng, n), k)
        assert len(bps) == n * k
        assert np.all(np.diff(bps.angles) >= 0.0)
        assert bps.distinct_count <= n * k
        assert np.array_equal(np.bincount(bps.elements, minlength=n), np.full(n, k))
        entry = bps.entry(0)
        assert 1 <= entry.new_shift <= k and 0 <= entry.element < n


def test_bin_and_comparison_sorts_agree():
    rng = np.random.default_rng(22)
    for _ in range(40):
        n = int(rng.integers(1, 20))
        k = int(rng.choice([2, 3, 4, 8]))
        ch = random_instance(rng, n)
        a = breakpoints(ch, k, "bin")
        b = breakpoints(ch, k, "comparison")
        assert np.array_equal(a.angles, b.angles)
        assert np.array_equal(a.order, b.order)
        assert np.array_equal(a.group_starts, b.group_starts)


def test_bin_sort_handles_clusters_and_duplicates():
    rng = np.random.default_rng(23)
    arrays = [
        rng.uniform(0.0, 1e-9, 500),  # everything in one bucket
        np.repeat(rng.uniform(0.0, TWO_PI, 25), 20),  # heavy exact ties
        rng.uniform(0.0, TWO_PI, 997).round(1),  # coarse grid
        np.zeros(64),
        np.array([0.5]),
    ]
    for arr in arrays:
        assert np.array_equal(_bin_sort_order(arr), _stable_argsort(arr))


def test_breakpoints_rejects_bad_parameters():
    ch = ChannelSet(1.0 + 0j, np.array([1j]))
    with pytest.raises(ParameterError):
        breakpoints(ch, 1)
    with pytest.raises(ParameterError):
        breakpoints(ch, 4, "quick")


# ----------------------------------------------------------------------
# initial_assignment


def test_assignment_aligned_reference_gives_zero_rotation():
    rng = np.random.default_rng(31)
    for k in (2, 3, 8):
        phases = rng.uniform(0.0, TWO_PI, 5)
        ch = ChannelSet(1.0 + 0j, np.exp(1j * phases))
        for mu in phases:
            cfg = initial_assignment(ch, k, mu)
            idx = np.flatnonzero(phases == mu)
            assert np.all(cfg.shifts[idx] == k)


def test_assignment_prefers_smaller_gap():
    # target rotation 3*pi/2 + 0.1: the full turn (gap pi/2 - 0.1) beats
    # the half turn (gap pi/2 + 0.1)
    ch = ChannelSet(1.0 + 0j, np.array([cmath.exp(1j * (math.pi / 2 - 0.1))]))
    cfg = initial_assignment(ch, 2, 0.0)
    assert cfg.shifts.tolist() == [2]


def test_assignment_exact_tie_prefers_smaller_shift():
    # alpha = 0, mu = pi/2, K = 2: both rotations sit exactly pi/2 away
    ch = ChannelSet(1.0 + 0j, np.array([1.0 + 0j]))
    cfg = initial_assignment(ch, 2, math.pi / 2)
    assert cfg.shifts.tolist() == [1]


def test_assignment_gap_never_exceeds_half_step():
    rng = np.random.default_rng(32)
    for _ in range(50):
        n = int(rng.integers(1, 30))
        k = int(rng.choice([2, 3, 4, 8, 16]))
        ch = random_instance(rng, n)
        mu = float(rng.uniform(0.0, TWO_PI))
        cfg = initial_assignment(ch, k, mu)
        step = TWO_PI / k
        gaps = [
            abs(signed_gap(int(s) * step + a - mu))
            for s, a in zip(cfg.shifts, ch.reflected_phases)
        ]
        assert max(gaps) <= step / 2 + 1e-12


# ----------------------------------------------------------------------
# sweep / solve


def test_sweep_aligned_instance():
    ch = ChannelSet(1.0 + 0j, np.array([1.0 + 0j, 1.0 + 0j, 1.0 + 0j]))
    for k in (2, 3, 4, 8):
        res = solve(ch, k)
        assert res.boost == pytest.approx(16.0, rel=1e-12)
        assert np.all(res.config.shifts == k)


def test_sweep_fig1_instance():
    ch = fig1_instance()
    res = solve(ch, 2)
    ref = brute_force(ch, 2)
    assert res.boost == pytest.approx(ref.boost, rel=1e-12)
    assert res.boost == pytest.approx(1.0 + 400.0 * math.cos(0.1) ** 2, rel=1e-12)
    assert res.config.shifts.tolist() == [2, 2]


def test_sweep_matches_brute_force_exactly():
    rng = np.random.default_rng(41)
    for _ in range(25):
        ch = unit_instance(rng, 8)
        res = solve(ch, 3)
        ref = brute_force(ch, 3)
        assert res.boost == pytest.approx(ref.boost, rel=1e-9)


def test_sweep_rejects_mismatched_breakpoints():
    rng = np.random.default_rng(42)
    ch = random_instance(rng, 4)
    other = random_instance(rng, 5)
    bps = breakpoints(ch, 2)
    with pytest.raises(InstanceError):
        sweep(other, bps, 2)
    with pytest.raises(InstanceError):
        sweep(ch, bps, 4)


def test_solve_single_element_is_k_way_maximum():
    rng = np.random.default_rng(43)
    for k in (2, 3, 4, 8):
        ch = random_instance(rng, 1)
        res = solve(ch, k)
        candidates = [
            snr_boost(ch, PhaseConfig(k, np.array([s]))) for s in range(1, k + 1)
        ]
        assert res.boost == pytest.approx(max(candidates), rel=1e-12)


def test_solve_config_invariant_under_scaling():
    rng = np.random.default_rng(44)
    for _ in range(20):
        ch = random_instance(rng, 7)
        res = solve(ch, 4)
        scaled = solve(ch.scaled(3.7), 4)
        assert np.array_equal(res.config.shifts, scaled.config.shifts)
        assert scaled.boost == pytest.approx(res.boost, rel=1e-12)


def test_solve_oracle_battery():
    rng = np.random.default_rng(45)
    for trial in range(200):
        n = int(rng.integers(1, 9))
        k = int(rng.choice([2, 3, 4]))
        ch = unit_instance(rng, n) if trial % 2 else random_instance(rng, n)
        res = solve(ch, k, "bin" if trial % 3 else "comparison")
        ref = brute_force(ch, k)
        assert res.boost == pytest.approx(ref.boost, rel=1e-9), (n, k)


def test_solve_result_is_self_consistent():
    rng = np.random.default_rng(46)
    for _ in range(20):
        ch = random_instance(rng, 9)
        res = solve(ch, 8)
        assert res.boost == pytest.approx(snr_boost(ch, res.config), rel=1e-12)
        assert res.composite == composite(ch, res.config)
        assert res.composite_phase == pytest.approx(
            math.atan2(res.composite.imag, res.composite.real) % TWO_PI, abs=1e-15
        )
        assert res.stats.arcs_evaluated == res.stats.distinct_breakpoints
        assert 0 <= res.arc_index < res.stats.arcs_evaluated


# ----------------------------------------------------------------------
# structural invariants of the sweep


def test_every_visited_arc_is_feasible():
    rng = np.random.default_rng(51)
    for _ in range(40):
        n = int(rng.integers(1, 14))
        k = int(rng.choice([2, 3, 4, 8]))
        ch = random_instance(rng, n)
        bps = breakpoints(ch, k)
        res = sweep(ch, bps, k, keep_trace=True)
        power = res.trace.real ** 2 + res.trace.imag ** 2
        assert np.all(power <= res.boost * ch.direct_power * (1.0 + 1e-9))


def test_optimal_direction_lies_strictly_inside_winning_arc():
    rng = np.random.default_rng(52)
    for _ in range(60):
        n = int(rng.integers(1, 14))
        k = int(rng.choice([2, 3, 4, 8]))
        ch = unit_instance(rng, n)
        bps = breakpoints(ch, k)
        res = sweep(ch, bps, k)
        lam = bps.distinct_angles
        lo = lam[res.arc_index]
        hi = lam[res.arc_index + 1] if res.arc_index + 1 < lam.size else lam[0] + TWO_PI
        offset = (res.composite_phase - lo) % TWO_PI
        assert 1e-9 < offset < (hi - lo) - 1e-9


def test_reassigning_at_the_optimal_direction_is_a_fixed_point():
    rng = np.random.default_rng(53)
    for _ in range(60):
        n = int(rng.integers(1, 14))
        k = int(rng.choice([2, 3, 4, 8]))
        ch = random_instance(rng, n)
        res = solve(ch, k)
        again = initial_assignment(ch, k, res.composite_phase)
        assert np.array_equal(again.shifts, res.config.shifts)


def test_optimal_direction_stays_within_one_step_of_direct_channel():
    rng = np.random.default_rng(54)
    for _ in range(60):
        n = int(rng.integers(1, 14))
        k = int(rng.choice([2, 3, 4, 8]))
        ch = random_instance(rng, n)
        res = solve(ch, k)
        gap = abs(signed_gap(res.composite_phase - ch.direct_phase))
        assert gap < TWO_PI / k


def test_incremental_updates_match_direct_summation():
    rng = np.random.default_rng(55)
    n, k = 120, 4
    ch = unit_instance(rng, n)
    bps = breakpoints(ch, k)
    res = sweep(ch, bps, k, keep_trace=True)
    lam = bps.distinct_angles
    shifts = initial_assignment(ch, k, 0.5 * (lam[0] + lam[1])).shifts.copy()
    rot = np.exp(1j * (TWO_PI / k) * np.arange(k + 1))
    tol = 1e-8 * float(np.sum(ch.reflected_magnitudes))
    for arc in range(bps.distinct_count):
        if arc > 0:
            idx = bps.group_elements(arc)
            shifts[idx] = shifts[idx] % k + 1
        direct = ch.direct + np.sum(ch.reflected * rot[shifts])
        assert abs(direct - res.trace[arc]) <= tol


# ----------------------------------------------------------------------
# reduced-window solve


def test_reduced_matches_full_solve():
    rng = np.random.default_rng(61)
    for trial in range(120):
        n = int(rng.integers(1, 16))
        k = int(rng.choice([2, 3, 4, 8, 16]))
        ch = unit_instance(rng, n) if trial % 2 else random_instance(rng, n)
        full = solve(ch, k)
        red = solve_reduced(ch, k)
        assert red.boost == pytest.approx(full.boost, rel=1e-12), (n, k)
        assert red.stats.arcs_evaluated <= 2 * n + 1
        gap = abs(signed_gap(red.composite_phase - ch.direct_phase))
        assert gap < TWO_PI / k


def test_reduced_aligned_instance():
    mags = np.array([0.7, 0.4, 1.1])
    ch = ChannelSet(0.5 + 0j, mags + 0j)
    res = solve_reduced(ch, 4)
    assert np.all(res.config.shifts == 4)
    assert res.boost == pytest.approx((0.5 + mags.sum()) ** 2 / 0.25, rel=1e-12)


def test_reduced_attains_brute_force_optimum():
    rng = np.random.default_rng(62)
    for _ in range(150):
        ch = random_instance(rng, 6)
        res = solve_reduced(ch, 4)
        ref = brute_force(ch, 4)
        assert res.boost == pytest.approx(ref.boost, rel=1e-9)
