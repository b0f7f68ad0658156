"""Merge allocation: contract examples, oracle equivalence, continuity."""

import numpy as np
import pytest

from ctmsim import allocate_merge, priority_split

from support import merge_oracle, random_merge_instance


def test_free_flow_serves_everything():
    phi, r = allocate_merge(1000.0, [100.0], 2000.0, [0.97, 0.03])
    assert phi == 1000.0
    assert r == [100.0]


def test_congested_stations_within_share():
    # p_ms*S = 1455, station demand 10 <= 45: mainstream absorbs the rest
    phi, r = allocate_merge(2000.0, [10.0], 1500.0, [0.97, 0.03])
    assert phi == pytest.approx(1490.0)
    assert r == [10.0]


def test_congested_mainstream_fits_equal_priority_split():
    # residual 500, equal share 250 below both demands: priority split
    phi, r = allocate_merge(500.0, [300.0, 300.0], 1000.0, [0.97, 0.015, 0.015])
    assert phi == pytest.approx(500.0)
    assert r == pytest.approx([250.0, 250.0])


def test_congested_mainstream_fits_two_stage_split():
    # share 250 serves the 100 fully; the 600 station takes the leftover 400
    phi, r = allocate_merge(500.0, [100.0, 600.0], 1000.0, [0.97, 0.015, 0.015])
    assert phi == pytest.approx(500.0)
    assert r == pytest.approx([100.0, 400.0])


def test_both_sides_over_their_shares():
    phi, r = allocate_merge(3000.0, [500.0], 2000.0, [0.9, 0.1])
    assert phi == pytest.approx(1800.0)
    assert r == pytest.approx([200.0])


def test_zero_supply_zero_grants():
    phi, r = allocate_merge(100.0, [50.0, 0.0], 0.0, [0.5, 0.25, 0.25])
    assert phi == 0.0
    assert r == pytest.approx([0.0, 0.0])


def test_priority_not_on_simplex_rejected():
    with pytest.raises(ValueError, match="simplex"):
        allocate_merge(100.0, [50.0], 1000.0, [0.97, 0.02])
    with pytest.raises(ValueError, match="simplex"):
        allocate_merge(100.0, [50.0], 1000.0, [0.0, 1.0])


def test_priority_length_mismatch_rejected():
    with pytest.raises(ValueError, match="components"):
        allocate_merge(100.0, [50.0, 10.0], 1000.0, [0.97, 0.03])


def test_oracle_equivalence_randomized():
    rng = np.random.default_rng(20240811)
    for _ in range(10_000):
        d_main, d_st, supply, priority = random_merge_instance(rng)
        phi, r = allocate_merge(d_main, d_st, supply, priority)
        phi_ref, r_ref = merge_oracle(d_main, d_st, supply, priority)
        assert phi == pytest.approx(phi_ref, abs=1e-9)
        assert np.allclose(r, r_ref, atol=1e-9)
        # merge totals: admitted flow never exceeds supply, equality when scarce
        admitted = phi + sum(r)
        total = d_main + sum(d_st)
        assert admitted <= supply + 1e-9 or total <= supply
        if total >= supply:
            assert admitted == pytest.approx(min(total, supply), abs=1e-9)
        assert 0.0 <= phi <= d_main + 1e-12


def test_continuity_at_free_flow_boundary():
    d_main, d_st, priority = 800.0, [300.0, 200.0], [0.9, 0.06, 0.04]
    total = d_main + sum(d_st)
    for eps in (1e-6, 1e-9):
        phi_lo, r_lo = allocate_merge(d_main, d_st, total - eps, priority)
        phi_hi, r_hi = allocate_merge(d_main, d_st, total + eps, priority)
        assert phi_lo + sum(r_lo) == pytest.approx(phi_hi + sum(r_hi), abs=1e-5)
    phi_eq, r_eq = allocate_merge(d_main, d_st, total, priority)
    assert phi_eq == d_main and r_eq == d_st


def test_priority_split_terminates_on_large_sets():
    rng = np.random.default_rng(7)
    demands = list(rng.uniform(1.0, 100.0, 200))
    weights = list(rng.uniform(0.1, 1.0, 200))
    budget = 0.4 * sum(demands)
    grants = priority_split(demands, budget, weights)
    assert sum(grants) == pytest.approx(budget)
    assert all(g >= 0.0 for g in grants)


def test_priority_split_exact_boundary_serves_everyone():
    grants = priority_split([10.0, 20.0], 30.0, [0.5, 0.5])
    assert grants == [10.0, 20.0]
