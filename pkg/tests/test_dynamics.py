"""Cell/station dynamics and whole-step properties."""

import math
from collections import deque

import numpy as np
import pytest

from ctmsim import (
    CellParams,
    SimState,
    StationParams,
    Stepwise,
    Topology,
    cell_demand,
    cell_supply,
    preset_a13,
    station_demand,
    station_update,
    step,
    validate_topology,
)

from support import random_demand, random_topology, total_vehicles

T = 10.0 / 3600.0
CELL1 = CellParams(0.5, 114.0, 32.7, 2511.0, 97.1)
CELL7 = CellParams(0.37, 111.0, 20.0, 2136.0, 126.0)


# --- demand / supply -----------------------------------------------------


def test_cell_demand_capacity_capped():
    assert cell_demand(CELL1, 50.0, 0.0, 0.05) == pytest.approx(2511.0)


def test_cell_demand_zero_density():
    assert cell_demand(CELL1, 0.0, 0.0, 0.0) == 0.0


def test_cell_demand_free_flow_value():
    assert cell_demand(CELL1, 10.0, 0.0, 0.0) == pytest.approx(1140.0)


def test_cell_demand_contract_violations():
    with pytest.raises(ValueError):
        cell_demand(CELL1, -1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        cell_demand(CELL1, 10.0, 0.7, 0.4)


def test_cell_supply_jam_density():
    assert cell_supply(CELL1, CELL1.rho_max) == 0.0


def test_cell_supply_congested_value():
    assert cell_supply(CELL7, 30.0) == pytest.approx(1920.0)


def test_cell_supply_empty_cell_is_capacity():
    assert cell_supply(CELL1, 0.0) == pytest.approx(2511.0)


def test_cell_supply_rejects_overjam():
    with pytest.raises(ValueError):
        cell_supply(CELL1, CELL1.rho_max + 1.0)


# --- station demand / update ---------------------------------------------


def station(dwell=30, r_max=2000.0, beta=0.15):
    return StationParams(2, 4, dwell, r_max, Stepwise.constant(beta))


def test_station_demand_empty():
    assert station_demand(station(), 0.0, 0.0, T) == 0.0


def test_station_demand_backlog_converted_to_flow():
    assert station_demand(station(), 100.0, 2.0, T) == pytest.approx(820.0)


def test_station_demand_control_cap():
    assert station_demand(station(), 100.0, 2.0, T, control_cap=500.0) == pytest.approx(500.0)


def test_station_demand_ramp_capacity_cap():
    assert station_demand(station(r_max=300.0), 100.0, 2.0, T) == pytest.approx(300.0)


def test_station_update_occupancy_gains_inflow():
    hist = deque([0.0] * 30, maxlen=30)
    ell, e, hist2 = station_update(10.0, 0.0, hist, 360.0, 0.0, T)
    assert ell == pytest.approx(11.0)
    assert e == 0.0
    assert hist2[-1] == 360.0 and len(hist2) == 30


def test_station_update_zero_state_fixed_point():
    hist = deque([0.0] * 5, maxlen=5)
    ell, e, hist2 = station_update(0.0, 0.0, hist, 0.0, 0.0, T)
    assert ell == 0.0 and e == 0.0 and list(hist2) == [0.0] * 5


def test_station_update_queue_accumulates_denied_cohort():
    hist = deque([360.0] + [0.0] * 29, maxlen=30)
    ell, e, hist2 = station_update(10.0, 0.0, hist, 0.0, 180.0, T)
    assert e == pytest.approx(0.5)


def test_station_update_rejects_overdraw():
    hist = deque([0.0] * 30, maxlen=30)
    with pytest.raises(ValueError, match="exceeds station demand"):
        station_update(10.0, 0.0, hist, 0.0, 100.0, T)


# --- step ------------------------------------------------------------------


def single_station_topology(beta=0.15, dwell=30, r_max=2000.0, p_ms=0.97):
    return Topology(
        T,
        preset_a13().cells,
        stations=(StationParams(2, 4, dwell, r_max, Stepwise.constant(beta)),),
        priorities={4: (p_ms, 1.0 - p_ms)},
    )


def run(topology, demand_fn, steps, caps_fn=None):
    state = SimState.initial(topology)
    records = []
    for k in range(steps):
        caps = caps_fn(k) if caps_fn else None
        state, rec = step(topology, state, demand_fn(k), caps)
        records.append(rec)
    return state, records


def test_step_zero_inflow_is_fixed_point():
    topo = single_station_topology()
    state, records = run(topo, lambda k: 0.0, 50)
    assert np.all(state.rho == 0.0)
    assert state.ell[0] == 0.0 and state.e_queue[0] == 0.0
    assert state.boundary_queue == 0.0
    assert all(np.all(r.phi == 0.0) for r in records)


def test_step_free_flow_steady_state_matches_analytic_density():
    topo = preset_a13()
    state, records = run(topo, lambda k: 500.0, 400)
    v_free = np.array([c.v_free for c in topo.cells])
    assert np.allclose(state.rho, 500.0 / v_free, atol=1e-9)
    assert np.allclose(records[-1].phi, 500.0, atol=1e-9)


def test_step_advances_interval_counter():
    topo = preset_a13()
    state, _ = run(topo, lambda k: 100.0, 7)
    assert state.k == 7


def test_step_boundary_queue_absorbs_excess_demand():
    # demand above cell 1 capacity queues up instead of disappearing
    topo = preset_a13()
    state, records = run(topo, lambda k: 3000.0, 20)
    assert state.boundary_queue > 0.0
    assert records[0].phi[0] == pytest.approx(2511.0)  # q_max of cell 1


def test_step_conservation_with_boundary_queue():
    topo = single_station_topology()
    state = SimState.initial(topo)
    in_minus_out = []
    for k in range(600):
        inflow = 3000.0 if k < 200 else 0.0
        state, rec = step(topo, state, inflow)
        in_minus_out.append(inflow - rec.phi[-1] - rec.s_off.sum())
    residual = total_vehicles(topo, state) - T * math.fsum(in_minus_out)
    assert abs(residual) < 1e-9


def test_flow_record_totals_consistent():
    topo = single_station_topology()
    state = SimState.initial(topo)
    for k in range(120):
        state, rec = step(topo, state, 2000.0)
        n = topo.n_cells
        # phi_out recombines the mainline, off-ramp and station shares exactly
        for i in range(n):
            parts = rec.phi[i + 1] + rec.s_off[i] + sum(
                rec.s_station[q] for q in topo.entering(i)
            )
            assert parts == pytest.approx(rec.phi_out_total[i], rel=1e-12)
        for i in range(n):
            inflow = rec.phi[i] + sum(rec.r_station[q] for q in topo.exiting(i))
            assert inflow == pytest.approx(rec.phi_in_total[i], rel=1e-12)


def test_step_rejects_negative_demand():
    topo = preset_a13()
    with pytest.raises(ValueError):
        step(topo, SimState.initial(topo), -5.0)


# --- randomized conservation and bounds ------------------------------------


def test_conservation_and_bounds_randomized():
    rng = np.random.default_rng(42)
    total_steps = 0
    runs = 0
    while total_steps < 10_000:
        topo = random_topology(rng)
        if validate_topology(topo):
            continue
        runs += 1
        steps = 500
        demand_fn = random_demand(rng, steps)
        state = SimState.initial(topo)
        in_minus_out = []
        q_max = np.array([c.q_max for c in topo.cells])
        rho_max = np.array([c.rho_max for c in topo.cells])
        for k in range(steps):
            inflow = demand_fn(k)
            d_station = [
                station_demand(st, state.inflow_history[q][0], state.e_queue[q], topo.T_hours)
                for q, st in enumerate(topo.stations)
            ]
            state, rec = step(topo, state, inflow)
            in_minus_out.append(inflow - rec.phi[-1] - rec.s_off.sum())
            # density bounds
            assert np.all(state.rho >= 0.0) and np.all(state.rho <= rho_max)
            # flow bounds: nonnegative, interface flows below both capacities
            assert np.all(rec.phi >= 0.0)
            for i in range(topo.n_cells):
                cap = q_max[i] if i == 0 else min(q_max[i - 1], q_max[i])
                assert rec.phi[i] <= cap + 1e-9
            assert rec.phi[-1] <= q_max[-1] + 1e-9
            # station grants below demand and ramp capacity
            for q, st in enumerate(topo.stations):
                assert rec.r_station[q] <= min(st.r_s_max, d_station[q]) + 1e-9
            assert np.all(state.ell >= 0.0) and np.all(state.e_queue >= 0.0)
            assert np.all(state.e_queue <= state.ell + 1e-9)
        residual = total_vehicles(topo, state) - topo.T_hours * math.fsum(in_minus_out)
        assert abs(residual) < 1e-9, f"run {runs}: residual {residual}"
        total_steps += steps
    assert total_steps >= 10_000


# --- aggregation equivalence -------------------------------------------------


def test_parallel_stations_collapse_to_single():
    cells = preset_a13().cells
    shares = (0.5, 0.3, 0.2)
    beta_total = 0.12
    split = Topology(
        T,
        cells,
        stations=tuple(
            StationParams(2, 4, 72, 1e6, Stepwise.constant(beta_total * s)) for s in shares
        ),
        priorities={4: (0.97, 0.01, 0.01, 0.01)},
    )
    merged = Topology(
        T,
        cells,
        stations=(StationParams(2, 4, 72, 1e6, Stepwise.constant(beta_total)),),
        priorities={4: (0.97, 0.03)},
    )
    demand_fn = lambda k: max(500.0, 2400.0 - 7.04 * abs(k - 400))
    state_a = SimState.initial(split)
    state_b = SimState.initial(merged)
    for k in range(800):
        state_a, rec_a = step(split, state_a, demand_fn(k))
        state_b, rec_b = step(merged, state_b, demand_fn(k))
        assert np.allclose(state_a.rho, state_b.rho, atol=1e-9)
        assert rec_a.r_station.sum() == pytest.approx(rec_b.r_station.sum(), abs=1e-9)
    assert state_a.ell.sum() == pytest.approx(state_b.ell.sum(), abs=1e-9)


# --- station flush ------------------------------------------------------------


def test_station_flushes_after_demand_stops():
    topo = single_station_topology(beta=0.15, dwell=30, r_max=500.0)
    state = SimState.initial(topo)
    k0 = None
    for k in range(1500):
        inflow = 1500.0 if k < 300 else 0.0
        state, rec = step(topo, state, inflow)
        if k0 is None and k >= 300 and rec.s_station[0] == 0.0:
            k0 = k
            ell_k0 = float(state.ell[0])
    assert k0 is not None
    bound = math.ceil(ell_k0 / (T * 500.0)) + 30
    # re-run up to the bound and check the station is empty by then
    state = SimState.initial(topo)
    for k in range(k0 + bound + 1):
        inflow = 1500.0 if k < 300 else 0.0
        state, _ = step(topo, state, inflow)
    assert state.ell[0] <= 1e-9
    assert state.e_queue[0] <= 1e-9
