"""Shared test helpers: brute-force oracles and randomized model generators.

The merge oracle re-derives the congested-supply partition by enumerating
every served/saturated station subset and keeping the unique consistent one,
instead of running the iterative stage procedure, so the two paths are
independent.
"""

from __future__ import annotations

import math

import numpy as np

from ctmsim import CellParams, StationParams, Stepwise, Topology

T_10S = 10.0 / 3600.0


def merge_oracle(d_main, d_stations, supply, priority):
    """Reference allocation via subset enumeration.

    A partition (served, saturated) is consistent when every served station's
    demand fits under the saturated set's equal share of the leftover budget
    and every saturated station's demand exceeds it; the saturated set then
    splits the leftover by priority weight. Exactly one subset is consistent.
    """
    total_station = sum(d_stations)
    if d_main + total_station <= supply:
        return d_main, list(d_stations)
    p_ms = priority[0]
    if total_station <= (1.0 - p_ms) * supply:
        return supply - total_station, list(d_stations)
    if d_main <= p_ms * supply:
        phi, budget = d_main, supply - d_main
    else:
        phi, budget = p_ms * supply, (1.0 - p_ms) * supply

    n = len(d_stations)
    solutions = []
    for mask in range(1 << n):
        served = [q for q in range(n) if mask >> q & 1]
        rest = [q for q in range(n) if not mask >> q & 1]
        if not rest:
            continue
        leftover = budget - sum(d_stations[q] for q in served)
        if leftover < 0.0:
            continue
        share = leftover / len(rest)
        if any(d_stations[q] > share for q in served):
            continue
        if any(d_stations[q] <= share for q in rest):
            continue
        wsum = sum(priority[1 + q] for q in rest)
        grants = [0.0] * n
        for q in served:
            grants[q] = d_stations[q]
        for q in rest:
            grants[q] = priority[1 + q] / wsum * leftover
        solutions.append(grants)
    assert len(solutions) == 1, f"{len(solutions)} consistent partitions (expected 1)"
    return phi, solutions[0]


def random_merge_instance(rng: np.random.Generator):
    n = int(rng.integers(0, 5))
    d_main = float(rng.uniform(0.0, 3000.0))
    d_stations = rng.uniform(0.0, 1200.0, n)
    if n and rng.random() < 0.25:
        d_stations[rng.integers(0, n)] = 0.0
    total = d_main + d_stations.sum()
    if rng.random() < 0.1:
        supply = 0.0
    else:
        supply = float(rng.uniform(0.0, 1.3) * (total + 1.0))
    weights = rng.uniform(0.01, 1.0, n + 1)
    priority = weights / weights.sum()
    return d_main, [float(x) for x in d_stations], supply, [float(x) for x in priority]


def random_topology(rng: np.random.Generator, with_stations: bool = True) -> Topology:
    """A feasible random stretch; station priorities are equal within a cell."""
    n = int(rng.integers(3, 8))
    cells = []
    for _ in range(n):
        v = float(rng.uniform(70.0, 130.0))
        length = v * T_10S * float(rng.uniform(1.05, 2.2))
        w = float(rng.uniform(15.0, 35.0))
        q = float(rng.uniform(1500.0, 2600.0))
        rho_max = float(rng.uniform(2.5 * q / v, 160.0))
        cells.append(CellParams(length, v, w, q, rho_max))

    beta_off = tuple(
        Stepwise.constant(float(rng.uniform(0.0, 0.2)) if rng.random() < 0.5 else 0.0)
        for _ in range(n)
    )

    stations: list[StationParams] = []
    priorities: dict[int, tuple[float, ...]] = {}
    if with_stations:
        m = int(rng.integers(1, 4))
        entry_load = [0.0] * n
        for _ in range(m):
            entry = int(rng.integers(1, n + 1))
            exit_ = int(rng.integers(1, n + 1))
            beta = float(rng.uniform(0.02, 0.15))
            if beta_off[entry - 1](0) + entry_load[entry - 1] + beta > 0.7:
                continue
            entry_load[entry - 1] += beta
            stations.append(
                StationParams(
                    entry_cell=entry,
                    exit_cell=exit_,
                    dwell_intervals=int(rng.integers(1, 26)),
                    r_s_max=float(rng.uniform(200.0, 2000.0)),
                    beta_s=Stepwise.constant(beta),
                )
            )
        by_exit: dict[int, int] = {}
        for st in stations:
            by_exit[st.exit_cell] = by_exit.get(st.exit_cell, 0) + 1
        for cell1, count in by_exit.items():
            p_ms = float(rng.uniform(0.5, 0.99))
            priorities[cell1] = (p_ms, *([(1.0 - p_ms) / count] * count))

    return Topology(
        T_hours=T_10S,
        cells=tuple(cells),
        stations=tuple(stations),
        beta_offramp=beta_off,
        priorities=priorities,
    )


def random_demand(rng: np.random.Generator, steps: int):
    """Piecewise-linear demand over the run, returned as a callable."""
    ks = [0, steps // 3, 2 * steps // 3, steps]
    vs = [float(rng.uniform(0.0, 3000.0)) for _ in ks]

    def demand(k: int) -> float:
        return float(np.interp(k, ks, vs))

    return demand


def total_vehicles(topology: Topology, state) -> float:
    lengths = [c.length_km for c in topology.cells]
    return (
        math.fsum(L * r for L, r in zip(lengths, state.rho))
        + math.fsum(state.ell)
        + state.boundary_queue
    )
