"""Per-interval dynamics of the stretch: demand/supply, merge allocation and
the state update.

Density of cell i obeys the conservation update

    rho_i(k+1) = rho_i(k) + T/L_i * (Phi_in_i(k) - Phi_out_i(k)),

with total inflow ``Phi_in = phi_i + sum of station ramp flows merging here``
and total outflow ``Phi_out = phi_{i+1} + off-ramp flow + station pull-ins``.
Interface flows come from demand/supply matching of the triangular
fundamental diagram:

    demand_i = min((1 - beta_off - beta_stations) * v_free * rho, q_max)
    supply_j = min(w * (rho_max - rho), q_max)

Every split ratio is taken against the cell's total exit flow, so
``phi_{i+1} = (1 - beta_total) * Phi_out`` and the off-ramp and station
pull-in flows are their beta fraction of the same ``Phi_out``.

A station holds its vehicles for ``dwell_intervals`` intervals; the cohort
that pulled in at k - dwell, plus any backlog that was previously denied,
forms the ramp demand back into the exit cell:

    D_station = min(s_in(k - dwell) + e/T, control cap, r_s_max).

When the exit cell cannot absorb mainstream and ramp demand together, the
supply is divided by the cell's priority vector: whichever side stays below
its share is served fully, and the scarce side absorbs the remainder (for
several stations via an iterative equal-share partition with a final
priority-weighted split of whatever supply is left).

Everything here is pure: ``step`` maps (topology, state, inputs) to a new
state plus the interval's flow record, so independent trajectories can run
in parallel worker processes.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .params import StationParams, Topology

# Absolute slack for clamping float dust on quantities that are nonnegative
# (or bounded) in exact arithmetic. Anything beyond it is a real defect.
NUM_TOL = 1e-9


class InvariantError(RuntimeError):
    """A model invariant broke mid-run (NaN, negative flow, density bound)."""

    def __init__(self, k: int, message: str):
        super().__init__(f"interval k={k}: {message}")
        self.k = k


@dataclass
class SimState:
    """Mutable quantities of one trajectory at the start of interval ``k``.

    ``inflow_history[q]`` is a ring buffer of the last ``dwell_intervals``
    station pull-in flows of station q, oldest first, so its head is the
    cohort attempting to exit now. ``e_queue`` counts vehicles whose merge
    was denied earlier and who are still waiting at the station; they are a
    subset of ``ell``. ``boundary_queue`` holds demand that cell 1 could not
    admit yet.
    """

    rho: np.ndarray
    ell: np.ndarray
    e_queue: np.ndarray
    inflow_history: tuple[deque[float], ...]
    boundary_queue: float
    k: int

    @classmethod
    def initial(cls, topology: Topology) -> "SimState":
        """Empty stretch: zero densities, empty stations and queues."""
        return cls(
            rho=np.zeros(topology.n_cells),
            ell=np.zeros(topology.n_stations),
            e_queue=np.zeros(topology.n_stations),
            inflow_history=tuple(
                deque([0.0] * st.dwell_intervals, maxlen=st.dwell_intervals)
                for st in topology.stations
            ),
            boundary_queue=0.0,
            k=0,
        )

    def total_vehicles(self, topology: Topology) -> float:
        """Vehicles on the stretch, at stations and in the boundary queue."""
        lengths = np.array([c.length_km for c in topology.cells])
        return float(lengths @ self.rho + self.ell.sum() + self.boundary_queue)


@dataclass
class FlowRecord:
    """All flows of one interval, for auditing, metrics and CSV output.

    ``phi[i]`` is the mainline flow across interface i, i.e. into cell i+1
    (0-based); ``phi[n]`` leaves the stretch. ``phi_in_total``/
    ``phi_out_total`` are the per-cell totals entering the density update.
    """

    phi: np.ndarray
    s_off: np.ndarray
    s_station: np.ndarray
    r_station: np.ndarray
    phi_in_total: np.ndarray
    phi_out_total: np.ndarray


def cell_demand(cell, rho: float, beta_off: float, beta_s_total: float) -> float:
    """Mainline flow the cell offers downstream during one interval.

    The off-ramp and station shares are removed before the capacity cap, so
    the returned value is what competes for downstream supply.
    """
    if rho < 0.0:
        raise ValueError(f"negative density {rho}")
    beta_total = beta_off + beta_s_total
    if beta_off < 0.0 or beta_s_total < 0.0 or beta_total > 1.0:
        raise ValueError(f"split ratios out of range: beta_off={beta_off}, beta_s={beta_s_total}")
    return min((1.0 - beta_total) * cell.v_free * rho, cell.q_max)


def cell_supply(cell, rho: float) -> float:
    """Flow the cell can absorb during one interval."""
    if rho < 0.0 or rho > cell.rho_max + NUM_TOL:
        raise ValueError(f"density {rho} outside [0, {cell.rho_max}]")
    return max(min(cell.w_congestion * (cell.rho_max - rho), cell.q_max), 0.0)


def station_demand(
    station: StationParams,
    inflow_delayed: float,
    e_queue: float,
    T: float,
    control_cap: float | None = None,
) -> float:
    """Ramp demand of a station toward its exit cell.

    ``inflow_delayed`` is the pull-in flow of ``dwell_intervals`` intervals
    ago (zero while the history is still warming up); the backlog ``e_queue``
    is converted to a flow over one interval. A metering controller may cap
    the demand below the ramp capacity.
    """
    if inflow_delayed < 0.0 or e_queue < 0.0:
        raise ValueError("station demand inputs must be nonnegative")
    d = min(inflow_delayed + e_queue / T, station.r_s_max)
    if control_cap is not None:
        d = min(d, control_cap)
    return d


def priority_split(
    demands: Sequence[float], budget: float, weights: Sequence[float]
) -> list[float]:
    """Divide ``budget`` among ramps whose demands jointly exceed it.

    Iteratively: ramps whose demand is at most the equal share of the
    remaining budget are served fully and removed; once no ramp fits under
    the share, the leftover is split among the rest proportionally to their
    priority weights. Terminates in at most ``len(demands)`` rounds because
    each round either shrinks the unserved set or exits via the weighted
    split.
    """
    n = len(demands)
    grants = [0.0] * n
    remaining = list(range(n))
    budget = max(budget, 0.0)
    for _ in range(n + 1):
        if not remaining:
            return grants
        share = budget / len(remaining)
        served = [q for q in remaining if demands[q] <= share]
        if not served:
            wsum = sum(weights[q] for q in remaining)
            for q in remaining:
                grants[q] = weights[q] / wsum * budget
            return grants
        for q in served:
            grants[q] = demands[q]
            budget -= demands[q]
        remaining = [q for q in remaining if demands[q] > share]
    raise AssertionError("priority_split failed to terminate")


def allocate_merge(
    d_main: float,
    d_stations: Sequence[float],
    supply: float,
    priority: Sequence[float],
) -> tuple[float, list[float]]:
    """Split the receiving cell's supply between mainstream and station ramps.

    ``priority`` is (p_mainstream, p_station_1, ...). Free flow admits every
    demand. Under congestion, whichever side fits inside its priority share
    is served fully and the other side takes the remaining supply; if both
    sides exceed their shares, each side is held at exactly its share. Ties
    at the free-flow boundary count as free flow, so the total admitted flow
    ``phi + sum(r)`` is continuous and equals ``min(d_main + sum(d), supply)``.
    """
    if len(priority) != 1 + len(d_stations):
        raise ValueError(
            f"priority vector has {len(priority)} components for {len(d_stations)} station(s)"
        )
    if abs(sum(priority) - 1.0) > NUM_TOL or priority[0] <= 0.0 or any(p < 0.0 for p in priority):
        raise ValueError(f"priority vector not on the simplex: {tuple(priority)}")
    if d_main < 0.0 or supply < 0.0 or any(d < 0.0 for d in d_stations):
        raise ValueError("demands and supply must be nonnegative")

    total_station = sum(d_stations)
    if d_main + total_station <= supply:
        return d_main, list(d_stations)

    p_ms = priority[0]
    if total_station <= (1.0 - p_ms) * supply:
        # Stations fit inside their share; mainstream absorbs the rest.
        return supply - total_station, list(d_stations)
    if d_main <= p_ms * supply:
        # Mainstream fits; stations contend for what it leaves behind.
        grants = priority_split(d_stations, supply - d_main, priority[1:])
        return d_main, grants
    # Both sides exceed their shares: hold each at exactly its share.
    grants = priority_split(d_stations, (1.0 - p_ms) * supply, priority[1:])
    return p_ms * supply, grants


def station_update(
    ell: float,
    e_queue: float,
    history: deque[float],
    s_s_now: float,
    r_s_granted: float,
    T: float,
) -> tuple[float, float, deque[float]]:
    """Advance one station by one interval.

    The occupancy gains this interval's pull-in flow and loses the granted
    ramp flow; the backlog gains the cohort whose dwell just elapsed (the
    head of ``history``) and loses the same granted flow. The history ring
    then rotates with the new pull-in appended.
    """
    delayed = history[0]
    if r_s_granted > delayed + e_queue / T + NUM_TOL:
        raise ValueError(
            f"granted ramp flow {r_s_granted} exceeds station demand {delayed + e_queue / T}"
        )
    ell_next = ell + T * (s_s_now - r_s_granted)
    e_next = e_queue + T * delayed - T * r_s_granted
    if ell_next < -NUM_TOL or e_next < -NUM_TOL:
        raise ValueError(f"station bookkeeping went negative: ell={ell_next}, e={e_next}")
    new_history = deque(history, maxlen=history.maxlen)
    new_history.append(s_s_now)
    return max(ell_next, 0.0), max(e_next, 0.0), new_history


def step(
    topology: Topology,
    state: SimState,
    inflow_demand: float,
    control_caps: Sequence[float | None] | None = None,
) -> tuple[SimState, FlowRecord]:
    """Advance the whole stretch by one interval.

    ``inflow_demand`` is the arrival flow at the upstream boundary; whatever
    cell 1 cannot admit accumulates in the boundary queue instead of being
    lost. The virtual cell downstream of cell N has infinite supply.
    ``control_caps`` optionally caps each station's ramp demand for this
    interval (None entries leave a station uncontrolled).

    Returns the state at k+1 and the record of every flow during k. Raises
    InvariantError if the update produces NaNs or leaves the feasible region
    by more than float dust.
    """
    T = topology.T_hours
    n = topology.n_cells
    m = topology.n_stations
    k = state.k
    rho = state.rho
    if inflow_demand < 0.0:
        raise ValueError(f"negative upstream demand {inflow_demand}")
    if control_caps is None:
        control_caps = (None,) * m

    beta_off = np.array([topology.beta_offramp[i](k) for i in range(n)])
    beta_st = np.array([st.beta_s(k) for st in topology.stations]) if m else np.zeros(0)
    beta_total = beta_off.copy()
    for q, st in enumerate(topology.stations):
        beta_total[st.entry_cell - 1] += beta_st[q]

    demand = np.array(
        [
            cell_demand(c, rho[i], beta_off[i], beta_total[i] - beta_off[i])
            for i, c in enumerate(topology.cells)
        ]
    )
    supply = np.array([cell_supply(c, rho[i]) for i, c in enumerate(topology.cells)])
    d_station = np.array(
        [
            station_demand(st, state.inflow_history[q][0], state.e_queue[q], T, control_caps[q])
            for q, st in enumerate(topology.stations)
        ]
    ) if m else np.zeros(0)

    d_boundary = min(inflow_demand + state.boundary_queue / T, topology.cells[0].q_max)

    # Interface flows: one merge per receiving cell, plus the free outflow of
    # the last cell into the (infinitely absorbing) virtual cell N+1.
    phi = np.zeros(n + 1)
    r_station = np.zeros(m)
    for j in range(n):
        d_main = d_boundary if j == 0 else demand[j - 1]
        exiting = topology.exiting(j)
        if exiting:
            phi[j], grants = allocate_merge(
                d_main,
                [d_station[q] for q in exiting],
                supply[j],
                topology.priority_vector(j),
            )
            for q, g in zip(exiting, grants):
                r_station[q] = g
        else:
            phi[j] = min(d_main, supply[j])
    phi[n] = demand[n - 1]

    # Reconstruct each cell's total exit flow from its mainline share, then
    # peel the off-ramp and station fractions off the same total.
    phi_out = phi[1:] / (1.0 - beta_total)
    s_off = beta_off * phi_out
    s_station = np.array(
        [beta_st[q] * phi_out[st.entry_cell - 1] for q, st in enumerate(topology.stations)]
    ) if m else np.zeros(0)
    phi_in = phi[:n].copy()
    for q, st in enumerate(topology.stations):
        phi_in[st.exit_cell - 1] += r_station[q]

    lengths = np.array([c.length_km for c in topology.cells])
    rho_next = rho + (T / lengths) * (phi_in - phi_out)

    if np.any(np.isnan(phi)) or np.any(np.isnan(rho_next)):
        raise InvariantError(k, "NaN in interface flows or densities")
    if np.any(phi < -NUM_TOL) or np.any(s_station < -NUM_TOL) or np.any(r_station < -NUM_TOL):
        raise InvariantError(k, "negative flow computed")
    for i, c in enumerate(topology.cells):
        if rho_next[i] < -NUM_TOL or rho_next[i] > c.rho_max + NUM_TOL:
            raise InvariantError(
                k, f"cell {i + 1} density {rho_next[i]:.9g} left [0, {c.rho_max}]"
            )
    rho_max = np.array([c.rho_max for c in topology.cells])
    rho_next = np.clip(rho_next, 0.0, rho_max)

    ell_next = np.empty(m)
    e_next = np.empty(m)
    histories = []
    for q in range(m):
        ell_q, e_q, hist_q = station_update(
            float(state.ell[q]),
            float(state.e_queue[q]),
            state.inflow_history[q],
            float(s_station[q]),
            float(r_station[q]),
            T,
        )
        ell_next[q] = ell_q
        e_next[q] = e_q
        histories.append(hist_q)

    queue_next = state.boundary_queue + T * (inflow_demand - phi[0])
    if queue_next < -NUM_TOL:
        raise InvariantError(k, f"boundary queue went negative ({queue_next:.9g})")
    queue_next = max(queue_next, 0.0)

    record = FlowRecord(
        phi=phi,
        s_off=s_off,
        s_station=s_station,
        r_station=r_station,
        phi_in_total=phi_in,
        phi_out_total=phi_out,
    )
    next_state = SimState(
        rho=rho_next,
        ell=ell_next,
        e_queue=e_next,
        inflow_history=tuple(histories),
        boundary_queue=queue_next,
        k=k + 1,
    )
    return next_state, record
