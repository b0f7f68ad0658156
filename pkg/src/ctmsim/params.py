"""Static description of a highway stretch: cells, service stations, split
schedules and merge priorities.

The stretch is a chain of N cells indexed 1..N in driving direction. A service
station is attached to two cells: vehicles leave the main stream at the
downstream end of its entry cell and merge back into its exit cell after a
fixed dwell. Several stations may share entry and/or exit cells.

Units: lengths in km, speeds in km/h, flows in veh/h, densities in veh/km,
the interval length T in hours. Cell and station indices are 1-based in all
public fields and messages; internal helpers use 0-based offsets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Split ratios must leave at least this much of the exit flow on the mainline,
# so that total outflow = phi_downstream / (1 - beta_total) stays well defined.
EPS_SPLIT = 1e-6

# Tolerance for simplex sums and other exact-arithmetic identities.
SUM_TOL = 1e-9


@dataclass(frozen=True)
class Stepwise:
    """Piecewise-constant schedule over interval indices.

    ``points`` holds (k_start, value) pairs sorted by k_start with the first
    entry at k=0; the value at interval k is the one of the last point with
    k_start <= k. A single point is a constant schedule.
    """

    points: tuple[tuple[int, float], ...]

    @classmethod
    def constant(cls, value: float) -> "Stepwise":
        return cls(((0, float(value)),))

    def __call__(self, k: int) -> float:
        value = self.points[0][1]
        for start, v in self.points:
            if start > k:
                break
            value = v
        return value

    def values(self) -> tuple[float, ...]:
        return tuple(v for _, v in self.points)

    def change_points(self) -> tuple[int, ...]:
        return tuple(s for s, _ in self.points)


ZERO_SCHEDULE = Stepwise.constant(0.0)


@dataclass(frozen=True)
class CellParams:
    """Calibration of one cell of the triangular fundamental diagram.

    Attributes:
        length_km: cell length [km]
        v_free: free-flow speed [km/h]
        w_congestion: congestion wave speed [km/h]
        q_max: capacity [veh/h]
        rho_max: jam density [veh/km]
    """

    length_km: float
    v_free: float
    w_congestion: float
    q_max: float
    rho_max: float


@dataclass(frozen=True)
class StationParams:
    """One service station between an entry cell and an exit cell.

    ``dwell_intervals`` is the number of intervals a stopping vehicle spends
    at the station before first attempting to merge back. ``beta_s`` is the
    fraction of the entry cell's total exit flow that pulls into the station,
    as a piecewise-constant schedule over k. ``r_s_max`` caps the flow of the
    ramp that re-joins the exit cell.
    """

    entry_cell: int
    exit_cell: int
    dwell_intervals: int
    r_s_max: float
    beta_s: Stepwise


@dataclass
class Topology:
    """A stretch of cells plus its stations, off-ramp splits and priorities.

    ``beta_offramp`` gives the off-ramp split ratio schedule per cell (empty
    means no off-ramps anywhere). ``priorities`` maps a 1-based exit cell to
    the merge priority vector (p_mainstream, p_station_1, ...), the station
    entries ordered as the stations appear in ``stations`` filtered by that
    exit cell. Cells that receive no station ramp need no entry.
    """

    T_hours: float
    cells: tuple[CellParams, ...]
    stations: tuple[StationParams, ...] = ()
    beta_offramp: tuple[Stepwise, ...] = ()
    priorities: dict[int, tuple[float, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.cells = tuple(self.cells)
        self.stations = tuple(self.stations)
        if not self.beta_offramp:
            self.beta_offramp = tuple(ZERO_SCHEDULE for _ in self.cells)
        else:
            self.beta_offramp = tuple(self.beta_offramp)
        n = len(self.cells)
        self._entering: list[list[int]] = [[] for _ in range(n)]
        self._exiting: list[list[int]] = [[] for _ in range(n)]
        for q, st in enumerate(self.stations):
            if 1 <= st.entry_cell <= n:
                self._entering[st.entry_cell - 1].append(q)
            if 1 <= st.exit_cell <= n:
                self._exiting[st.exit_cell - 1].append(q)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_stations(self) -> int:
        return len(self.stations)

    def entering(self, cell0: int) -> list[int]:
        """Station indices whose entry point is cell ``cell0`` (0-based)."""
        return self._entering[cell0]

    def exiting(self, cell0: int) -> list[int]:
        """Station indices whose ramp merges into cell ``cell0`` (0-based)."""
        return self._exiting[cell0]

    def priority_vector(self, cell0: int) -> tuple[float, ...]:
        return self.priorities.get(cell0 + 1, (1.0,))

    def beta_station_total(self, cell0: int, k: int) -> float:
        return sum(self.stations[q].beta_s(k) for q in self._entering[cell0])

    def split_change_points(self, cell0: int) -> tuple[int, ...]:
        """All interval indices where any split ratio of the cell changes."""
        ks = set(self.beta_offramp[cell0].change_points())
        for q in self._entering[cell0]:
            ks.update(self.stations[q].beta_s.change_points())
        return tuple(sorted(ks))


def _check_schedule(violations: list[str], where: str, sched: Stepwise) -> None:
    starts = sched.change_points()
    if starts[0] != 0:
        violations.append(f"{where}: schedule must start at k=0 (got k={starts[0]})")
    if any(b <= a for a, b in zip(starts, starts[1:])):
        violations.append(f"{where}: schedule breakpoints must be strictly increasing")
    for v in sched.values():
        if not (0.0 <= v < 1.0):
            violations.append(f"{where}: split ratio {v} outside [0, 1)")


def validate_topology(topology: Topology) -> list[str]:
    """Check every static invariant, returning one message per violation.

    An empty list means the topology is valid. Violations are data rather
    than exceptions: callers aggregate them with scenario-level errors.
    """
    v: list[str] = []
    n = topology.n_cells
    T = topology.T_hours

    if not (T > 0.0) or not math.isfinite(T):
        v.append(f"T_hours must be positive and finite (got {T})")
    if n == 0:
        v.append("topology needs at least one cell")

    for i, cell in enumerate(topology.cells, start=1):
        for name in ("length_km", "v_free", "w_congestion", "q_max", "rho_max"):
            val = getattr(cell, name)
            if not (val > 0.0) or not math.isfinite(val):
                v.append(f"cell {i}: {name} must be positive and finite (got {val})")
        if T > 0.0 and cell.v_free > 0.0 and cell.v_free * T > cell.length_km + SUM_TOL:
            v.append(
                f"cell {i}: v_free*T = {cell.v_free * T:.6g} km exceeds length "
                f"{cell.length_km:.6g} km; vehicles would cross the cell within one interval"
            )

    if len(topology.beta_offramp) != n:
        v.append(
            f"beta_offramp has {len(topology.beta_offramp)} entries, expected one per cell ({n})"
        )

    for m, st in enumerate(topology.stations, start=1):
        if not (1 <= st.entry_cell <= n):
            v.append(f"station {m}: entry_cell {st.entry_cell} out of range 1..{n}")
        if not (1 <= st.exit_cell <= n):
            v.append(f"station {m}: exit_cell {st.exit_cell} out of range 1..{n}")
        if not (isinstance(st.dwell_intervals, int) and st.dwell_intervals >= 1):
            v.append(f"station {m}: dwell_intervals must be an integer >= 1 (got {st.dwell_intervals})")
        if not (st.r_s_max > 0.0) or not math.isfinite(st.r_s_max):
            v.append(f"station {m}: r_s_max must be positive and finite (got {st.r_s_max})")
        _check_schedule(v, f"station {m}: beta_s", st.beta_s)

    # Priority vectors: one per cell that receives station ramps, on the simplex.
    for cell0 in range(n):
        exiting = topology.exiting(cell0)
        cell1 = cell0 + 1
        if not exiting:
            if cell1 in topology.priorities:
                v.append(f"cell {cell1}: priority vector given but no station merges there")
            continue
        vec = topology.priorities.get(cell1)
        if vec is None:
            v.append(f"cell {cell1}: priority vector required ({len(exiting)} station ramp(s) merge there)")
            continue
        if len(vec) != 1 + len(exiting):
            v.append(
                f"cell {cell1}: priority vector has {len(vec)} components, "
                f"expected {1 + len(exiting)} (mainstream + stations)"
            )
            continue
        total = math.fsum(vec)
        if abs(total - 1.0) > SUM_TOL:
            v.append(f"cell {cell1}: priority vector must sum to 1 (sums to {total:.6g})")
        if any(p <= 0.0 for p in vec):
            v.append(f"cell {cell1}: every priority component must be > 0 (got {tuple(vec)})")
    for cell1 in topology.priorities:
        if not (1 <= cell1 <= n):
            v.append(f"priorities: cell {cell1} out of range 1..{n}")

    # Combined split ratios must leave room for the mainline at every interval.
    if len(topology.beta_offramp) == n:
        for cell0 in range(n):
            _check_schedule(v, f"cell {cell0 + 1}: offramp_beta", topology.beta_offramp[cell0])
            for k in topology.split_change_points(cell0):
                total = topology.beta_offramp[cell0](k) + topology.beta_station_total(cell0, k)
                if total > 1.0 - EPS_SPLIT:
                    v.append(
                        f"cell {cell0 + 1}: off-ramp + station split ratios reach "
                        f"{total:.6g} at k={k}; must stay <= 1 - {EPS_SPLIT:g}"
                    )
                    break

    # The entry/exit maps must account for every station exactly once each.
    n_in = sum(len(topology.entering(i)) for i in range(n))
    n_out = sum(len(topology.exiting(i)) for i in range(n))
    m = topology.n_stations
    if not (n_in == n_out == m):
        v.append(
            f"station maps inconsistent: {n_in} entry links and {n_out} exit links for {m} stations"
        )

    return v


def as_arrays(topology: Topology) -> dict[str, np.ndarray]:
    """Per-cell parameter vectors, convenient for vectorized bookkeeping."""
    return {
        "length_km": np.array([c.length_km for c in topology.cells]),
        "v_free": np.array([c.v_free for c in topology.cells]),
        "w_congestion": np.array([c.w_congestion for c in topology.cells]),
        "q_max": np.array([c.q_max for c in topology.cells]),
        "rho_max": np.array([c.rho_max for c in topology.cells]),
    }
