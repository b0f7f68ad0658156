"""Scenario execution: trajectory collection, CSV output, baselines, sweeps.

A run records the state at the start of every interval together with the
flows of that interval, so row k of the trajectory CSV is a consistent
snapshot. Sweeps reuse one station-free baseline run across the whole grid
and may fan grid points out to worker processes; every run is deterministic,
so serial and parallel execution produce byte-identical CSV files.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from itertools import product
from multiprocessing import Pool

import numpy as np

from .control import build_controller, controller_step
from .dynamics import SimState, step
from .metrics import (
    DELTA_CEILING_S,
    TrajectoryMetrics,
    free_flow_traversal_min,
    trajectory_metrics,
)
from .scenario import Scenario, demand_at, parse_scenario, serialize_scenario

CSV_FLOAT_FMT = "%.9g"


@dataclass
class RunResult:
    """Full trajectory of one scenario run plus its summary metrics."""

    scenario: Scenario
    rho: np.ndarray            # (K, N) densities at the start of each interval
    phi: np.ndarray            # (K, N+1) interface flows during each interval
    s_off: np.ndarray          # (K, N) off-ramp flows
    s_station: np.ndarray      # (K, M) station pull-in flows
    r_station: np.ndarray      # (K, M) station re-merge flows
    ell: np.ndarray            # (K, M) station occupancies
    e_queue: np.ndarray        # (K, M) station exit backlogs
    boundary_queue: np.ndarray  # (K,) upstream queue
    metrics: TrajectoryMetrics
    final_state: SimState
    conservation_residual: float

    @property
    def delta_s(self) -> np.ndarray:
        return self.metrics.delta_series

    @property
    def delta_max(self) -> float:
        return self.metrics.delta_max

    def e_max(self) -> float:
        return float(self.e_queue.max()) if self.e_queue.size else 0.0


def run_scenario(
    scenario: Scenario,
    baseline_delta=None,
    delta_ceiling_s: float = DELTA_CEILING_S,
) -> RunResult:
    """Simulate a scenario over its horizon.

    ``baseline_delta`` (a delta series from a station-free run) enables the
    peak-reduction index in the result's metrics.
    """
    topo = scenario.topology
    K = scenario.horizon_intervals
    n, m = topo.n_cells, topo.n_stations
    controller = build_controller(scenario.controller, topo)

    rho = np.empty((K, n))
    phi = np.empty((K, n + 1))
    phi_out_total = np.empty((K, n))
    s_off = np.empty((K, n))
    s_station = np.empty((K, m))
    r_station = np.empty((K, m))
    ell = np.empty((K, m))
    e_queue = np.empty((K, m))
    boundary = np.empty(K)
    inflows = np.empty(K)
    outflows = np.empty(K)

    state = SimState.initial(topo)
    total0 = state.total_vehicles(topo)
    for k in range(K):
        caps = controller_step(controller, state.rho).caps if controller else None
        inflow = demand_at(scenario.demand, k)
        rho[k] = state.rho
        ell[k] = state.ell
        e_queue[k] = state.e_queue
        boundary[k] = state.boundary_queue
        state, rec = step(topo, state, inflow, caps)
        phi[k] = rec.phi
        phi_out_total[k] = rec.phi_out_total
        s_off[k] = rec.s_off
        s_station[k] = rec.s_station
        r_station[k] = rec.r_station
        inflows[k] = inflow
        outflows[k] = rec.phi[n] + rec.s_off.sum()

    served = math.fsum(inflows) - math.fsum(outflows)
    residual = state.total_vehicles(topo) - total0 - topo.T_hours * served

    metrics = trajectory_metrics(rho, phi_out_total, topo, baseline_delta, delta_ceiling_s)

    return RunResult(
        scenario=scenario,
        rho=rho,
        phi=phi,
        s_off=s_off,
        s_station=s_station,
        r_station=r_station,
        ell=ell,
        e_queue=e_queue,
        boundary_queue=boundary,
        metrics=metrics,
        final_state=state,
        conservation_residual=float(residual),
    )


def derive_baseline_document(doc: dict) -> dict:
    """The same stretch with every station removed (the delta_0 reference)."""
    out = copy.deepcopy(doc)
    out["stations"] = []
    out["priorities"] = {}
    out.pop("controller", None)
    out["name"] = f"{doc.get('name', 'scenario')}-baseline"
    return out


def baseline_of(scenario: Scenario) -> Scenario:
    return parse_scenario(derive_baseline_document(serialize_scenario(scenario)))


# --- CSV output --------------------------------------------------------------


def _fmt(x: float) -> str:
    return CSV_FLOAT_FMT % x


def run_csv_header(n: int, m: int) -> list[str]:
    cols = ["k", "t_s"]
    cols += [f"rho_{i}" for i in range(1, n + 1)]
    cols += [f"phi_{i}" for i in range(1, n + 2)]
    cols += [f"s_s_{q}" for q in range(1, m + 1)]
    cols += [f"r_s_{q}" for q in range(1, m + 1)]
    cols += [f"ell_{q}" for q in range(1, m + 1)]
    cols += [f"e_{q}" for q in range(1, m + 1)]
    cols += ["boundary_queue", "delta_s"]
    return cols


def run_csv_text(result: RunResult) -> str:
    n = result.scenario.topology.n_cells
    m = result.scenario.topology.n_stations
    T_s = result.scenario.T_s
    lines = [",".join(run_csv_header(n, m))]
    for k in range(result.rho.shape[0]):
        row = [str(k), _fmt(k * T_s)]
        row += [_fmt(x) for x in result.rho[k]]
        row += [_fmt(x) for x in result.phi[k]]
        row += [_fmt(x) for x in result.s_station[k]]
        row += [_fmt(x) for x in result.r_station[k]]
        row += [_fmt(x) for x in result.ell[k]]
        row += [_fmt(x) for x in result.e_queue[k]]
        row += [_fmt(result.boundary_queue[k]), _fmt(result.delta_s[k])]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def write_run_csv(result: RunResult, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(run_csv_text(result))


def read_delta_column(path) -> np.ndarray:
    """The delta_s column of a previously written trajectory CSV."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        try:
            col = header.index("delta_s")
        except ValueError:
            raise ValueError(f"{path}: no delta_s column") from None
        return np.array([float(line.strip().split(",")[col]) for line in fh if line.strip()])


def run_summary(result: RunResult) -> dict:
    m = result.metrics
    summary = {
        "name": result.scenario.name,
        "intervals": int(result.rho.shape[0]),
        "T_s": result.scenario.T_s,
        "delta_max_s": m.delta_max,
        "delta_argmax_k": int(np.argmax(m.delta_series)) if m.delta_series.size else 0,
        "ttt_free_flow_min": m.ttt_free_flow,
        "e_max_veh": result.e_max(),
        "conservation_residual_veh": result.conservation_residual,
        "saturated": m.saturated,
    }
    if m.pi is not None:
        summary["pi"] = m.pi
    return summary


# --- Parameter sweeps ---------------------------------------------------------

SWEEP_COLUMNS = ["beta_s", "delta_min", "p_ms", "delta_max_s", "pi", "e_max"]


def apply_grid_point(doc: dict, beta_s, delta_min, p_ms) -> dict:
    """Override every station's split/dwell and each merge's priorities."""
    out = copy.deepcopy(doc)
    for st in out.get("stations", []):
        if beta_s is not None:
            st["beta_s"] = beta_s
        if delta_min is not None:
            st["delta_min"] = delta_min
    if p_ms is not None:
        for prio in out.get("priorities", {}).values():
            weights = prio["stations"]
            wsum = sum(weights)
            prio["ms"] = p_ms
            prio["stations"] = [(1.0 - p_ms) * w / wsum for w in weights]
    return out


def _effective_point(doc: dict, beta_s, delta_min, p_ms) -> tuple[float, float, float]:
    """Grid coordinates echoed into the table (station 1's values when not swept)."""
    st = doc["stations"][0]
    if beta_s is None:
        raw = st["beta_s"]
        beta_s = raw if isinstance(raw, (int, float)) else raw[0][1]
    if delta_min is None:
        delta_min = st["delta_min"]
    if p_ms is None:
        p_ms = doc["priorities"][str(st["exit"])]["ms"]
    return float(beta_s), float(delta_min), float(p_ms)


def _sweep_worker(doc_json: str) -> tuple[float, float]:
    result = run_scenario(parse_scenario(doc_json))
    return result.delta_max, result.e_max()


def sweep(scenario: Scenario, grid: dict, jobs: int = 1) -> tuple[list[dict], RunResult]:
    """Run the scenario across a (beta_s x delta_min x p_ms) grid.

    ``grid`` maps any of ``beta_s``/``delta_min``/``p_ms`` to a list of
    values; omitted axes keep the scenario's own value. Returns the table
    rows in deterministic grid order plus the shared baseline run.
    """
    axes = {}
    for key in ("beta_s", "delta_min", "p_ms"):
        if key in grid:
            vals = grid[key]
            if not isinstance(vals, (list, tuple)) or not vals:
                raise ValueError(f"grid.{key}: expected a nonempty list")
            axes[key] = list(vals)
        else:
            axes[key] = [None]
    unknown = set(grid) - {"beta_s", "delta_min", "p_ms"}
    if unknown:
        raise ValueError(f"grid: unknown keys {sorted(unknown)}")
    if all(v == [None] for v in axes.values()):
        raise ValueError("grid: give at least one of beta_s, delta_min, p_ms")
    doc = serialize_scenario(scenario)
    if not doc["stations"]:
        raise ValueError("grid sweeps vary station parameters but the scenario has no stations")

    baseline = run_scenario(parse_scenario(derive_baseline_document(doc)))
    points = list(product(axes["beta_s"], axes["delta_min"], axes["p_ms"]))
    variant_docs = [json.dumps(apply_grid_point(doc, b, d, p)) for b, d, p in points]

    if jobs > 1:
        with Pool(processes=jobs) as pool:
            outcomes = pool.map(_sweep_worker, variant_docs)
    else:
        outcomes = [_sweep_worker(v) for v in variant_docs]

    peak0 = baseline.delta_max
    if peak0 <= 0.0:
        raise ValueError("baseline has no congestion peak; pi is undefined")
    rows = []
    for (b, d, p), (delta_max, e_max) in zip(points, outcomes):
        beta_eff, delta_eff, p_eff = _effective_point(doc, b, d, p)
        rows.append(
            {
                "beta_s": beta_eff,
                "delta_min": delta_eff,
                "p_ms": p_eff,
                "delta_max_s": delta_max,
                "pi": (peak0 - delta_max) / peak0,
                "e_max": e_max,
            }
        )
    return rows, baseline


def sweep_csv_text(rows: list[dict]) -> str:
    lines = [",".join(SWEEP_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in SWEEP_COLUMNS))
    return "\n".join(lines) + "\n"


def write_sweep_csv(rows: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(sweep_csv_text(rows))
