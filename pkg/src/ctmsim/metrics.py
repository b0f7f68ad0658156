"""Congestion metrics: cell speeds, extra traversal time and peak reduction.

The instantaneous extra traversal time of the stretch is

    delta(k) = sum_i L_i / v_i(k) - L_i / v_free_i   [converted to seconds]

with the macroscopic speed v_i = min(v_free, outflow / density). Comparing a
run against a station-free baseline gives the peak-congestion reduction
index ``pi = (peak(delta_baseline) - peak(delta)) / peak(delta_baseline)``:
1 means congestion eliminated, 0 no change, negative values a worsening.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import Topology

# Below this density a cell counts as empty and moves at free-flow speed.
EPS_RHO = 1e-6

# Cap on delta when some cell is saturated (zero speed at nonzero density);
# runs that hit it are flagged rather than reporting an infinite delay.
DELTA_CEILING_S = 3600.0


def cell_speed(rho: float, phi_out_total: float, v_free: float) -> float:
    """Macroscopic speed of one cell: outflow over density, capped at free flow."""
    if rho < 0.0:
        raise ValueError(f"negative density {rho}")
    if rho <= EPS_RHO:
        return v_free
    return min(v_free, phi_out_total / rho)


def speeds_from(rho: np.ndarray, phi_out_total: np.ndarray, topology: Topology) -> np.ndarray:
    v_free = np.array([c.v_free for c in topology.cells])
    safe_rho = np.maximum(rho, EPS_RHO)
    v = np.minimum(v_free, phi_out_total / safe_rho)
    return np.where(rho <= EPS_RHO, v_free, v)


def delta(speeds, cells, ceiling_s: float = DELTA_CEILING_S) -> float:
    """Extra traversal time of the stretch in seconds, given per-cell speeds.

    A zero speed with vehicles present would make the traversal time
    infinite; such values are capped at ``ceiling_s`` so saturated runs stay
    comparable (callers can detect the cap to flag the run).
    """
    total = 0.0
    for v, cell in zip(speeds, cells):
        if v > 0.0:
            total += cell.length_km / v - cell.length_km / cell.v_free
        else:
            return ceiling_s
    return min(total * 3600.0, ceiling_s)


def pi_index(delta_baseline, delta_variant) -> float:
    """Relative reduction of the peak delay versus the baseline series."""
    peak0 = float(np.max(delta_baseline))
    if peak0 <= 0.0:
        raise ValueError("baseline has no congestion peak; pi is undefined")
    return (peak0 - float(np.max(delta_variant))) / peak0


def free_flow_traversal_min(topology: Topology) -> float:
    """Traversal time of the empty stretch in minutes."""
    return 60.0 * math.fsum(c.length_km / c.v_free for c in topology.cells)


@dataclass
class TrajectoryMetrics:
    """Summary metrics of one simulated trajectory."""

    delta_series: np.ndarray
    delta_max: float
    ttt_free_flow: float  # minutes
    pi: float | None = None
    saturated: bool = False


def trajectory_metrics(
    rho_series: np.ndarray,
    phi_out_series: np.ndarray,
    topology: Topology,
    baseline_delta=None,
    ceiling_s: float = DELTA_CEILING_S,
) -> TrajectoryMetrics:
    """Compute the delta series of a run and, when a baseline is given, pi."""
    series = np.array(
        [
            delta(speeds_from(rho_series[k], phi_out_series[k], topology),
                  topology.cells, ceiling_s)
            for k in range(rho_series.shape[0])
        ]
    )
    delta_max = float(series.max()) if series.size else 0.0
    pi = None
    if baseline_delta is not None:
        pi = pi_index(baseline_delta, series)
    return TrajectoryMetrics(
        delta_series=series,
        delta_max=delta_max,
        ttt_free_flow=free_flow_traversal_min(topology),
        pi=pi,
        saturated=bool(series.size and series.max() >= ceiling_s),
    )
