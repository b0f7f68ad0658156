"""Discrete-time macroscopic highway traffic simulation with service stations.

The package couples the classical cell-based density dynamics of a highway
stretch with stop/dwell/re-merge dynamics of service stations, priority-based
merging under congestion, congestion metrics and scenario tooling.
"""

from .control import (
    ControlDecision,
    IntegralMeteringController,
    build_controller,
    controller_step,
)
from .dynamics import (
    FlowRecord,
    InvariantError,
    SimState,
    allocate_merge,
    cell_demand,
    cell_supply,
    priority_split,
    station_demand,
    station_update,
    step,
)
from .metrics import (
    TrajectoryMetrics,
    cell_speed,
    delta,
    free_flow_traversal_min,
    pi_index,
    speeds_from,
    trajectory_metrics,
)
from .params import (
    EPS_SPLIT,
    CellParams,
    StationParams,
    Stepwise,
    Topology,
    validate_topology,
)
from .runner import (
    RunResult,
    apply_grid_point,
    baseline_of,
    derive_baseline_document,
    run_csv_text,
    run_scenario,
    run_summary,
    sweep,
    sweep_csv_text,
    write_run_csv,
    write_sweep_csv,
)
from .scenario import (
    ControllerConfig,
    DemandProfile,
    PRESETS,
    Scenario,
    ScenarioError,
    demand_at,
    load_scenario,
    parse_scenario,
    preset_a13,
    serialize_scenario,
)

__version__ = "0.1.0"

__all__ = [
    "CellParams",
    "ControlDecision",
    "ControllerConfig",
    "DemandProfile",
    "EPS_SPLIT",
    "FlowRecord",
    "IntegralMeteringController",
    "InvariantError",
    "PRESETS",
    "RunResult",
    "Scenario",
    "ScenarioError",
    "SimState",
    "StationParams",
    "Stepwise",
    "Topology",
    "TrajectoryMetrics",
    "allocate_merge",
    "apply_grid_point",
    "baseline_of",
    "build_controller",
    "cell_demand",
    "cell_speed",
    "cell_supply",
    "controller_step",
    "delta",
    "demand_at",
    "derive_baseline_document",
    "free_flow_traversal_min",
    "load_scenario",
    "parse_scenario",
    "pi_index",
    "preset_a13",
    "priority_split",
    "run_csv_text",
    "run_scenario",
    "run_summary",
    "serialize_scenario",
    "speeds_from",
    "station_demand",
    "station_update",
    "step",
    "sweep",
    "sweep_csv_text",
    "trajectory_metrics",
    "validate_topology",
    "write_run_csv",
    "write_sweep_csv",
]
