"""Scenario definition: JSON parsing, demand profiles and built-in presets.

A scenario document is a JSON object with these top-level keys (see
``docs/file_formats.md`` for the full schema):

    T_s, horizon_s, cells, offramp_beta, stations, priorities, demand,
    controller, name, preset, overrides

``preset`` pulls in one of the built-in documents and the remaining keys
replace its sections; ``overrides`` patches single fields by dotted path
(e.g. ``"stations.0.beta_s": 0.15``), which keeps experiment variations to
one line. Parsing either returns a fully validated Scenario or raises
ScenarioError carrying every schema and topology violation with its path.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass

import numpy as np

from .params import CellParams, StationParams, Stepwise, Topology, validate_topology


class ScenarioError(ValueError):
    """Invalid scenario document; ``errors`` lists every violation."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass(frozen=True)
class DemandProfile:
    """Upstream arrival flow over interval indices, in one of two forms.

    Closed form: ``max(floor, peak - slope * |k - k_peak|)``, a tent profile
    over a constant base. Breakpoint form: piecewise-linear interpolation
    through (k, veh/h) pairs, held constant outside their range.
    """

    floor: float | None = None
    peak: float | None = None
    slope: float | None = None
    k_peak: float | None = None
    breakpoints: tuple[tuple[float, float], ...] | None = None

    @classmethod
    def tent(cls, floor: float, peak: float, slope: float, k_peak: float) -> "DemandProfile":
        return cls(floor=float(floor), peak=float(peak), slope=float(slope), k_peak=float(k_peak))

    @classmethod
    def piecewise(cls, points) -> "DemandProfile":
        return cls(breakpoints=tuple((float(k), float(v)) for k, v in points))

    def __call__(self, k: int) -> float:
        return demand_at(self, k)


def demand_at(profile: DemandProfile, k: int) -> float:
    """Evaluate the demand profile at interval ``k``."""
    if k < 0:
        raise ValueError(f"negative interval index {k}")
    if profile.breakpoints is not None:
        ks = [p[0] for p in profile.breakpoints]
        vs = [p[1] for p in profile.breakpoints]
        return float(np.interp(k, ks, vs))
    return max(profile.floor, profile.peak - profile.slope * abs(k - profile.k_peak))


@dataclass(frozen=True)
class ControllerConfig:
    """Controller block of a scenario (see control module for the laws)."""

    type: str
    gain: float
    rho_target: float
    station: int  # 1-based index into the scenario's station list
    r_init: float | None = None


@dataclass
class Scenario:
    """A validated, runnable experiment description."""

    name: str
    T_s: float
    horizon_s: float
    topology: Topology
    demand: DemandProfile
    controller: ControllerConfig | None = None

    @property
    def horizon_intervals(self) -> int:
        return int(round(self.horizon_s / self.T_s))


# --- Built-in presets ------------------------------------------------------

# Nine-cell calibration of a Dutch A13 stretch: (L_km, v_free, w, q_max, rho_max).
A13_CELL_TABLE = (
    (0.5, 114.0, 32.7, 2511.0, 97.1),
    (0.5, 114.0, 29.6, 2472.0, 105.7),
    (0.5, 114.0, 31.3, 2338.0, 95.1),
    (0.5, 114.0, 26.7, 2310.0, 106.7),
    (0.5, 113.0, 27.8, 2337.0, 104.8),
    (0.36, 112.0, 26.2, 2343.0, 110.2),
    (0.37, 111.0, 20.0, 2136.0, 126.0),
    (0.41, 109.0, 26.4, 2317.0, 108.9),
    (0.39, 103.0, 20.9, 2111.0, 121.6),
)

# Morning-rush arrival profile: 500 veh/h base ramping to 2400 veh/h at k=540.
A13_DEMAND = {"floor": 500, "peak": 2400, "slope": 7.04, "k_peak": 540}

# Exit-ramp capacity of the A13 station presets. The calibration anchor is the
# single-station experiment (beta_s=0.15, 5 min dwell): a ramp around this size
# reproduces the reported peak-congestion reduction of ~0.64; values far above
# let the backlog flood back during the rush, far below it never returns.
A13_RAMP_CAP = 220.0


def _a13_cells_json() -> list[dict]:
    return [
        {"L_km": L, "v_free": v, "w": w, "q_max": q, "rho_max": r}
        for L, v, w, q, r in A13_CELL_TABLE
    ]


def _preset_documents() -> dict[str, dict]:
    base = {
        "name": "a13",
        "T_s": 10,
        "horizon_s": 10800,
        "cells": _a13_cells_json(),
        "offramp_beta": [0] * 9,
        "stations": [],
        "priorities": {},
        "demand": dict(A13_DEMAND),
    }
    single = copy.deepcopy(base)
    single["name"] = "a13-single-station"
    single["stations"] = [
        {"entry": 2, "exit": 4, "delta_min": 5, "r_s_max": A13_RAMP_CAP, "beta_s": 0.15}
    ]
    single["priorities"] = {"4": {"ms": 0.97, "stations": [0.03]}}
    multi = copy.deepcopy(base)
    multi["name"] = "a13-multi-purpose"
    # One physical station offering three services: the three virtual stations
    # share the exit ramp, so their caps split A13_RAMP_CAP by service share.
    multi["stations"] = [
        {"entry": 2, "exit": 4, "delta_min": 5, "r_s_max": 0.45 * A13_RAMP_CAP, "beta_s": 0.0225},
        {"entry": 2, "exit": 4, "delta_min": 15, "r_s_max": 0.45 * A13_RAMP_CAP, "beta_s": 0.0225},
        {"entry": 2, "exit": 4, "delta_min": 30, "r_s_max": 0.10 * A13_RAMP_CAP, "beta_s": 0.005},
    ]
    multi["priorities"] = {"4": {"ms": 0.97, "stations": [0.01, 0.01, 0.01]}}
    return {"a13": base, "a13-single-station": single, "a13-multi-purpose": multi}


PRESETS = _preset_documents()


def preset_a13(T_s: float = 10.0) -> Topology:
    """The nine-cell A13 stretch with no stations and no ramps."""
    cells = tuple(CellParams(*row) for row in A13_CELL_TABLE)
    return Topology(T_hours=T_s / 3600.0, cells=cells)


# --- Document expansion (presets + dotted-path overrides) ------------------


def _set_dotted(doc, path: str, value, errors: list[str]) -> None:
    target = doc
    parts = path.split(".")
    try:
        for part in parts[:-1]:
            target = target[int(part)] if isinstance(target, list) else target[part]
        last = parts[-1]
        if isinstance(target, list):
            target[int(last)] = value
        else:
            target[last] = value
    except (KeyError, IndexError, TypeError, ValueError):
        errors.append(f"overrides['{path}']: path does not exist in the document")


def expand_document(doc: dict, errors: list[str]) -> dict:
    """Resolve ``preset`` and apply ``overrides``, returning a plain document."""
    overrides = doc.get("overrides") or {}
    if not isinstance(overrides, dict):
        errors.append("overrides: must be an object of dotted-path -> value")
        overrides = {}
    if "preset" in doc:
        name = doc["preset"]
        if name not in PRESETS:
            errors.append(f"preset: unknown preset '{name}' (have: {', '.join(sorted(PRESETS))})")
            return {}
        base = copy.deepcopy(PRESETS[name])
        for key, val in doc.items():
            if key not in ("preset", "overrides"):
                base[key] = copy.deepcopy(val)
    else:
        base = copy.deepcopy({k: v for k, v in doc.items() if k != "overrides"})
    for path, value in overrides.items():
        _set_dotted(base, path, value, errors)
    return base


# --- Parsing ----------------------------------------------------------------

_TOP_KEYS = {"name", "T_s", "horizon_s", "cells", "offramp_beta", "stations",
             "priorities", "demand", "controller"}
_CELL_KEYS = {"L_km", "v_free", "w", "q_max", "rho_max"}
_STATION_KEYS = {"entry", "exit", "delta_min", "r_s_max", "beta_s"}
_CONTROLLER_KEYS = {"type", "K", "rho_target", "station", "r_init"}


def _number(obj: dict, key: str, path: str, errors: list[str]) -> float | None:
    if key not in obj:
        errors.append(f"{path}: missing required key '{key}'")
        return None
    v = obj[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        errors.append(f"{path}.{key}: expected a number, got {type(v).__name__}")
        return None
    return float(v)


def _schedule(raw, path: str, errors: list[str]) -> Stepwise | None:
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return Stepwise.constant(float(raw))
    if isinstance(raw, list):
        points = []
        for idx, pair in enumerate(raw):
            if (not isinstance(pair, list)) or len(pair) != 2:
                errors.append(f"{path}[{idx}]: expected a [k, value] pair")
                return None
            k, v = pair
            if not isinstance(k, int) or isinstance(k, bool) or k < 0:
                errors.append(f"{path}[{idx}]: k must be a nonnegative integer")
                return None
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                errors.append(f"{path}[{idx}]: value must be a number")
                return None
            points.append((k, float(v)))
        if not points:
            errors.append(f"{path}: schedule needs at least one [k, value] pair")
            return None
        return Stepwise(tuple(points))
    errors.append(f"{path}: expected a number or a list of [k, value] pairs")
    return None


def _parse_demand(raw, errors: list[str]) -> DemandProfile | None:
    if not isinstance(raw, dict):
        errors.append("demand: expected an object")
        return None
    if "breakpoints" in raw:
        unknown = set(raw) - {"breakpoints"}
        if unknown:
            errors.append(f"demand: unknown keys {sorted(unknown)} beside 'breakpoints'")
        pts = raw["breakpoints"]
        if not isinstance(pts, list) or not pts:
            errors.append("demand.breakpoints: expected a nonempty list of [k, veh/h] pairs")
            return None
        out = []
        for idx, pair in enumerate(pts):
            if not isinstance(pair, list) or len(pair) != 2:
                errors.append(f"demand.breakpoints[{idx}]: expected a [k, veh/h] pair")
                return None
            k, v = pair
            if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in (k, v)):
                errors.append(f"demand.breakpoints[{idx}]: entries must be numbers")
                return None
            if v < 0:
                errors.append(f"demand.breakpoints[{idx}]: flow must be >= 0 (got {v})")
            out.append((float(k), float(v)))
        if any(b[0] <= a[0] for a, b in zip(out, out[1:])):
            errors.append("demand.breakpoints: k values must be strictly increasing")
        return DemandProfile.piecewise(out)
    unknown = set(raw) - {"floor", "peak", "slope", "k_peak"}
    if unknown:
        errors.append(f"demand: unknown keys {sorted(unknown)}")
    vals = {key: _number(raw, key, "demand", errors) for key in ("floor", "peak", "slope", "k_peak")}
    if any(x is None for x in vals.values()):
        return None
    bad = [key for key in ("floor", "peak", "slope") if vals[key] < 0]
    if bad or vals["k_peak"] < 0:
        errors.append(f"demand: floor/peak/slope/k_peak must be >= 0")
        return None
    return DemandProfile.tent(vals["floor"], vals["peak"], vals["slope"], vals["k_peak"])


def _parse_controller(raw, n_stations: int, errors: list[str]) -> ControllerConfig | None:
    if not isinstance(raw, dict):
        errors.append("controller: expected an object")
        return None
    unknown = set(raw) - _CONTROLLER_KEYS
    if unknown:
        errors.append(f"controller: unknown keys {sorted(unknown)}")
    ctype = raw.get("type")
    if ctype != "integral_metering":
        errors.append(f"controller.type: unknown type {ctype!r} (supported: 'integral_metering')")
        return None
    gain = _number(raw, "K", "controller", errors)
    rho_target = _number(raw, "rho_target", "controller", errors)
    station = raw.get("station")
    if not isinstance(station, int) or isinstance(station, bool) or not (1 <= station <= n_stations):
        errors.append(
            f"controller.station: must be a station number in 1..{n_stations} (got {station!r})"
        )
        return None
    r_init = None
    if raw.get("r_init") is not None:
        r_init = _number(raw, "r_init", "controller", errors)
        if r_init is not None and r_init < 0:
            errors.append("controller.r_init: must be >= 0")
    if gain is None or rho_target is None:
        return None
    return ControllerConfig(type=ctype, gain=gain, rho_target=rho_target,
                            station=station, r_init=r_init)


def parse_scenario(document: str | dict) -> Scenario:
    """Parse and validate a scenario document (JSON text or decoded object).

    Raises ScenarioError listing every schema error and topology violation,
    each pointing at the offending path.
    """
    errors: list[str] = []
    if isinstance(document, str):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ScenarioError([f"document: invalid JSON ({exc})"]) from exc
    else:
        doc = document
    if not isinstance(doc, dict):
        raise ScenarioError(["document: top level must be a JSON object"])

    doc = expand_document(doc, errors)
    if errors:
        raise ScenarioError(errors)

    unknown = set(doc) - _TOP_KEYS
    if unknown:
        errors.append(f"document: unknown keys {sorted(unknown)}")

    name = doc.get("name", "scenario")
    if not isinstance(name, str):
        errors.append("name: expected a string")
        name = "scenario"

    T_s = _number(doc, "T_s", "document", errors)
    horizon_s = _number(doc, "horizon_s", "document", errors)
    if T_s is not None and T_s <= 0:
        errors.append(f"T_s: must be > 0 (got {T_s})")
        T_s = None
    if horizon_s is not None and T_s is not None and horizon_s < T_s:
        errors.append(f"horizon_s: must cover at least one interval of T_s={T_s}")

    cells: list[CellParams] = []
    raw_cells = doc.get("cells")
    if not isinstance(raw_cells, list) or not raw_cells:
        errors.append("cells: expected a nonempty list of cell objects")
    else:
        for idx, raw in enumerate(raw_cells):
            path = f"cells[{idx}]"
            if not isinstance(raw, dict):
                errors.append(f"{path}: expected an object")
                continue
            extra = set(raw) - _CELL_KEYS
            if extra:
                errors.append(f"{path}: unknown keys {sorted(extra)}")
            vals = {key: _number(raw, key, path, errors) for key in
                    ("L_km", "v_free", "w", "q_max", "rho_max")}
            if all(x is not None for x in vals.values()):
                cells.append(CellParams(vals["L_km"], vals["v_free"], vals["w"],
                                        vals["q_max"], vals["rho_max"]))

    stations: list[StationParams] = []
    raw_stations = doc.get("stations", [])
    if not isinstance(raw_stations, list):
        errors.append("stations: expected a list")
        raw_stations = []
    for idx, raw in enumerate(raw_stations):
        path = f"stations[{idx}]"
        if not isinstance(raw, dict):
            errors.append(f"{path}: expected an object")
            continue
        extra = set(raw) - _STATION_KEYS
        if extra:
            errors.append(f"{path}: unknown keys {sorted(extra)}")
        entry = raw.get("entry")
        exit_ = raw.get("exit")
        for key, val in (("entry", entry), ("exit", exit_)):
            if not isinstance(val, int) or isinstance(val, bool):
                errors.append(f"{path}.{key}: expected an integer cell number")
        delta_min = _number(raw, "delta_min", path, errors)
        r_s_max = _number(raw, "r_s_max", path, errors)
        beta = _schedule(raw.get("beta_s"), f"{path}.beta_s", errors) \
            if "beta_s" in raw else None
        if beta is None and "beta_s" not in raw:
            errors.append(f"{path}: missing required key 'beta_s'")
        if delta_min is not None and delta_min <= 0:
            errors.append(f"{path}.delta_min: must be > 0 (got {delta_min})")
            delta_min = None
        if None in (delta_min, r_s_max, beta) or not isinstance(entry, int) \
                or not isinstance(exit_, int) or T_s is None:
            continue
        dwell = max(1, int(round(delta_min * 60.0 / T_s)))
        stations.append(StationParams(entry_cell=entry, exit_cell=exit_,
                                      dwell_intervals=dwell, r_s_max=r_s_max, beta_s=beta))

    offramp: list[Stepwise] = []
    raw_off = doc.get("offramp_beta")
    if raw_off is not None:
        if not isinstance(raw_off, list):
            errors.append("offramp_beta: expected a list with one schedule per cell")
        else:
            if raw_cells and len(raw_off) != len(raw_cells):
                errors.append(
                    f"offramp_beta: {len(raw_off)} entries for {len(raw_cells)} cells"
                )
            for idx, raw in enumerate(raw_off):
                sched = _schedule(raw, f"offramp_beta[{idx}]", errors)
                if sched is not None:
                    offramp.append(sched)

    priorities: dict[int, tuple[float, ...]] = {}
    raw_prio = doc.get("priorities", {})
    if not isinstance(raw_prio, dict):
        errors.append("priorities: expected an object keyed by cell number")
        raw_prio = {}
    for key, raw in raw_prio.items():
        path = f"priorities[{key!r}]"
        try:
            cell1 = int(key)
        except (TypeError, ValueError):
            errors.append(f"{path}: key must be a cell number")
            continue
        if not isinstance(raw, dict) or set(raw) - {"ms", "stations"}:
            errors.append(f"{path}: expected an object with keys 'ms' and 'stations'")
            continue
        ms = _number(raw, "ms", path, errors)
        st = raw.get("stations")
        if not isinstance(st, list) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in st
        ):
            errors.append(f"{path}.stations: expected a list of numbers")
            continue
        if ms is None:
            continue
        priorities[cell1] = (ms, *[float(x) for x in st])

    demand = _parse_demand(doc.get("demand"), errors) if "demand" in doc else None
    if "demand" not in doc:
        errors.append("document: missing required key 'demand'")

    controller = None
    if doc.get("controller") is not None:
        controller = _parse_controller(doc["controller"], len(raw_stations), errors)

    if errors:
        raise ScenarioError(errors)

    topology = Topology(
        T_hours=T_s / 3600.0,
        cells=tuple(cells),
        stations=tuple(stations),
        beta_offramp=tuple(offramp),
        priorities=priorities,
    )
    errors.extend(validate_topology(topology))
    if errors:
        raise ScenarioError(errors)

    return Scenario(name=name, T_s=T_s, horizon_s=horizon_s, topology=topology,
                    demand=demand, controller=controller)


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read())


# --- Serialization ----------------------------------------------------------


def _schedule_to_json(sched: Stepwise):
    if len(sched.points) == 1:
        return sched.points[0][1]
    return [[k, v] for k, v in sched.points]


def serialize_scenario(scenario: Scenario) -> dict:
    """Emit the canonical document for a Scenario.

    Presets and overrides are expanded away; parsing the result yields a
    Scenario equal to the input (round-trip identity).
    """
    topo = scenario.topology
    doc: dict = {
        "name": scenario.name,
        "T_s": scenario.T_s,
        "horizon_s": scenario.horizon_s,
        "cells": [
            {"L_km": c.length_km, "v_free": c.v_free, "w": c.w_congestion,
             "q_max": c.q_max, "rho_max": c.rho_max}
            for c in topo.cells
        ],
        "offramp_beta": [_schedule_to_json(s) for s in topo.beta_offramp],
        "stations": [
            {"entry": st.entry_cell, "exit": st.exit_cell,
             "delta_min": st.dwell_intervals * scenario.T_s / 60.0,
             "r_s_max": st.r_s_max, "beta_s": _schedule_to_json(st.beta_s)}
            for st in topo.stations
        ],
        "priorities": {
            str(cell): {"ms": vec[0], "stations": list(vec[1:])}
            for cell, vec in sorted(topo.priorities.items())
        },
    }
    d = scenario.demand
    if d.breakpoints is not None:
        doc["demand"] = {"breakpoints": [[k, v] for k, v in d.breakpoints]}
    else:
        doc["demand"] = {"floor": d.floor, "peak": d.peak, "slope": d.slope,
                         "k_peak": d.k_peak}
    if scenario.controller is not None:
        c = scenario.controller
        doc["controller"] = {"type": c.type, "K": c.gain, "rho_target": c.rho_target,
                             "station": c.station}
        if c.r_init is not None:
            doc["controller"]["r_init"] = c.r_init
    return doc
