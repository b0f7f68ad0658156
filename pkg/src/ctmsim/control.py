"""Per-interval controllers that cap the flow re-merging from stations.

A controller is a deterministic state machine advanced in lockstep with the
simulation: before interval k it emits a cap on each station's ramp demand,
after interval k it observes the densities of that interval. The built-in
law is integral metering on the exit cell's density,

    r(k+1) = clamp(r(k) + K * (rho_target - rho_exit(k)), 0, r_s_max),

which winds the cap down while the exit cell runs denser than its target and
releases it again once the density recovers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import Topology
from .scenario import ControllerConfig


@dataclass(frozen=True)
class ControlDecision:
    """Ramp caps for the coming interval; infinity leaves a station free."""

    caps: tuple[float, ...]


class IntegralMeteringController:
    """Integral metering of a single station's re-merge flow."""

    def __init__(self, config: ControllerConfig, topology: Topology):
        if not (1 <= config.station <= topology.n_stations):
            raise ValueError(f"controller station {config.station} out of range")
        self._gain = config.gain
        self._rho_target = config.rho_target
        self._station0 = config.station - 1
        st = topology.stations[self._station0]
        self._exit0 = st.exit_cell - 1
        self._r_max = st.r_s_max
        self._r = st.r_s_max if config.r_init is None else min(config.r_init, st.r_s_max)
        self._n_stations = topology.n_stations

    def decide(self) -> ControlDecision:
        caps = [float("inf")] * self._n_stations
        caps[self._station0] = self._r
        return ControlDecision(tuple(caps))

    def observe(self, rho: np.ndarray) -> None:
        raw = self._r + self._gain * (self._rho_target - float(rho[self._exit0]))
        self._r = min(max(raw, 0.0), self._r_max)


def controller_step(controller: IntegralMeteringController, rho: np.ndarray) -> ControlDecision:
    """Decision for the current interval, then advance on its densities."""
    decision = controller.decide()
    controller.observe(rho)
    return decision


def build_controller(
    config: ControllerConfig | None, topology: Topology
) -> IntegralMeteringController | None:
    if config is None:
        return None
    if config.type != "integral_metering":
        raise ValueError(f"unknown controller type {config.type!r}")
    return IntegralMeteringController(config, topology)
