import logging
from typing import Optional

import numpy as np

from ..models.enums import ACTION_KINDS, ActionKind, TrafficClass
from ..models.orchestration import Action
from ..models.simulation import EpochState
from .candidate_service import eligible_uavs
from .engine_service import SATELLITE_BACKHAUL
from .topology_service import ELEVATION_TOLERANCE_DEG

logger = logging.getLogger(__name__)

IDLE_UTILIZATION = 0.3
# stands in for "saturated" when a zone has demand but no capacity
SATURATED_UTILIZATION = 1e9

def zone_load(state: EpochState) -> tuple:
    """(demand bps, utilization) per zone over the last tick."""
    demand = state.last_demand_bits.sum(axis=1) / (state.spec.epoch_minutes * 60.0)
    capacity = state.last_capacity_bps
    with np.errstate(divide="ignore", invalid="ignore"):
        util = np.where(capacity > 0, demand / np.where(capacity > 0, capacity, 1.0),
                        np.where(demand > 0, SATURATED_UTILIZATION, 0.0))
    return demand, util

def _busiest(zones, util) -> Optional[int]:
    zones = list(zones)
    if not zones:
        return None
    return max(zones, key=lambda z: (util[z], -z))

def _reroute(state, demand, util) -> Optional[Action]:
    topology = state.topology
    if topology.n_gateways < 2:
        return None
    z = _busiest(np.flatnonzero(demand > 0), util)
    if z is None:
        return None
    current = topology.gateway_index[state.config.zone_gateway[topology.zones[z].id]]
    order = [g for g in np.argsort(topology.zone_gateway_km[z], kind="stable") if g != current]
    return Action(kind=ActionKind.REROUTE_ZONE_TO_GATEWAY,
                  params={"zone": topology.zones[z].id, "gateway": topology.gateways[order[0]].id})

def _activate_uav(state, demand, util) -> Optional[Action]:
    topology = state.topology
    busy = set(state.config.active_uavs)
    free = [i for i in eligible_uavs(state) if topology.uavs[i].id not in busy]
    if not free:
        return None
    deficit = demand - state.last_capacity_bps
    z = max(range(topology.n_zones), key=lambda z: (deficit[z], util[z], -z))
    return Action(kind=ActionKind.ACTIVATE_UAV,
                  params={"uav": topology.uavs[free[0]].id, "zone": topology.zones[z].id})

def _deactivate_uav(state, demand, util) -> Optional[Action]:
    topology = state.topology
    if not state.config.active_uavs:
        return None
    uav = min(state.config.active_uavs.items(), key=lambda kv: (util[topology.zone_index[kv[1]]], kv[0]))[0]
    return Action(kind=ActionKind.DEACTIVATE_UAV, params={"uav": uav})

def _sleeping_smalls(state, z) -> list:
    topology = state.topology
    return [topology.element_ids[e] for e in topology.zone_small_elements[z]
            if topology.element_ids[e] in state.config.small_cell_sleep]

def _wake(state, demand, util) -> Optional[Action]:
    topology = state.topology
    z = _busiest([z for z in range(topology.n_zones) if _sleeping_smalls(state, z)], util)
    if z is None:
        return None
    return Action(kind=ActionKind.WAKE_SMALL_CELLS, params={"zone": topology.zones[z].id})

def _sleep(state, demand, util) -> Optional[Action]:
    topology = state.topology
    awake = {z: len(topology.zone_small_elements[z]) - len(_sleeping_smalls(state, z))
             for z in range(topology.n_zones)}
    idle = [z for z in range(topology.n_zones) if util[z] < IDLE_UTILIZATION and awake[z] > 0]
    if not idle:
        return None
    z = min(idle, key=lambda z: (util[z], z))
    return Action(kind=ActionKind.SLEEP_SMALL_CELLS,
                  params={"zone": topology.zones[z].id, "count": str(max(1, awake[z] // 2))})

def _shift_edge(state, demand, util) -> Optional[Action]:
    topology = state.topology
    services = topology.spec.gateways.services
    urllc = [s for s in services if s.traffic_class == TrafficClass.URLLC]
    if not urllc:
        return None
    service = urllc[0]
    placement = state.config.edge_placement
    current = placement.get(service.id)
    used = np.zeros(topology.n_gateways)
    for s in services:
        if s.id != service.id and s.id in placement:
            used[topology.gateway_index[placement[s.id]]] += s.compute_demand
    options = [g for g in range(topology.n_gateways)
               if topology.gateway_hosts_edge[g] and topology.gateways[g].id != current
               and topology.gateway_compute[g] - used[g] >= service.compute_demand - 1e-12]
    if not options:
        return None
    intensity = state.last_intensity
    g = min(options, key=lambda g: (intensity[topology.gateway_region[g]], g))
    return Action(kind=ActionKind.SHIFT_EDGE_SERVICE,
                  params={"service": service.id, "gateway": topology.gateways[g].id})

def _steer_beam(state, demand, util) -> Optional[Action]:
    topology = state.topology
    beams = np.flatnonzero((topology.zone_backhaul == SATELLITE_BACKHAUL) & (demand > 0))
    if beams.size == 0:
        return None
    mask = topology.spec.constellation.min_elevation_deg
    elevation = topology.zone_elevations(state.t * 60.0)
    candidates = []
    for z in beams:
        best = int(np.argmax(elevation[z]))
        if elevation[z, best] < mask - ELEVATION_TOLERANCE_DEG or state.zone_satellite[z] == best:
            continue
        if state.config.satellite_handover.get(topology.zones[z].id) == topology.satellites[best].id:
            continue
        candidates.append((z, best))
    if not candidates:
        return None
    z, best = max(candidates, key=lambda c: (util[c[0]], -c[0]))
    return Action(kind=ActionKind.STEER_BEAM_TO_SATELLITE,
                  params={"zone": topology.zones[z].id, "satellite": topology.satellites[best].id})

_RESOLVERS = {
    ActionKind.REROUTE_ZONE_TO_GATEWAY: _reroute,
    ActionKind.ACTIVATE_UAV: _activate_uav,
    ActionKind.DEACTIVATE_UAV: _deactivate_uav,
    ActionKind.WAKE_SMALL_CELLS: _wake,
    ActionKind.SLEEP_SMALL_CELLS: _sleep,
    ActionKind.SHIFT_EDGE_SERVICE: _shift_edge,
    ActionKind.STEER_BEAM_TO_SATELLITE: _steer_beam,
}

def resolve_action(kind: ActionKind, state: EpochState) -> Optional[Action]:
    """Concrete parameters for an action kind in this state, or None when it does not apply."""
    if kind == ActionKind.NO_OP:
        return Action(kind=ActionKind.NO_OP)
    demand, util = zone_load(state)
    return _RESOLVERS[kind](state, demand, util)

def available_actions(state: EpochState) -> list[Optional[Action]]:
    """One entry per ACTION_KINDS position; None marks a masked action."""
    demand, util = zone_load(state)
    return [Action(kind=kind) if kind == ActionKind.NO_OP else _RESOLVERS[kind](state, demand, util)
            for kind in ACTION_KINDS]

def action_mask(state: EpochState) -> np.ndarray:
    return np.array([a is not None for a in available_actions(state)], dtype=bool)
