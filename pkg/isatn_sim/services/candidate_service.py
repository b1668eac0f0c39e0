import logging
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from ..models.enums import SleepMode
from ..models.orchestration import HourConfig
from ..models.simulation import EpochState
from ..utils.error_handlers import ConfigError
from .engine_service import (
    TickCache,
    _handover,
    _transport,
    build_config,
    compile_arrays,
    compile_config,
    simulate_hours,
)
from .topology_service import Topology, elevation_deg

logger = logging.getLogger(__name__)

AUTO = "auto"
HOUR_MINUTES = 60

@dataclass(frozen=True, eq=False)
class GatewayOption:
    label: str
    zone_gateway: np.ndarray

@dataclass(frozen=True, eq=False)
class BeamEntry:
    """One partial plan kept by the beam; lower `key` is better."""
    key: tuple
    path: tuple
    payload: object = None

def beam_search(root: BeamEntry, expand: Callable, horizon: int, width: int) -> BeamEntry:
    """Generic deterministic beam search.

    `expand(entry, depth)` returns child entries; the best `width` children by
    `key` survive each depth and the best complete entry is returned.
    """
    if width < 1:
        raise ValueError(f"beam width must be >= 1, got {width}")
    beam = [root]
    for depth in range(horizon):
        children = [child for entry in beam for child in expand(entry, depth)]
        if not children:
            raise ValueError(f"beam emptied at depth {depth}")
        children.sort(key=lambda e: e.key)
        beam = children[:width]
    return beam[0]

@dataclass(frozen=True, eq=False)
class Outcome:
    """Twin result of holding one candidate config for one hour."""
    index: int
    config: HourConfig
    state: EpochState
    emissions_g: float
    kwh: float
    violations: int
    served_fraction: float
    p95_ms: float

def _config_key(topology: Topology, config: HourConfig) -> tuple:
    compiled = compile_config(topology, config)
    arrays = (compiled.zone_gateway, compiled.uav_target, compiled.site_mode, compiled.service_gateway,
              compiled.zone_pin)
    return tuple(a.tobytes() for a in arrays)

def evaluate_candidates(state: EpochState, configs: list[HourConfig]) -> list[Outcome]:
    """Hold each config for one hour from `state`.

    Siblings share per-tick work through one TickCache, and configs that compile
    to the same arrays are simulated once.
    """
    cache = TickCache()
    seen = {}
    outcomes = []
    for i, config in enumerate(configs):
        key = _config_key(state.topology, config)
        if key in seen:
            first = seen[key]
            outcomes.append(replace(first, index=i, config=config, state=replace(first.state, config=config)))
            continue
        next_state, kpis = simulate_hours(state, [config], cache=cache)
        offered = sum(sum(k.offered_bits) for k in kpis)
        served = sum(k.total_served_bits for k in kpis)
        outcomes.append(Outcome(
            index=i,
            config=config,
            state=next_state,
            emissions_g=sum(k.emissions_g for k in kpis),
            kwh=sum(k.total_kwh for k in kpis),
            violations=sum(k.total_violations for k in kpis),
            served_fraction=served / offered if offered > 0 else 1.0,
            p95_ms=max(k.latency_p95_all_ms for k in kpis),
        ))
        seen[key] = outcomes[-1]
    return outcomes

def qos_key(outcome: Outcome, served_resolution: float, latency_resolution_ms: float) -> tuple:
    """Most served traffic first, then lowest p95 latency, at the configured resolutions."""
    return (
        -int(round(outcome.served_fraction / served_resolution)),
        int(round(outcome.p95_ms / latency_resolution_ms)),
        outcome.index,
    )

def significant(value: float, digits: int = 12) -> float:
    return float(f"{value:.{digits}g}")

def knob_changes(previous: Optional[tuple], current: Optional[tuple]) -> int:
    if previous is None or current is None:
        return 0
    return sum(a != b for a, b in zip(previous, current))

# ---------------------------------------------------------------- lattice axes

def gateway_options(topology: Topology) -> list[GatewayOption]:
    options = []
    for choice in topology.spec.orchestration.gateway_choices:
        if choice == "nearest":
            options.append(GatewayOption("nearest", topology.nearest_gateway))
        elif choice == "region":
            for r, region in enumerate(topology.region_ids):
                if (topology.gateway_region == r).any():
                    options.append(GatewayOption(f"region:{region}", topology.nearest_gateway_in_region(r)))
        elif choice in topology.gateway_index:
            options.append(GatewayOption(choice, np.full(topology.n_zones, topology.gateway_index[choice], dtype=int)))
        else:
            raise ConfigError(f"Unknown gateway choice '{choice}'", field="orchestration.gateway_choices")
    return options

def place_services(topology: Topology, gateway_order: list) -> Optional[np.ndarray]:
    """First-fit placement of every edge service over `gateway_order`; None when compute runs out."""
    free = topology.gateway_compute.copy()
    placement = []
    for service in topology.spec.gateways.services:
        for g in gateway_order:
            if topology.gateway_hosts_edge[g] and free[g] >= service.compute_demand - 1e-12:
                free[g] -= service.compute_demand
                placement.append(g)
                break
        else:
            return None
    return np.array(placement, dtype=int)

def edge_options(topology: Topology) -> list[tuple]:
    options = []
    for choice in topology.spec.orchestration.edge_choices:
        if choice == "region":
            for r, region in enumerate(topology.region_ids):
                placement = place_services(topology, list(np.flatnonzero(topology.gateway_region == r)))
                if placement is not None:
                    options.append((f"region:{region}", placement))
        elif choice in topology.gateway_index:
            placement = place_services(topology, [topology.gateway_index[choice]])
            if placement is not None:
                options.append((choice, placement))
        else:
            raise ConfigError(f"Unknown edge choice '{choice}'", field="orchestration.edge_choices")
    if not options:
        raise ConfigError("No edge placement fits the gateways' compute capacity", field="orchestration.edge_choices")
    return options

def eligible_uavs(state: EpochState) -> list[int]:
    """UAVs with enough charge above reserve for a full hour on station, fullest first."""
    topology = state.topology
    if not topology.n_uavs:
        return []
    capacity = topology.uavs[0].capacity_wh
    need = topology.spec.uavs.reserve_fraction * capacity + topology.uav_hover_w
    battery = state.uav.battery_wh
    ids = [i for i in range(topology.n_uavs) if battery[i] >= need - 1e-9]
    return sorted(ids, key=lambda i: (-battery[i], topology.uavs[i].id))

def _deficit(state: EpochState, zone_gateway: np.ndarray, demand_bits: np.ndarray, rain_db: dict) -> np.ndarray:
    """Hourly demand minus an all-cells-active capacity estimate, in bps."""
    topology = state.topology
    n_sites = len(topology.sites)
    compiled = compile_arrays(
        topology, zone_gateway, np.full(topology.n_uavs, -1, dtype=int), np.zeros(n_sites, dtype=int),
        np.zeros(len(topology.spec.gateways.services), dtype=int),
    )
    mask = topology.spec.constellation.min_elevation_deg
    sat_pos = topology.satellite_positions(state.t * 60.0)
    zone_sat = _handover(state.zone_satellite, compiled.zone_pin, elevation_deg(topology.zone_ground, sat_pos), mask)
    transport, _ = _transport(topology, compiled, zone_sat, sat_pos, rain_db, mask)
    demand_bps = demand_bits.sum(axis=1) / (HOUR_MINUTES * 60.0)
    return demand_bps - np.minimum(compiled.access_bps, transport)

def assign_uavs(topology: Topology, uavs: list[int], deficit: np.ndarray) -> dict:
    """Greedy: each UAV goes to the zone with the largest remaining deficit."""
    score = deficit.astype(float).copy()
    relay = topology.link_tables.uav_capacity_bps
    assignment = {}
    for i in uavs:
        z = int(np.argmax(score))
        assignment[topology.uavs[i].id] = topology.zones[z].id
        score[z] -= relay
    return assignment

def sleep_assignment(topology: Topology, level: float, zone_demand_bits: np.ndarray) -> tuple:
    """Deep-sleep the last small cells and micro-sleep the last macros of every zone."""
    small, macro = {}, {}
    for z in range(topology.n_zones):
        smalls = topology.zone_small_elements[z]
        n_small = len(smalls) if zone_demand_bits[z] <= 0 else int(np.floor(level * len(smalls) + 1e-9))
        for e in smalls[len(smalls) - n_small:]:
            small[topology.element_ids[e]] = SleepMode.DEEP_SLEEP
        macros = topology.zone_macro_elements[z]
        n_macro = int(np.floor(level / 2.0 * len(macros) + 1e-9))
        for e in macros[len(macros) - n_macro:]:
            macro[topology.element_ids[e]] = SleepMode.MICRO_SLEEP
    return small, macro

def candidate_configs(state: EpochState, demand_bits: np.ndarray, rain_db: dict) -> list[HourConfig]:
    """The discrete knob lattice for one hour: gateway x UAV level x sleep level x edge placement.

    `demand_bits` is the hour's expected zone x class demand; configs carry their lattice
    coordinates in `knobs`.
    """
    topology = state.topology
    orchestration = topology.spec.orchestration
    zone_ids = [z.id for z in topology.zones]
    gw_ids = [g.id for g in topology.gateways]
    services = [s.id for s in topology.spec.gateways.services]
    zone_demand = demand_bits.sum(axis=1)
    eligible = eligible_uavs(state)

    sleeps = [sleep_assignment(topology, level, zone_demand) for level in orchestration.sleep_levels]
    edges = edge_options(topology)

    configs = []
    for g, option in enumerate(gateway_options(topology)):
        zone_gateway = {z: gw_ids[option.zone_gateway[i]] for i, z in enumerate(zone_ids)}
        deficit = _deficit(state, option.zone_gateway, demand_bits, rain_db) if eligible else None
        for u, level in enumerate(orchestration.uav_levels):
            count = min(int(round(level * topology.spec.uavs.count)), len(eligible))
            uavs = assign_uavs(topology, eligible[:count], deficit) if count else {}
            for s, (small, macro) in enumerate(sleeps):
                for e, (_, placement) in enumerate(edges):
                    configs.append(build_config(
                        zone_gateway=zone_gateway,
                        active_uavs=uavs,
                        small_cell_sleep=small,
                        macro_power_mode=macro,
                        edge_placement={sid: gw_ids[placement[k]] for k, sid in enumerate(services)},
                        satellite_handover={},
                        knobs=(g, u, s, e),
                    ))
    return configs

def static_config(topology: Topology) -> HourConfig:
    """Fixed configuration: nearest gateways, every cell active, half the fleet in rotation."""
    gw_ids = [g.id for g in topology.gateways]
    nearest = topology.nearest_gateway
    n_rotating = int(round(topology.spec.orchestration.static_uav_fraction * topology.n_uavs))
    placement = place_services(topology, list(range(topology.n_gateways)))
    if placement is None:
        raise ConfigError("Edge services do not fit the gateways' compute capacity", field="gateways.services")
    return build_config(
        zone_gateway={z.id: gw_ids[nearest[i]] for i, z in enumerate(topology.zones)},
        active_uavs={topology.uavs[i].id: topology.zones[i % topology.n_zones].id for i in range(n_rotating)},
        small_cell_sleep={},
        macro_power_mode={},
        edge_placement={s.id: gw_ids[placement[k]] for k, s in enumerate(topology.spec.gateways.services)},
        satellite_handover={z.id: AUTO for z in topology.zones},
    )
