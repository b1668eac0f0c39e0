"""Discrete-time network engine shared by the simulator and the digital twin.

Both the main run and every twin evaluation advance state through `step`, so
a twin fed the realized inputs reproduces the run exactly.
"""
import logging
from dataclasses import dataclass, replace
from typing import Optional, Protocol

import numpy as np

from ..models.energy import EnergyLedger
from ..models.enums import (
    LAYERS,
    MODE_CODES,
    TRAFFIC_CLASSES,
    ActionKind,
    Band,
    PathEnv,
    SleepMode,
    TrafficClass,
    UavMode,
)
from ..models.orchestration import Action, HourConfig
from ..models.simulation import EpochState, KpiRecord, TickInputs, UavFleetState
from ..utils.error_handlers import ConfigError, InvalidParameter
from .energy_service import emissions_for, step_energy
from .link_service import band_capacity_bps, path_loss_db, propagation_latency_ms, queueing_delay_ms
from .topology_service import ELEVATION_TOLERANCE_DEG, Topology, elevation_deg, slant_range_km

logger = logging.getLogger(__name__)

# Service order inside a tick: URLLC first, then eMBB, then mIoT
PRIORITY = [TRAFFIC_CLASSES.index(TrafficClass.URLLC), TRAFFIC_CLASSES.index(TrafficClass.EMBB),
            TRAFFIC_CLASSES.index(TrafficClass.MIOT)]
SATELLITE_BACKHAUL = 2
MICROWAVE_BACKHAUL = 1

ACTIVE = MODE_CODES[SleepMode.ACTIVE]
MICRO = MODE_CODES[SleepMode.MICRO_SLEEP]
DEEP = MODE_CODES[SleepMode.DEEP_SLEEP]
OFF = MODE_CODES[SleepMode.OFF]
HOVER = MODE_CODES[UavMode.HOVER]
CRUISE = MODE_CODES[UavMode.CRUISE]
STANDBY = MODE_CODES[UavMode.STANDBY]
GROUNDED = MODE_CODES[UavMode.GROUNDED]

class InputSource(Protocol):
    """Exogenous inputs for a tick starting at `t` minutes and lasting `minutes`."""

    def inputs_at(self, t: int, minutes: int) -> TickInputs:
        ...

class TickController(Protocol):
    def decide(self, state: EpochState) -> Optional[Action]:
        ...

    def observe(self, state: EpochState, action: Optional[Action], kpi: KpiRecord, next_state: EpochState) -> None:
        ...

@dataclass(frozen=True, eq=False)
class CompiledConfig:
    zone_gateway: np.ndarray
    uav_target: np.ndarray
    site_mode: np.ndarray
    service_gateway: np.ndarray
    zone_pin: np.ndarray
    access_bps: np.ndarray

class TickCache:
    """Tick results shared by sibling evaluations that start from one state.

    Every key carries all the inputs of its entry, so a hit returns exactly what
    a fresh computation would.
    """

    def __init__(self):
        self._entries = {}

    def get(self, key, compute):
        if key not in self._entries:
            self._entries[key] = compute()
        return self._entries[key]

def _shared(cache: Optional[TickCache], key: tuple, compute):
    return compute() if cache is None else cache.get(key, compute)

def _fleet_key(fleet: UavFleetState) -> tuple:
    arrays = (fleet.battery_wh, fleet.airborne, fleet.returning, fleet.transit_left_min, fleet.swap_end_min,
              fleet.airborne_min, fleet.mode_codes, fleet.pad_busy_until)
    return tuple(a.tobytes() for a in arrays) + (fleet.swaps,)

def build_config(**fields) -> HourConfig:
    """New HourConfig without validation; the compiled cache starts empty."""
    return HourConfig.construct(**fields)

def derive_config(config: HourConfig, **updates) -> HourConfig:
    fields = {
        "zone_gateway": config.zone_gateway,
        "active_uavs": config.active_uavs,
        "small_cell_sleep": config.small_cell_sleep,
        "macro_power_mode": config.macro_power_mode,
        "edge_placement": config.edge_placement,
        "satellite_handover": config.satellite_handover,
        "knobs": None,
    }
    fields.update(updates)
    return build_config(**fields)

def compile_arrays(topology: Topology, zone_gateway: np.ndarray, uav_target: np.ndarray, site_mode: np.ndarray,
                   service_gateway: np.ndarray, zone_pin: Optional[np.ndarray] = None) -> CompiledConfig:
    if zone_pin is None:
        zone_pin = np.full(topology.n_zones, -1, dtype=int)
    active_capacity = topology.link_tables.site_capacity_bps * (site_mode == ACTIVE)
    access = np.bincount(topology.site_zone, weights=active_capacity, minlength=topology.n_zones)
    return CompiledConfig(zone_gateway, uav_target, site_mode, service_gateway, zone_pin, access)

def compile_config(topology: Topology, config: HourConfig) -> CompiledConfig:
    """Array form of an HourConfig, cached on the config."""
    if config._compiled is not None:
        return config._compiled
    try:
        zone_gateway = np.array([topology.gateway_index[config.zone_gateway[z.id]] for z in topology.zones], dtype=int)
        uav_target = np.full(topology.n_uavs, -1, dtype=int)
        for uav_id, zone_id in config.active_uavs.items():
            uav_target[topology.uav_index[uav_id]] = topology.zone_index[zone_id]
        site_mode = np.zeros(len(topology.sites), dtype=int)
        for site_id, mode in config.small_cell_sleep.items():
            site_mode[topology.site_index[site_id]] = MODE_CODES[SleepMode(mode)]
        for site_id, mode in config.macro_power_mode.items():
            site_mode[topology.site_index[site_id]] = MODE_CODES[SleepMode(mode)]
        default_edge = int(np.flatnonzero(topology.gateway_hosts_edge)[0]) if topology.gateway_hosts_edge.any() else 0
        service_gateway = np.array([
            topology.gateway_index[config.edge_placement[s.id]] if s.id in config.edge_placement else default_edge
            for s in topology.spec.gateways.services
        ], dtype=int)
        zone_pin = np.full(topology.n_zones, -1, dtype=int)
        for zone_id, sat_id in config.satellite_handover.items():
            if sat_id != "auto":
                zone_pin[topology.zone_index[zone_id]] = topology.satellite_index[sat_id]
    except KeyError as e:
        raise ConfigError(f"Hour configuration references unknown entity {e}", field=str(e))

    compiled = compile_arrays(topology, zone_gateway, uav_target, site_mode, service_gateway, zone_pin)
    config._compiled = compiled
    return compiled

def initial_fleet(topology: Topology) -> UavFleetState:
    n = topology.n_uavs
    capacity = topology.uavs[0].capacity_wh if n else 0.0
    return UavFleetState(
        battery_wh=np.full(n, capacity),
        airborne=np.zeros(n, dtype=bool),
        returning=np.zeros(n, dtype=bool),
        transit_left_min=np.zeros(n),
        swap_end_min=np.zeros(n),
        airborne_min=np.zeros(n),
        mode_codes=np.full(n, GROUNDED, dtype=int),
        pad_busy_until=np.zeros(len(topology.spec.uavs.swap_pads)),
    )

def initial_state(topology: Topology, source: InputSource, config: HourConfig, t: int = 0) -> EpochState:
    return EpochState(
        t=t,
        spec=topology.spec,
        topology=topology,
        source=source,
        config=config,
        uav=initial_fleet(topology),
        zone_satellite=np.full(topology.n_zones, -1, dtype=int),
        element_modes=np.zeros(topology.n_elements, dtype=int),
        element_power_w=np.zeros(topology.n_elements),
        element_region=topology.element_static_region.copy(),
        last_demand_bits=np.zeros((topology.n_zones, len(TRAFFIC_CLASSES))),
        last_served_bits=np.zeros((topology.n_zones, len(TRAFFIC_CLASSES))),
        last_capacity_bps=np.zeros(topology.n_zones),
        last_p95_ms=0.0,
        last_intensity=np.zeros(topology.n_regions),
        rain_active=False,
        ledger=EnergyLedger.empty(len(LAYERS), topology.n_regions, epoch=t),
    )

def apply_config(state: EpochState, config: HourConfig) -> EpochState:
    return replace(state, config=config)

def apply_action(state: EpochState, action: Action) -> EpochState:
    """Realise one corrective action as a change of the active HourConfig."""
    topology = state.topology
    config = state.config
    p = action.params
    kind = action.kind
    try:
        if kind == ActionKind.NO_OP:
            return state
        if kind == ActionKind.REROUTE_ZONE_TO_GATEWAY:
            topology.gateway_index[p["gateway"]]
            updated = derive_config(config, zone_gateway={**config.zone_gateway, p["zone"]: p["gateway"]})
        elif kind == ActionKind.ACTIVATE_UAV:
            topology.uav_index[p["uav"]]
            topology.zone_index[p["zone"]]
            updated = derive_config(config, active_uavs={**config.active_uavs, p["uav"]: p["zone"]})
        elif kind == ActionKind.DEACTIVATE_UAV:
            updated = derive_config(config, active_uavs={k: v for k, v in config.active_uavs.items() if k != p["uav"]})
        elif kind == ActionKind.WAKE_SMALL_CELLS:
            z = topology.zone_index[p["zone"]]
            zone_sites = {topology.element_ids[e] for e in topology.zone_small_elements[z]}
            updated = derive_config(config, small_cell_sleep={
                k: v for k, v in config.small_cell_sleep.items() if k not in zone_sites
            })
        elif kind == ActionKind.SLEEP_SMALL_CELLS:
            z = topology.zone_index[p["zone"]]
            count = int(p.get("count", "1"))
            awake = [topology.element_ids[e] for e in topology.zone_small_elements[z]
                     if topology.element_ids[e] not in config.small_cell_sleep]
            newly = {site: SleepMode.DEEP_SLEEP for site in awake[len(awake) - count:]} if count > 0 else {}
            updated = derive_config(config, small_cell_sleep={**config.small_cell_sleep, **newly})
        elif kind == ActionKind.SHIFT_EDGE_SERVICE:
            topology.service_index[p["service"]]
            topology.gateway_index[p["gateway"]]
            updated = derive_config(config, edge_placement={**config.edge_placement, p["service"]: p["gateway"]})
        elif kind == ActionKind.STEER_BEAM_TO_SATELLITE:
            topology.zone_index[p["zone"]]
            topology.satellite_index[p["satellite"]]
            updated = derive_config(config, satellite_handover={**config.satellite_handover, p["zone"]: p["satellite"]})
        else:
            raise InvalidParameter(f"Unknown action kind {kind}", field="kind")
    except KeyError as e:
        raise InvalidParameter(f"Action {kind.value} references unknown entity {e}", field=str(e))
    return replace(state, config=updated)

# ---------------------------------------------------------------- UAV fleet

def _land(i: int, now: float, fleet: dict, topology: Topology) -> int:
    """Touch down and queue for a battery swap at the home pad."""
    fleet["airborne"][i] = False
    fleet["returning"][i] = False
    fleet["transit"][i] = 0.0
    pad = topology.uav_home_pad[i]
    start = max(now, fleet["pad_busy"][pad])
    fleet["swap_end"][i] = start + topology.spec.uavs.swap_minutes
    fleet["pad_busy"][pad] = fleet["swap_end"][i]
    return 1

def advance_uavs(topology: Topology, fleet: UavFleetState, target: np.ndarray, t: int, minutes: int):
    """Event-accurate UAV timeline over [t, t + minutes).

    Returns the new fleet, energy drawn per UAV (Wh) and minutes spent hovering on station.
    """
    n = topology.n_uavs
    uavs = topology.spec.uavs
    if n == 0:
        return fleet, np.zeros(0), np.zeros(0)

    capacity = topology.uavs[0].capacity_wh
    reserve = uavs.reserve_fraction * capacity
    hover_w, cruise_w, standby_w = topology.uav_hover_w, topology.uav_cruise_w, topology.uav_standby_w
    endurance_min = uavs.endurance_h * 60.0

    state = {
        "battery": fleet.battery_wh.copy(),
        "airborne": fleet.airborne.copy(),
        "returning": fleet.returning.copy(),
        "transit": fleet.transit_left_min.copy(),
        "swap_end": fleet.swap_end_min.copy(),
        "airborne_min": fleet.airborne_min.copy(),
        "pad_busy": fleet.pad_busy_until.copy(),
    }
    battery = state["battery"]
    energy = np.zeros(n)
    hover = np.zeros(n)
    modes = fleet.mode_codes.copy()
    swaps = fleet.swaps
    end = float(t + minutes)
    eps = 1e-9

    for i in range(n):
        now = float(t)
        tgt = target[i]
        while now < end - eps:
            if state["swap_end"][i] > now + eps:
                dt = min(end, state["swap_end"][i]) - now
                energy[i] += standby_w * dt / 60.0
                now += dt
                modes[i] = STANDBY
                if state["swap_end"][i] <= now + eps:
                    battery[i] = capacity
                    state["swap_end"][i] = 0.0
                continue

            if not state["airborne"][i]:
                if tgt >= 0 and battery[i] > reserve + eps:
                    state["airborne"][i] = True
                    state["returning"][i] = False
                    state["transit"][i] = uavs.transit_minutes
                    state["airborne_min"][i] = 0.0
                    continue
                if battery[i] < capacity - eps:
                    swaps += _land(i, now, state, topology)
                    continue
                modes[i] = GROUNDED
                now = end
                continue

            if state["transit"][i] > eps:
                dt = min(end - now, state["transit"][i])
                draw = cruise_w * dt / 60.0
                energy[i] += draw
                battery[i] -= draw
                state["transit"][i] -= dt
                state["airborne_min"][i] += dt
                now += dt
                modes[i] = CRUISE
                if state["transit"][i] <= eps and state["returning"][i]:
                    swaps += _land(i, now, state, topology)
                continue

            if tgt < 0 or battery[i] <= reserve + eps:
                state["returning"][i] = True
                state["transit"][i] = uavs.transit_minutes
                if uavs.transit_minutes <= 0:
                    swaps += _land(i, now, state, topology)
                continue

            dt = min(end - now, (battery[i] - reserve) / hover_w * 60.0)
            draw = hover_w * dt / 60.0
            energy[i] += draw
            battery[i] -= draw
            hover[i] += dt
            state["airborne_min"][i] += dt
            now += dt
            modes[i] = HOVER

        assert state["airborne_min"][i] <= endurance_min + 1e-6, f"UAV {topology.uavs[i].id} exceeded its endurance"
        assert battery[i] >= -1e-6, f"UAV {topology.uavs[i].id} battery went negative"

    new_fleet = UavFleetState(
        battery_wh=np.clip(battery, 0.0, capacity),
        airborne=state["airborne"],
        returning=state["returning"],
        transit_left_min=state["transit"],
        swap_end_min=state["swap_end"],
        airborne_min=state["airborne_min"],
        mode_codes=modes,
        pad_busy_until=state["pad_busy"],
        swaps=swaps,
    )
    return new_fleet, energy, hover

# ---------------------------------------------------------------- tick

def _handover(current: np.ndarray, pin: np.ndarray, elevation: np.ndarray, mask_deg: float) -> np.ndarray:
    """Pinned satellite if visible, else keep the current one while visible, else the best one."""
    visible = elevation >= mask_deg - ELEVATION_TOLERANCE_DEG
    rows = np.arange(elevation.shape[0])
    best = np.argmax(elevation, axis=1)
    best_ok = visible[rows, best]
    keep = (current >= 0) & visible[rows, np.maximum(current, 0)]
    pinned = (pin >= 0) & visible[rows, np.maximum(pin, 0)]
    return np.where(pinned, pin, np.where(keep, current, np.where(best_ok, best, -1)))

def _transport(topology: Topology, compiled: CompiledConfig, zone_sat: np.ndarray, sat_pos: np.ndarray,
               rain_db: dict, mask_deg: float):
    """Backhaul capacity (bps) and one-way latency (ms) from each zone to its serving gateway."""
    links = topology.spec.links
    tables = topology.link_tables
    rows = np.arange(topology.n_zones)
    gw = compiled.zone_gateway
    backhaul = topology.zone_backhaul

    capacity = np.full(topology.n_zones, links.fiber_capacity_bps)
    latency = tables.zone_gateway_latency_ms[rows, gw].copy()

    microwave = backhaul == MICROWAVE_BACKHAUL
    if microwave.any():
        capacity[microwave] = band_capacity_bps(
            links.microwave, tables.microwave_path_loss_db[rows[microwave], gw[microwave]],
            rain_db.get(Band.MICROWAVE_BACKHAUL, 0.0),
        )

    satellite = backhaul == SATELLITE_BACKHAUL
    if satellite.any():
        zs = rows[satellite]
        sats = zone_sat[zs]
        served = sats >= 0
        cap = np.zeros(zs.size)
        lat = np.full(zs.size, links.saturation_latency_ms)
        if served.any():
            s = sats[served]
            up_km = slant_range_km(topology.zone_ground[zs[served]], sat_pos)[np.arange(s.size), s]
            cap[served] = band_capacity_bps(
                links.satellite, path_loss_db(up_km, links.satellite.carrier_ghz, PathEnv.SPACE_GROUND),
                rain_db.get(Band.KA, 0.0),
            )
            gws = gw[zs[served]]
            gw_elev = elevation_deg(topology.gateway_ground[gws], sat_pos)
            gw_range = slant_range_km(topology.gateway_ground[gws], sat_pos)
            direct = gw_elev[np.arange(s.size), s] >= mask_deg - ELEVATION_TOLERANCE_DEG
            # otherwise one inter-satellite hop to the gateway's nearest visible satellite
            relay_range = np.where(gw_elev >= mask_deg - ELEVATION_TOLERANCE_DEG, gw_range, np.inf).min(axis=1)
            down_km = np.where(direct, gw_range[np.arange(s.size), s], relay_range)
            path = propagation_latency_ms(up_km + down_km) + np.where(direct, 0.0, links.isl_hop_latency_ms)
            cap[served] = np.where(direct, cap[served], np.minimum(cap[served], links.isl_capacity_bps))
            lat[served] = np.where(np.isfinite(path), path, links.saturation_latency_ms)
            cap[served] = np.where(np.isfinite(down_km), cap[served], 0.0)
        capacity[satellite] = cap
        latency[satellite] = lat
    return capacity, latency

def _orbit(topology: Topology, t: int) -> tuple:
    sat_pos = topology.satellite_positions(t * 60.0)
    return sat_pos, elevation_deg(topology.zone_ground, sat_pos)

def _p95(samples: np.ndarray) -> float:
    return float(np.percentile(samples, 95)) if samples.size else 0.0

def step(state: EpochState, action: Optional[Action] = None, cache: Optional[TickCache] = None) -> tuple:
    """Advance one tick: apply the action, route demand, account energy and emissions."""
    actions = ()
    if action is not None and action.kind != ActionKind.NO_OP:
        state = apply_action(state, action)
        actions = (action.kind.value,)

    spec = state.spec
    topology = state.topology
    links = spec.links
    tables = topology.link_tables
    minutes = spec.epoch_minutes
    seconds = minutes * 60.0
    t = state.t
    mask = spec.constellation.min_elevation_deg

    inputs = _shared(cache, ("inputs", id(state.source), t, minutes), lambda: state.source.inputs_at(t, minutes))
    compiled = compile_config(topology, state.config)

    sat_pos, zone_elev = _shared(cache, ("orbit", t), lambda: _orbit(topology, t))
    zone_sat = _shared(
        cache, ("handover", t, state.zone_satellite.tobytes(), compiled.zone_pin.tobytes()),
        lambda: _handover(state.zone_satellite, compiled.zone_pin, zone_elev, mask),
    )

    fleet, uav_energy_wh, hover_min = _shared(
        cache, ("uav", t, minutes, _fleet_key(state.uav), compiled.uav_target.tobytes()),
        lambda: advance_uavs(topology, state.uav, compiled.uav_target, t, minutes),
    )

    transport, transport_ms = _shared(
        cache,
        ("transport", t, compiled.zone_gateway.tobytes(), zone_sat.tobytes(), frozenset(inputs.rain_db.items())),
        lambda: _transport(topology, compiled, zone_sat, sat_pos, inputs.rain_db, mask),
    )
    terrestrial = np.minimum(compiled.access_bps, transport)
    relayed = np.zeros(topology.n_zones)
    if topology.n_uavs:
        on_station = compiled.uav_target >= 0
        relayed = np.bincount(compiled.uav_target[on_station],
                              weights=hover_min[on_station] / minutes * tables.uav_capacity_bps,
                              minlength=topology.n_zones)
    capacity = terrestrial + relayed

    demand_bits = inputs.demand_bits
    demand_bps = demand_bits / seconds
    zone_demand_bps = demand_bps.sum(axis=1)
    gw = compiled.zone_gateway
    gw_load = np.bincount(gw, weights=zone_demand_bps, minlength=topology.n_gateways)
    share = np.where(gw_load > topology.gateway_throughput,
                     topology.gateway_throughput / np.where(gw_load > 0, gw_load, 1.0), 1.0)
    capacity = np.where(share[gw] < 1.0, np.minimum(capacity, zone_demand_bps * share[gw]), capacity)

    served_bits = np.zeros_like(demand_bits)
    remaining = capacity * seconds
    for k in PRIORITY:
        taken = np.minimum(demand_bits[:, k], remaining)
        served_bits[:, k] = taken
        remaining = remaining - taken

    path_ms = transport_ms + links.processing_latency_ms
    latency = np.zeros_like(demand_bits)
    cumulative = np.zeros(topology.n_zones)
    for k in PRIORITY:
        edge_ms = np.zeros(topology.n_zones)
        for s, service in enumerate(spec.gateways.services):
            if TRAFFIC_CLASSES.index(service.traffic_class) == k:
                edge_ms = tables.edge_latency_ms[gw, compiled.service_gateway[s]]
                break
        cumulative = cumulative + demand_bps[:, k]
        queue = queueing_delay_ms(links.queue_bits[TRAFFIC_CLASSES[k]], cumulative, capacity,
                                  links.saturation_latency_ms)
        latency[:, k] = np.where(queue >= links.saturation_latency_ms, links.saturation_latency_ms,
                                 np.minimum(path_ms + edge_ms + queue, links.saturation_latency_ms))

    has_demand = demand_bits > 0
    p95 = tuple(_p95(latency[has_demand[:, k], k]) for k in range(len(TRAFFIC_CLASSES)))
    p95_all = _p95(latency[has_demand])

    with np.errstate(divide="ignore", invalid="ignore"):
        fraction = np.where(has_demand, served_bits / np.where(has_demand, demand_bits, 1.0), 1.0)
    sla = spec.sla
    e, u, m = (TRAFFIC_CLASSES.index(c) for c in (TrafficClass.EMBB, TrafficClass.URLLC, TrafficClass.MIOT))
    violations = [0, 0, 0]
    violations[e] = int(np.sum(has_demand[:, e] & (fraction[:, e] < sla.embb_served_fraction)))
    violations[u] = int(np.sum(has_demand[:, u] & ((fraction[:, u] < sla.urllc_served_fraction)
                                                     | (latency[:, u] > sla.urllc_latency_ms))))
    violations[m] = int(np.sum(has_demand[:, m] & (fraction[:, m] < sla.miot_served_fraction)))

    power, modes, region = _element_power(topology, compiled, fleet, uav_energy_wh, minutes, served_bits / seconds,
                                          terrestrial, capacity)

    drawn = replace(state, t=t, element_power_w=power, element_region=region)
    tick = step_energy(drawn, minutes / 60.0)
    emissions, renewable_kwh = emissions_for(tick.region_kwh, inputs.intensity, inputs.renewable)
    delivered = float(served_bits.sum())
    tick = replace(tick, emissions_g=emissions, renewable_kwh=renewable_kwh, bits_delivered=delivered)

    kpi = KpiRecord(
        tick_minute=t,
        duration_minutes=minutes,
        offered_bits=tuple(float(x) for x in demand_bits.sum(axis=0)),
        served_bits=tuple(float(x) for x in served_bits.sum(axis=0)),
        latency_p95_ms=p95,
        latency_p95_all_ms=p95_all,
        layer_kwh=tick.layer_kwh,
        region_kwh=tick.region_kwh,
        emissions_g=emissions,
        renewable_kwh=renewable_kwh,
        sla_violations=tuple(violations),
        actions=actions,
    )
    next_state = replace(
        state,
        t=t + minutes,
        uav=fleet,
        zone_satellite=zone_sat,
        element_modes=modes,
        element_power_w=power,
        element_region=region,
        last_demand_bits=demand_bits,
        last_served_bits=served_bits,
        last_capacity_bps=capacity,
        last_p95_ms=p95_all,
        last_intensity=np.asarray(inputs.intensity, dtype=float),
        rain_active=any(db > 0 for db in inputs.rain_db.values()),
        ledger=state.ledger.plus(tick),
        last_rain_db=dict(inputs.rain_db),
    )
    return next_state, kpi

def _element_power(topology: Topology, compiled: CompiledConfig, fleet: UavFleetState, uav_energy_wh: np.ndarray,
                   minutes: int, served_bps: np.ndarray, terrestrial: np.ndarray, capacity: np.ndarray):
    """Average draw of every accounted element over the tick, facility overhead included."""
    tables = topology.link_tables
    power = np.zeros(topology.n_elements)
    modes = np.full(topology.n_elements, OFF, dtype=int)
    region = topology.element_static_region.copy()
    n_sites = topology.n_sites
    zone_served = served_bps.sum(axis=1)

    # terrestrial share of the served load is spread over active sites by capacity
    with np.errstate(divide="ignore", invalid="ignore"):
        terrestrial_bps = np.where(capacity > 0, zone_served * terrestrial / np.where(capacity > 0, capacity, 1.0), 0.0)
        per_capacity = np.where(compiled.access_bps > 0,
                                terrestrial_bps / np.where(compiled.access_bps > 0, compiled.access_bps, 1.0), 0.0)
    site_mode = compiled.site_mode
    active = site_mode == ACTIVE
    site_load = np.where(active, tables.site_capacity_bps * per_capacity[topology.site_zone], 0.0)
    base = np.select(
        [site_mode == ACTIVE, site_mode == MICRO, site_mode == DEEP],
        [topology.element_active_w[:n_sites], topology.element_micro_w[:n_sites], topology.element_deep_w[:n_sites]],
        0.0,
    )
    power[:n_sites] = base + topology.element_slope[:n_sites] * site_load
    modes[:n_sites] = site_mode

    class_served = served_bps.sum(axis=0)
    for g in range(topology.n_gateways):
        e = topology.edge_element[g]
        if e < 0:
            continue
        hosted = [s for s, gw in enumerate(compiled.service_gateway) if gw == g]
        if hosted:
            load = sum(class_served[TRAFFIC_CLASSES.index(topology.spec.gateways.services[s].traffic_class)]
                       for s in hosted)
            power[e] = topology.element_active_w[e] + topology.element_slope[e] * load
            modes[e] = ACTIVE
        else:
            power[e] = topology.element_deep_w[e]
            modes[e] = DEEP

    if topology.n_uavs:
        u0 = topology.uav_offset
        power[u0:u0 + topology.n_uavs] = uav_energy_wh / (minutes / 60.0)
        modes[u0:u0 + topology.n_uavs] = fleet.mode_codes

    s0 = topology.satshare_offset
    beams = topology.zone_backhaul == SATELLITE_BACKHAUL
    idx = s0 + np.arange(topology.n_zones)
    power[idx] = np.where(beams, topology.element_active_w[idx] + topology.element_slope[idx] * terrestrial_bps, 0.0)
    modes[idx] = np.where(beams, ACTIVE, OFF)
    region[idx] = topology.gateway_region[compiled.zone_gateway]

    g0 = topology.gateway_offset
    gidx = g0 + np.arange(topology.n_gateways)
    routed = np.bincount(compiled.zone_gateway, weights=zone_served, minlength=topology.n_gateways)
    in_use = np.bincount(compiled.zone_gateway, minlength=topology.n_gateways) > 0
    in_use[compiled.service_gateway] = True
    power[gidx] = np.where(in_use, topology.element_active_w[gidx] + topology.element_slope[gidx] * routed,
                           topology.element_deep_w[gidx])
    modes[gidx] = np.where(in_use, ACTIVE, DEEP)

    power *= topology.element_pue
    return power, modes, region

def simulate_hours(state: EpochState, configs: list, controller: Optional[TickController] = None,
                   cache: Optional[TickCache] = None) -> tuple:
    """Apply one HourConfig per hour and step every tick; returns the final state and KPI list."""
    if state.t % 60 != 0:
        raise InvalidParameter(f"Hour configurations apply on hour boundaries, t={state.t}", field="t")
    kpis = []
    ticks = state.spec.ticks_per_hour
    for config in configs:
        state = apply_config(state, config)
        for _ in range(ticks):
            action = controller.decide(state) if controller is not None else None
            next_state, kpi = step(state, action, cache)
            if controller is not None:
                controller.observe(state, action, kpi, next_state)
            state = next_state
            kpis.append(kpi)
    return state, kpis
