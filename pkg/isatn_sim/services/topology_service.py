import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from ..models.enums import LAYERS, BackhaulKind, ElementKind, Layer, ZoneClass
from ..models.scenario import ConstellationSpec, ScenarioSpec
from ..models.topology import GatewayNode, SatelliteNode, TerrestrialSite, UavNode, Zone
from ..utils.error_handlers import InvalidParameter
from .link_service import LinkTables, build_link_tables

logger = logging.getLogger(__name__)

MU_KM3_S2 = 398600.4418
EARTH_RADIUS_KM = 6371.0
ELEVATION_TOLERANCE_DEG = 1e-9

ZONE_CLASSES = [ZoneClass.URBAN, ZoneClass.SUBURBAN, ZoneClass.RURAL]
BACKHAUL_CODES = {BackhaulKind.FIBER: 0, BackhaulKind.MICROWAVE: 1, BackhaulKind.SATELLITE: 2}

def orbital_period_s(altitude_km: float) -> float:
    """Circular-orbit Kepler period."""
    if altitude_km <= 0:
        raise InvalidParameter(f"altitude_km must be > 0, got {altitude_km}", field="altitude_km")
    a = EARTH_RADIUS_KM + altitude_km
    return 2.0 * math.pi * math.sqrt(a ** 3 / MU_KM3_S2)

def build_constellation(
    planes: int,
    sats_per_plane: int,
    altitude_km: float,
    inclination_deg: float,
    raan_spread_deg: float = 180.0,
) -> list[SatelliteNode]:
    """Walker-delta style constellation: RAAN spaced raan_spread/planes, slots 360/sats_per_plane."""
    if planes < 1 or sats_per_plane < 1:
        raise InvalidParameter(
            f"planes and sats_per_plane must be >= 1, got {planes} x {sats_per_plane}", field="planes"
        )
    if altitude_km <= 0:
        raise InvalidParameter(f"altitude_km must be > 0, got {altitude_km}", field="altitude_km")

    satellites = []
    for p in range(planes):
        raan = (p * raan_spread_deg / planes) % 360.0
        for s in range(sats_per_plane):
            satellites.append(SatelliteNode(
                id=f"sat-{p + 1:02d}-{s + 1:02d}",
                plane_index=p,
                slot_index=s,
                altitude_km=altitude_km,
                inclination_deg=inclination_deg % 360.0,
                raan_deg=raan,
                phase_deg=(s * 360.0 / sats_per_plane) % 360.0,
            ))
    return satellites

def _orbit_positions(raan_deg, inclination_deg, phase_deg, altitude_km, t_s) -> np.ndarray:
    raan = np.radians(raan_deg)
    inc = np.radians(inclination_deg)
    a = EARTH_RADIUS_KM + np.asarray(altitude_km, dtype=float)
    period = 2.0 * np.pi * np.sqrt(a ** 3 / MU_KM3_S2)
    u = np.radians(phase_deg) + 2.0 * np.pi * np.mod(t_s, period) / period
    x = np.cos(raan) * np.cos(u) - np.sin(raan) * np.sin(u) * np.cos(inc)
    y = np.sin(raan) * np.cos(u) + np.cos(raan) * np.sin(u) * np.cos(inc)
    z = np.sin(u) * np.sin(inc)
    return np.stack([x, y, z], axis=-1) * np.asarray(a)[..., None]

def satellite_position_km(sat: SatelliteNode, t: float) -> np.ndarray:
    """Inertial position of a satellite `t` seconds after epoch."""
    return _orbit_positions(sat.raan_deg, sat.inclination_deg, sat.phase_deg, sat.altitude_km, t)

def _local_frame(anchor: ConstellationSpec):
    lat = math.radians(anchor.region_lat_deg)
    lon = math.radians(anchor.region_lon_deg)
    up = np.array([math.cos(lat) * math.cos(lon), math.cos(lat) * math.sin(lon), math.sin(lat)])
    east = np.array([-math.sin(lon), math.cos(lon), 0.0])
    north = np.array([-math.sin(lat) * math.cos(lon), -math.sin(lat) * math.sin(lon), math.cos(lat)])
    return up, east, north

def satellite_ground_track(sat: SatelliteNode, t: float, anchor: Optional[ConstellationSpec] = None) -> tuple:
    """Sub-satellite point, orthographically projected onto the scenario plane (km)."""
    anchor = anchor or ConstellationSpec()
    _, east, north = _local_frame(anchor)
    r = satellite_position_km(sat, t)
    unit = r / np.linalg.norm(r)
    cx, cy = anchor.region_center_km
    return (float(cx + EARTH_RADIUS_KM * unit @ east), float(cy + EARTH_RADIUS_KM * unit @ north))

def ground_point_km(position: tuple, anchor: ConstellationSpec) -> np.ndarray:
    """Inverse of the planar projection: a planar point back onto the sphere."""
    up, east, north = _local_frame(anchor)
    cx, cy = anchor.region_center_km
    a = (position[0] - cx) / EARTH_RADIUS_KM
    b = (position[1] - cy) / EARTH_RADIUS_KM
    c = math.sqrt(max(0.0, 1.0 - a * a - b * b))
    return EARTH_RADIUS_KM * (a * east + b * north + c * up)

def elevation_deg(ground: np.ndarray, sat_positions: np.ndarray) -> np.ndarray:
    """Elevation of each satellite seen from each ground point; shapes (G,3) x (S,3) -> (G,S)."""
    ground = np.atleast_2d(ground)
    sat_positions = np.atleast_2d(sat_positions)
    up = ground / np.linalg.norm(ground, axis=1, keepdims=True)
    d = sat_positions[None, :, :] - ground[:, None, :]
    vertical = np.einsum("gsk,gk->gs", d, up)
    horizontal = np.linalg.norm(d - vertical[..., None] * up[:, None, :], axis=2)
    return np.degrees(np.arctan2(vertical, horizontal))

def slant_range_km(ground: np.ndarray, sat_positions: np.ndarray) -> np.ndarray:
    ground = np.atleast_2d(ground)
    sat_positions = np.atleast_2d(sat_positions)
    return np.linalg.norm(sat_positions[None, :, :] - ground[:, None, :], axis=2)

def _site_position(centroid: tuple, k: int, n: int, radius_km: float) -> tuple:
    angle = 2.0 * math.pi * k / max(n, 1)
    return (round(centroid[0] + radius_km * math.cos(angle), 6), round(centroid[1] + radius_km * math.sin(angle), 6))

@dataclass(eq=False)
class Topology:
    """Immutable network geometry plus the flat element table used for accounting.

    Element order: macro sites, small cells, edge servers (one per edge-capable
    gateway), UAVs, satellite ground-segment shares (one per zone), gateways.
    """
    spec: ScenarioSpec
    zones: list[Zone]
    sites: list[TerrestrialSite]
    satellites: list[SatelliteNode]
    uavs: list[UavNode]
    gateways: list[GatewayNode]
    region_ids: list[str]
    anchor: ConstellationSpec

    zone_index: dict = field(default_factory=dict)
    gateway_index: dict = field(default_factory=dict)
    uav_index: dict = field(default_factory=dict)
    site_index: dict = field(default_factory=dict)
    satellite_index: dict = field(default_factory=dict)
    service_index: dict = field(default_factory=dict)

    def __post_init__(self):
        self.zone_index = {z.id: i for i, z in enumerate(self.zones)}
        self.gateway_index = {g.id: i for i, g in enumerate(self.gateways)}
        self.uav_index = {u.id: i for i, u in enumerate(self.uavs)}
        self.site_index = {s.id: i for i, s in enumerate(self.sites)}
        self.satellite_index = {s.id: i for i, s in enumerate(self.satellites)}
        self.service_index = {s.id: i for i, s in enumerate(self.spec.gateways.services)}
        region_pos = {r: i for i, r in enumerate(self.region_ids)}

        self.n_zones = len(self.zones)
        self.n_gateways = len(self.gateways)
        self.n_uavs = len(self.uavs)
        self.n_sats = len(self.satellites)
        self.n_regions = len(self.region_ids)

        self.zone_region = np.array([region_pos[z.region] for z in self.zones], dtype=int)
        self.zone_class = np.array([ZONE_CLASSES.index(z.zone_class) for z in self.zones], dtype=int)
        self.zone_backhaul = np.array([BACKHAUL_CODES[z.backhaul] for z in self.zones], dtype=int)
        self.zone_industrial = np.array([z.industrial for z in self.zones], dtype=bool)
        self.gateway_region = np.array([region_pos[g.region] for g in self.gateways], dtype=int)
        self.gateway_pue = np.array([g.pue for g in self.gateways], dtype=float)
        self.gateway_throughput = np.array([g.throughput_bps for g in self.gateways], dtype=float)
        self.gateway_compute = np.array([g.compute_capacity for g in self.gateways], dtype=float)
        self.gateway_hosts_edge = np.array([g.hosts_edge for g in self.gateways], dtype=bool)

        zone_xy = np.array([z.centroid for z in self.zones], dtype=float)
        gw_xy = np.array([g.position for g in self.gateways], dtype=float)
        self.zone_gateway_km = np.linalg.norm(zone_xy[:, None, :] - gw_xy[None, :, :], axis=2)
        self.gateway_gateway_km = np.linalg.norm(gw_xy[:, None, :] - gw_xy[None, :, :], axis=2)

        self.zone_ground = np.array([ground_point_km(z.centroid, self.anchor) for z in self.zones])
        self.gateway_ground = np.array([ground_point_km(g.position, self.anchor) for g in self.gateways])
        self._sat_raan = np.array([s.raan_deg for s in self.satellites])
        self._sat_inc = np.array([s.inclination_deg for s in self.satellites])
        self._sat_phase = np.array([s.phase_deg for s in self.satellites])
        self._sat_alt = np.array([s.altitude_km for s in self.satellites])

        self._build_element_table(region_pos)

    def _build_element_table(self, region_pos: dict):
        catalog = self.spec.power_catalog
        kinds, layers, regions, pue, ids = [], [], [], [], []

        def add(element_id, kind, region, facility_pue=1.0):
            ids.append(element_id)
            kinds.append(kind)
            layers.append(LAYERS.index(_LAYER_OF[kind]))
            regions.append(region)
            pue.append(facility_pue)

        # sites keep their own order so element e < n_sites is site e
        zone_macros = [[] for _ in self.zones]
        zone_smalls = [[] for _ in self.zones]
        for site in self.sites:
            z = self.zone_index[site.zone]
            (zone_macros if site.kind == ElementKind.MACRO else zone_smalls)[z].append(len(ids))
            add(site.id, site.kind, self.zone_region[z])
        self.n_sites = len(ids)

        self.edge_element = np.full(self.n_gateways, -1, dtype=int)
        for g, gw in enumerate(self.gateways):
            if gw.hosts_edge:
                self.edge_element[g] = len(ids)
                add(f"{gw.id}-edge", ElementKind.EDGE_SERVER, self.gateway_region[g], gw.pue)

        self.uav_offset = len(ids)
        pad_region = {p.id: region_pos[p.region] for p in self.spec.uavs.swap_pads}
        for uav in self.uavs:
            add(uav.id, ElementKind.UAV, pad_region[uav.home_pad])

        self.satshare_offset = len(ids)
        for z, zone in enumerate(self.zones):
            add(f"{zone.id}-beam", ElementKind.SATELLITE_SHARE, self.zone_region[z])

        self.gateway_offset = len(ids)
        for g, gw in enumerate(self.gateways):
            add(gw.id, ElementKind.GATEWAY, self.gateway_region[g], gw.pue)

        self.element_ids = ids
        self.element_kind = kinds
        self.n_elements = len(ids)
        self.element_layer = np.array(layers, dtype=int)
        self.element_static_region = np.array(regions, dtype=int)
        self.element_pue = np.array(pue, dtype=float)
        self.element_active_w = np.array([catalog[k.value].active_w for k in kinds])
        self.element_micro_w = np.array([catalog[k.value].micro_sleep_w for k in kinds])
        self.element_deep_w = np.array([catalog[k.value].deep_sleep_w for k in kinds])
        self.element_slope = np.array([catalog[k.value].load_slope_w_per_bps or 0.0 for k in kinds])
        self.zone_macro_elements = [np.array(m, dtype=int) for m in zone_macros]
        self.zone_small_elements = [np.array(s, dtype=int) for s in zone_smalls]
        self.site_zone = np.array([self.zone_index[s.zone] for s in self.sites], dtype=int)
        self.site_is_macro = np.array([s.kind == ElementKind.MACRO for s in self.sites], dtype=bool)

        uav_profile = catalog[ElementKind.UAV.value]
        self.uav_hover_w = float(uav_profile.uav_hover_w)
        self.uav_cruise_w = float(uav_profile.uav_cruise_w)
        self.uav_standby_w = float(uav_profile.deep_sleep_w)
        self.uav_home_pad = np.array(
            [[p.id for p in self.spec.uavs.swap_pads].index(u.home_pad) for u in self.uavs], dtype=int
        )

    @cached_property
    def link_tables(self) -> LinkTables:
        return build_link_tables(self.spec, self.zones, self.sites, self.zone_gateway_km, self.gateway_gateway_km)

    @cached_property
    def nearest_gateway(self) -> np.ndarray:
        return np.argmin(self.zone_gateway_km, axis=1)

    def nearest_gateway_in_region(self, region: int) -> np.ndarray:
        candidates = np.flatnonzero(self.gateway_region == region)
        return candidates[np.argmin(self.zone_gateway_km[:, candidates], axis=1)]

    def satellite_positions(self, t: float) -> np.ndarray:
        return _orbit_positions(self._sat_raan, self._sat_inc, self._sat_phase, self._sat_alt, t)

    def zone_elevations(self, t: float) -> np.ndarray:
        return elevation_deg(self.zone_ground, self.satellite_positions(t))

    def visible_satellites(self, zone_id: str, t: float, min_elevation_deg: Optional[float] = None) -> set:
        mask = self.anchor.min_elevation_deg if min_elevation_deg is None else min_elevation_deg
        z = self.zone_index[zone_id]
        elev = elevation_deg(self.zone_ground[z], self.satellite_positions(t))[0]
        return {self.satellites[s].id for s in np.flatnonzero(elev >= mask - ELEVATION_TOLERANCE_DEG)}

    def best_satellite(self, zone_id: str, t: float) -> Optional[str]:
        """Highest-elevation satellite above the mask, or None during a coverage gap."""
        z = self.zone_index[zone_id]
        elev = elevation_deg(self.zone_ground[z], self.satellite_positions(t))[0]
        s = int(np.argmax(elev))
        if elev[s] < self.anchor.min_elevation_deg - ELEVATION_TOLERANCE_DEG:
            return None
        return self.satellites[s].id

_LAYER_OF = {
    ElementKind.MACRO: Layer.RAN,
    ElementKind.SMALL: Layer.RAN,
    ElementKind.EDGE_SERVER: Layer.EDGE,
    ElementKind.GATEWAY: Layer.EDGE,
    ElementKind.UAV: Layer.UAV,
    ElementKind.SATELLITE_SHARE: Layer.SATELLITE,
}

def visible_satellites(topology: Topology, zone: Zone, t: float, min_elevation_deg: float) -> set:
    if not 0 <= min_elevation_deg < 90:
        raise InvalidParameter(f"min_elevation_deg must lie in [0, 90), got {min_elevation_deg}", field="min_elevation_deg")
    return topology.visible_satellites(zone.id, t, min_elevation_deg)

def build_topology(spec: ScenarioSpec) -> Topology:
    c = spec.constellation
    satellites = build_constellation(c.planes, c.sats_per_plane, c.altitude_km, c.inclination_deg, c.raan_spread_deg)

    zones = [
        Zone(id=z.id, zone_class=z.zone_class, region=z.region, centroid=z.centroid,
             backhaul=z.backhaul, industrial=z.industrial)
        for z in spec.ran.zones
    ]

    sites = []
    for z in spec.ran.zones:
        for k in range(z.macro_sites):
            sites.append(TerrestrialSite(id=f"{z.id}-macro-{k + 1}", kind=ElementKind.MACRO, zone=z.id,
                                         position=_site_position(z.centroid, k, z.macro_sites, 3.0),
                                         sleep_capable=True))
        for k in range(z.small_sites):
            sites.append(TerrestrialSite(id=f"{z.id}-small-{k + 1}", kind=ElementKind.SMALL, zone=z.id,
                                         position=_site_position(z.centroid, k, z.small_sites, 1.0),
                                         sleep_capable=True))

    pads = spec.uavs.swap_pads
    uav_profile = spec.power_catalog[ElementKind.UAV.value]
    capacity_wh = spec.uavs.endurance_h * (uav_profile.uav_hover_w or uav_profile.active_w)
    uavs = []
    for i in range(spec.uavs.count):
        pad = pads[i % len(pads)]
        uavs.append(UavNode(id=f"uav-{i + 1:02d}", position=pad.position, battery_wh=capacity_wh,
                            capacity_wh=capacity_wh, endurance_h=spec.uavs.endurance_h,
                            coverage_km=spec.uavs.coverage_km, home_pad=pad.id))

    gateways = [
        GatewayNode(id=g.id, region=g.region, position=g.position, compute_capacity=g.compute_capacity,
                    hosts_edge=g.hosts_edge, throughput_bps=g.throughput_bps, pue=g.pue)
        for g in spec.gateways.sites
    ]

    topology = Topology(spec=spec, zones=zones, sites=sites, satellites=satellites, uavs=uavs,
                        gateways=gateways, region_ids=spec.region_ids, anchor=c)
    logger.debug(
        f"Built topology: {len(satellites)} satellites, {len(sites)} sites, {len(uavs)} UAVs, "
        f"{len(gateways)} gateways, {topology.n_elements} accounted elements"
    )
    return topology
