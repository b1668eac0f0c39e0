import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from ..models.enums import Band, BackhaulKind, ElementKind, PathEnv, ZoneClass
from ..models.link import LinkState
from ..models.scenario import BandSpec, ScenarioSpec
from ..utils.error_handlers import InvalidParameter

# Log-distance exponents per propagation environment
PATH_LOSS_EXPONENTS = {
    PathEnv.URBAN: 3.5,
    PathEnv.SUBURBAN: 3.0,
    PathEnv.RURAL: 2.7,
    PathEnv.AIR_GROUND: 2.2,
    PathEnv.SPACE_GROUND: 2.0,
    PathEnv.FIXED_LOS: 2.0,
}
SPEED_OF_LIGHT_KM_PER_MS = 299.792458
DEFAULT_MAX_SPECTRAL_EFFICIENCY = 7.8
DEFAULT_SATURATION_MS = 250.0

def path_loss_db(distance_km, carrier_ghz: float, env: PathEnv):
    """PL = 32.44 + 20 log10(f_MHz) + 10 n log10(d_km). Accepts scalar or array distances."""
    d = np.asarray(distance_km, dtype=float)
    if np.any(d <= 0) or carrier_ghz <= 0:
        raise InvalidParameter("distance_km and carrier_ghz must be > 0", details=f"d={distance_km}, f={carrier_ghz}")
    n = PATH_LOSS_EXPONENTS[PathEnv(env)]
    pl = 32.44 + 20.0 * math.log10(carrier_ghz * 1000.0) + 10.0 * n * np.log10(d)
    return float(pl) if pl.ndim == 0 else pl

def spectral_efficiency(snr_db, max_spectral_efficiency: float = DEFAULT_MAX_SPECTRAL_EFFICIENCY):
    se = np.minimum(np.log2(1.0 + np.power(10.0, np.asarray(snr_db, dtype=float) / 10.0)), max_spectral_efficiency)
    return float(se) if se.ndim == 0 else se

def band_capacity_bps(band: BandSpec, path_loss, attenuation_db=0.0):
    """Shannon capacity of a band budget, vectorised over path loss and attenuation."""
    snr = band.tx_power_dbm - np.asarray(path_loss) - np.asarray(attenuation_db) - band.noise_dbm
    return band.bandwidth_hz * spectral_efficiency(snr, band.max_spectral_efficiency)

def link_capacity_bps(
    link: LinkState,
    tx_power_dbm: float,
    noise_dbm: float,
    bandwidth_hz: float,
    max_spectral_efficiency: float = DEFAULT_MAX_SPECTRAL_EFFICIENCY,
) -> float:
    if bandwidth_hz <= 0:
        raise InvalidParameter(f"bandwidth_hz must be > 0, got {bandwidth_hz}", field="bandwidth_hz")
    snr_db = tx_power_dbm - link.path_loss_db - link.attenuation_db - noise_dbm
    return float(bandwidth_hz * spectral_efficiency(snr_db, max_spectral_efficiency))

def propagation_latency_ms(distance_km):
    return np.asarray(distance_km, dtype=float) / SPEED_OF_LIGHT_KM_PER_MS

def make_link(
    endpoint_a: str,
    endpoint_b: str,
    band: Band,
    distance_km: float,
    carrier_ghz: float,
    env: PathEnv,
    attenuation_db: float = 0.0,
    budget: Optional[BandSpec] = None,
) -> LinkState:
    """Build a link; capacity is filled in when a band budget is given."""
    link = LinkState(
        endpoint_a=endpoint_a,
        endpoint_b=endpoint_b,
        band=band,
        distance_km=distance_km,
        attenuation_db=attenuation_db,
        prop_latency_ms=float(propagation_latency_ms(distance_km)),
        carrier_ghz=carrier_ghz,
        env=env,
        path_loss_db=path_loss_db(distance_km, carrier_ghz, env),
    )
    if budget is not None:
        link.capacity_bps = link_capacity_bps(
            link, budget.tx_power_dbm, budget.noise_dbm, budget.bandwidth_hz, budget.max_spectral_efficiency
        )
    return link

def isl_link(endpoint_a: str, endpoint_b: str, hop_latency_ms: float, capacity_bps: float) -> LinkState:
    # Fixed per-hop figure; the hop length implied by the latency keeps the light-speed bound
    distance = hop_latency_ms * SPEED_OF_LIGHT_KM_PER_MS
    return LinkState(endpoint_a=endpoint_a, endpoint_b=endpoint_b, band=Band.ISL, distance_km=distance,
                     capacity_bps=capacity_bps, prop_latency_ms=hop_latency_ms, env=PathEnv.SPACE_GROUND)

def queueing_delay_ms(queue_bits, load_bps, capacity_bps, saturation_ms: float = DEFAULT_SATURATION_MS):
    """M/M/1-style K/(C - L) in ms, saturating when load reaches capacity."""
    load = np.asarray(load_bps, dtype=float)
    cap = np.asarray(capacity_bps, dtype=float)
    headroom = cap - load
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(headroom > 0, 1000.0 * np.asarray(queue_bits, dtype=float) / np.where(headroom > 0, headroom, 1.0), saturation_ms)
    q = np.minimum(q, saturation_ms)
    return float(q) if q.ndim == 0 else q

def flow_latency_ms(
    serving_path: Iterable[LinkState],
    offered_load_bps: float,
    capacity_bps: float,
    queue_bits: float = 1e6,
    saturation_ms: float = DEFAULT_SATURATION_MS,
) -> float:
    if capacity_bps <= 0:
        raise InvalidParameter(f"capacity_bps must be > 0, got {capacity_bps}", field="capacity_bps")
    propagation = sum(link.prop_latency_ms for link in serving_path)
    if offered_load_bps <= 0:
        return float(propagation)
    if offered_load_bps >= capacity_bps:
        return saturation_ms
    return float(min(propagation + queueing_delay_ms(queue_bits, offered_load_bps, capacity_bps, saturation_ms),
                     saturation_ms))

@dataclass(frozen=True, eq=False)
class LinkTables:
    """Clear-sky quantities that depend only on geometry, computed once per topology."""
    site_capacity_bps: np.ndarray
    microwave_path_loss_db: np.ndarray
    zone_gateway_latency_ms: np.ndarray
    uav_capacity_bps: float
    edge_latency_ms: np.ndarray

_ZONE_ENV = {ZoneClass.URBAN: PathEnv.URBAN, ZoneClass.SUBURBAN: PathEnv.SUBURBAN, ZoneClass.RURAL: PathEnv.RURAL}

def build_link_tables(spec: ScenarioSpec, zones, sites, zone_gateway_km: np.ndarray,
                      gateway_gateway_km: np.ndarray) -> LinkTables:
    links = spec.links
    zone_by_id = {z.id: z for z in zones}

    site_capacity = np.zeros(len(sites))
    for i, site in enumerate(sites):
        zone = zone_by_id[site.zone]
        if site.kind == ElementKind.MACRO:
            band, distance = links.macro, links.macro_distance_km[zone.zone_class]
        else:
            band, distance = links.small, links.small_distance_km[zone.zone_class]
        site_capacity[i] = band_capacity_bps(band, path_loss_db(distance, band.carrier_ghz, _ZONE_ENV[zone.zone_class]))

    # co-located endpoints still get a short hop
    hop_km = np.maximum(zone_gateway_km, 0.1)
    microwave_pl = path_loss_db(hop_km, links.microwave.carrier_ghz, PathEnv.FIXED_LOS)

    latency = np.empty_like(zone_gateway_km)
    for z, zone in enumerate(zones):
        if zone.backhaul == BackhaulKind.FIBER:
            latency[z] = zone_gateway_km[z] / links.fiber_km_per_ms
        else:
            latency[z] = propagation_latency_ms(zone_gateway_km[z])

    uav_distance = 2.0 * spec.uavs.coverage_km / 3.0
    uav_capacity = float(band_capacity_bps(links.uav, path_loss_db(uav_distance, links.uav.carrier_ghz, PathEnv.AIR_GROUND)))

    edge_latency = links.edge_hop_latency_ms + gateway_gateway_km / links.fiber_km_per_ms
    return LinkTables(site_capacity, microwave_pl, latency, uav_capacity, edge_latency)
