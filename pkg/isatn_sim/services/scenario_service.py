import logging
import math

import pydantic

from ..data.loader import load_json_file, write_text_file
from ..models.energy import PowerProfile
from ..models.enums import BackhaulKind, ElementKind, RegionKind, TrafficClass, ZoneClass
from ..models.environment import RainEvent
from ..models.scenario import (
    BandSpec,
    CarbonSourceSpec,
    ConstellationSpec,
    EdgeServiceSpec,
    EmbbProfile,
    GatewaySiteSpec,
    GatewaySpec,
    LinkSpec,
    MiotProfile,
    RanSpec,
    RegionProfile,
    ScenarioSpec,
    SurgeSpec,
    SwapPadSpec,
    TrafficProfiles,
    UavSpec,
    ZoneSpec,
)
from ..utils.error_handlers import ValidationError

logger = logging.getLogger(__name__)

# (class, macro sites, small sites, backhaul, industrial, centroid in the coastal half)
_ZONE_LAYOUT = [
    ("urban-1", ZoneClass.URBAN, 7, 20, BackhaulKind.FIBER, True, (70.0, 90.0)),
    ("urban-2", ZoneClass.URBAN, 7, 20, BackhaulKind.FIBER, False, (70.0, 125.0)),
    ("suburban-1", ZoneClass.SUBURBAN, 5, 8, BackhaulKind.MICROWAVE, True, (40.0, 60.0)),
    ("suburban-2", ZoneClass.SUBURBAN, 5, 8, BackhaulKind.MICROWAVE, False, (40.0, 150.0)),
    ("rural-1", ZoneClass.RURAL, 3, 2, BackhaulKind.SATELLITE, False, (15.0, 25.0)),
    ("rural-2", ZoneClass.RURAL, 3, 2, BackhaulKind.SATELLITE, False, (15.0, 180.0)),
]
_GATEWAY_LAYOUT = [(75.0, 105.0), (45.0, 45.0), (45.0, 165.0), (20.0, 100.0)]
_PAD_LAYOUT = [(60.0, 100.0), (30.0, 40.0), (30.0, 160.0)]

def _mirror(point: tuple, region: str) -> tuple:
    """Coastal half is x < 100 km; inland layout mirrors it."""
    x, y = point
    return (x, y) if region == RegionKind.COASTAL.value else (200.0 - x, y)

def _region_longitude(lat_deg: float, inclination_deg: float) -> float:
    # Longitude at which the RAAN=0 orbital plane crosses the anchor latitude
    ratio = math.tan(math.radians(lat_deg)) / math.tan(math.radians(inclination_deg))
    return round(math.degrees(math.asin(ratio)), 4)

def default_power_catalog() -> dict[str, PowerProfile]:
    profiles = [
        PowerProfile(element_kind=ElementKind.MACRO, active_w=2200.0, micro_sleep_w=660.0,
                     deep_sleep_w=110.0, load_slope_w_per_bps=2e-6),
        PowerProfile(element_kind=ElementKind.SMALL, active_w=90.0, micro_sleep_w=27.0,
                     deep_sleep_w=4.5, load_slope_w_per_bps=3e-8),
        PowerProfile(element_kind=ElementKind.EDGE_SERVER, active_w=800.0, micro_sleep_w=240.0,
                     deep_sleep_w=40.0, load_slope_w_per_bps=5e-8),
        PowerProfile(element_kind=ElementKind.UAV, active_w=800.0, micro_sleep_w=240.0,
                     deep_sleep_w=20.0, uav_cruise_w=400.0, uav_hover_w=800.0),
        PowerProfile(element_kind=ElementKind.SATELLITE_SHARE, active_w=300.0, micro_sleep_w=90.0,
                     deep_sleep_w=15.0, load_slope_w_per_bps=1e-7),
        PowerProfile(element_kind=ElementKind.GATEWAY, active_w=4000.0, micro_sleep_w=1200.0,
                     deep_sleep_w=200.0, load_slope_w_per_bps=4e-7),
    ]
    return {p.element_kind.value: p for p in profiles}

def default_link_spec() -> LinkSpec:
    return LinkSpec(
        macro=BandSpec(carrier_ghz=2.0, bandwidth_hz=20e6, tx_power_dbm=43.0, noise_dbm=-94.0),
        small=BandSpec(carrier_ghz=28.0, bandwidth_hz=100e6, tx_power_dbm=30.0, noise_dbm=-85.0),
        uav=BandSpec(carrier_ghz=3.5, bandwidth_hz=100e6, tx_power_dbm=46.0, noise_dbm=-87.0),
        # EIRP-equivalent power against a G/T-referred noise floor
        satellite=BandSpec(carrier_ghz=20.0, bandwidth_hz=250e6, tx_power_dbm=50.0, noise_dbm=-135.0),
        microwave=BandSpec(carrier_ghz=18.0, bandwidth_hz=500e6, tx_power_dbm=90.0, noise_dbm=-78.0),
        macro_distance_km={ZoneClass.URBAN: 1.0, ZoneClass.SUBURBAN: 2.0, ZoneClass.RURAL: 5.0},
        small_distance_km={ZoneClass.URBAN: 0.4, ZoneClass.SUBURBAN: 0.5, ZoneClass.RURAL: 0.5},
        queue_bits={TrafficClass.EMBB: 1.2e7, TrafficClass.URLLC: 2e4, TrafficClass.MIOT: 8e6},
    )

def default_scenario() -> ScenarioSpec:
    """Seven-day metropolitan scenario: two regions, twelve zones, 72 satellites."""
    regions = [RegionKind.COASTAL.value, RegionKind.INLAND.value]

    zones = []
    for region in regions:
        for name, zone_class, macros, smalls, backhaul, industrial, centroid in _ZONE_LAYOUT:
            zones.append(ZoneSpec(
                id=f"{region}-{name}",
                zone_class=zone_class,
                region=region,
                centroid=_mirror(centroid, region),
                macro_sites=macros,
                small_sites=smalls,
                backhaul=backhaul,
                industrial=industrial,
            ))

    gateway_sites = []
    pads = []
    for region in regions:
        pue = 1.4 if region == RegionKind.COASTAL.value else 1.2
        for i, position in enumerate(_GATEWAY_LAYOUT):
            gateway_sites.append(GatewaySiteSpec(
                id=f"gw-{region}-{i + 1}", region=region, position=_mirror(position, region), pue=pue
            ))
        for i, position in enumerate(_PAD_LAYOUT):
            pads.append(SwapPadSpec(id=f"pad-{region}-{i + 1}", region=region, position=_mirror(position, region)))

    constellation = ConstellationSpec(planes=6, sats_per_plane=12, total_satellites=72, altitude_km=600.0,
                                      inclination_deg=53.0, raan_spread_deg=360.0, min_elevation_deg=10.0,
                                      region_lat_deg=37.0, region_lon_deg=_region_longitude(37.0, 53.0))

    return ScenarioSpec(
        days=7,
        epoch_minutes=1,
        decision_interval_hours=1,
        seed=20240601,
        constellation=constellation,
        ran=RanSpec(macro_count=60, small_count=120, zones=zones),
        uavs=UavSpec(count=24, endurance_h=4.0, coverage_km=15.0, swap_pads=pads),
        gateways=GatewaySpec(
            count=8,
            sites=gateway_sites,
            services=[
                EdgeServiceSpec(id="urllc-compute", traffic_class=TrafficClass.URLLC, compute_demand=0.3),
                EdgeServiceSpec(id="embb-cache", traffic_class=TrafficClass.EMBB, compute_demand=0.5),
            ],
        ),
        traffic_profiles=TrafficProfiles(
            embb=EmbbProfile(peak_bps={ZoneClass.URBAN: 4.0e9, ZoneClass.SUBURBAN: 1.2e9, ZoneClass.RURAL: 0.15e9}),
            miot=MiotProfile(batches_per_hour={ZoneClass.URBAN: 30.0, ZoneClass.SUBURBAN: 60.0, ZoneClass.RURAL: 120.0},
                             batch_bits=1e9),
            surge=SurgeSpec(multiplier=2.0, start_hour=5 * 24 + 12, end_hour=5 * 24 + 16),
        ),
        rain_events=[
            RainEvent(start_hour=2 * 24 + 18, end_hour=2 * 24 + 22, attenuation_db=15.0, label="day3-evening"),
            RainEvent(start_hour=5 * 24 + 12, end_hour=5 * 24 + 16, attenuation_db=15.0, label="day6-afternoon"),
        ],
        # inland runs on a more fossil-heavy mix; coastal solar peaks at midday, inland wind in the evening
        carbon_source=CarbonSourceSpec(regions=[
            RegionProfile(id=RegionKind.COASTAL.value, kind=RegionKind.COASTAL, base_renewable=0.28,
                          solar_amplitude=0.32, evening_amplitude=0.0, noise=0.03, base_intensity=400.0),
            RegionProfile(id=RegionKind.INLAND.value, kind=RegionKind.INLAND, base_renewable=0.06,
                          solar_amplitude=0.06, evening_amplitude=0.24, noise=0.015, base_intensity=600.0),
        ]),
        power_catalog=default_power_catalog(),
        links=default_link_spec(),
    )

def _check_profile(key: str, profile: PowerProfile) -> list[str]:
    violations = []
    where = f"power_catalog.{key}"
    if profile.element_kind.value != key:
        violations.append(f"{where}.element_kind: '{profile.element_kind.value}' filed under '{key}'")
    if profile.off_w != 0:
        violations.append(f"{where}.off_w: must be 0")
    if not (0 <= profile.deep_sleep_w < profile.micro_sleep_w < profile.active_w):
        violations.append(f"{where}: requires 0 <= deep_sleep_w < micro_sleep_w < active_w")
    if profile.load_slope_w_per_bps is not None and profile.load_slope_w_per_bps < 0:
        violations.append(f"{where}.load_slope_w_per_bps: must be >= 0")
    if profile.element_kind == ElementKind.UAV:
        if profile.uav_cruise_w is None or profile.uav_hover_w is None:
            violations.append(f"{where}: uav profile needs uav_cruise_w and uav_hover_w")
        elif not profile.uav_hover_w > profile.uav_cruise_w > 0:
            violations.append(f"{where}: requires uav_hover_w > uav_cruise_w > 0")
    return violations

def validate(spec: ScenarioSpec) -> list[str]:
    """Return one description per violated scenario invariant; empty when valid."""
    violations = []

    if spec.days < 1:
        violations.append(f"days: must be >= 1, got {spec.days}")
    if spec.epoch_minutes < 1 or 60 % spec.epoch_minutes != 0:
        violations.append(f"epoch_minutes: 60 must be divisible by epoch_minutes, got {spec.epoch_minutes}")
    if spec.decision_interval_hours < 1 or 24 % spec.decision_interval_hours != 0:
        violations.append(f"decision_interval_hours: must be >= 1 and divide 24, got {spec.decision_interval_hours}")

    c = spec.constellation
    if c.planes < 1 or c.sats_per_plane < 1:
        violations.append("constellation: planes and sats_per_plane must be >= 1")
    if c.planes * c.sats_per_plane != c.total_satellites:
        violations.append(
            f"constellation.total_satellites: planes x sats_per_plane = {c.planes * c.sats_per_plane}, "
            f"declared {c.total_satellites}"
        )
    if c.altitude_km <= 0:
        violations.append("constellation.altitude_km: must be > 0")
    if not 0 <= c.min_elevation_deg < 90:
        violations.append("constellation.min_elevation_deg: must lie in [0, 90)")

    regions = spec.region_ids
    if len(set(regions)) != len(regions):
        violations.append("carbon_source.regions: duplicate region ids")

    zone_ids = [z.id for z in spec.ran.zones]
    if not zone_ids:
        violations.append("ran.zones: at least one zone is required")
    if len(set(zone_ids)) != len(zone_ids):
        violations.append("ran.zones: duplicate zone ids")
    for i, zone in enumerate(spec.ran.zones):
        if zone.region not in regions:
            violations.append(f"ran.zones[{i}].region: zone '{zone.id}' maps to no carbon source region ('{zone.region}')")
        if zone.macro_sites < 0 or zone.small_sites < 0:
            violations.append(f"ran.zones[{i}]: site counts must be >= 0 for zone '{zone.id}'")
    if sum(z.macro_sites for z in spec.ran.zones) != spec.ran.macro_count:
        violations.append(f"ran.macro_count: zones hold {sum(z.macro_sites for z in spec.ran.zones)} macro sites, declared {spec.ran.macro_count}")
    if sum(z.small_sites for z in spec.ran.zones) != spec.ran.small_count:
        violations.append(f"ran.small_count: zones hold {sum(z.small_sites for z in spec.ran.zones)} small cells, declared {spec.ran.small_count}")

    u = spec.uavs
    if u.count < 0:
        violations.append("uavs.count: must be >= 0")
    if u.endurance_h <= 0 or u.coverage_km <= 0:
        violations.append("uavs: endurance_h and coverage_km must be > 0")
    if u.count > 0 and not u.swap_pads:
        violations.append("uavs.swap_pads: at least one pad is required when UAVs are present")
    for i, pad in enumerate(u.swap_pads):
        if pad.region not in regions:
            violations.append(f"uavs.swap_pads[{i}].region: pad '{pad.id}' maps to no carbon source region")
    if not 0 < u.reserve_fraction < 1:
        violations.append("uavs.reserve_fraction: must lie in (0, 1)")
    uav_profile = spec.power_catalog.get(ElementKind.UAV.value)
    if uav_profile is not None and uav_profile.uav_hover_w:
        # one hovering tick must never drain the reserve
        longest_tick = max(spec.epoch_minutes, 60)
        drain = uav_profile.uav_hover_w * longest_tick / 60.0 / (uav_profile.uav_hover_w * u.endurance_h)
        if u.reserve_fraction <= drain:
            violations.append(f"uavs.reserve_fraction: must exceed one tick of hover drain ({drain:.3f})")

    g = spec.gateways
    if g.count != len(g.sites):
        violations.append(f"gateways.count: declared {g.count}, {len(g.sites)} sites listed")
    if not g.sites:
        violations.append("gateways.sites: at least one gateway is required")
    for i, site in enumerate(g.sites):
        if site.region not in regions:
            violations.append(f"gateways.sites[{i}].region: gateway '{site.id}' maps to no carbon source region")
        if site.compute_capacity <= 0:
            violations.append(f"gateways.sites[{i}].compute_capacity: must be > 0")
        if site.throughput_bps <= 0 or site.pue < 1:
            violations.append(f"gateways.sites[{i}]: throughput_bps must be > 0 and pue >= 1")
    edge_capacity = max((s.compute_capacity for s in g.sites if s.hosts_edge), default=0.0)
    for i, service in enumerate(g.services):
        if service.compute_demand > edge_capacity:
            violations.append(f"gateways.services[{i}].compute_demand: no edge gateway can host '{service.id}'")

    s = spec.sla
    if s.urllc_latency_ms <= 0:
        violations.append("sla.urllc_latency_ms: must be > 0")
    for name in ("embb_served_fraction", "miot_served_fraction", "urllc_served_fraction"):
        value = getattr(s, name)
        if not 0 < value <= 1:
            violations.append(f"sla.{name}: must lie in (0, 1], got {value}")

    for kind in ElementKind:
        if kind.value not in spec.power_catalog:
            violations.append(f"power_catalog.{kind.value}: missing profile")
    for key, profile in spec.power_catalog.items():
        violations.extend(_check_profile(key, profile))

    for i, event in enumerate(spec.rain_events):
        if event.end_hour <= event.start_hour:
            violations.append(f"rain_events[{i}]: end_hour must exceed start_hour")
        if event.attenuation_db < 0:
            violations.append(f"rain_events[{i}].attenuation_db: must be >= 0")

    o = spec.orchestration
    if o.beam_width is not None and o.beam_width < 1:
        violations.append("orchestration.beam_width: must be >= 1")
    if any(not 0 <= level <= 1 for level in o.uav_levels + o.sleep_levels):
        violations.append("orchestration: uav_levels and sleep_levels must lie in [0, 1]")
    if not 0 <= o.rl.exploration_end <= 1 or not 0 <= o.rl.exploration_start <= 1:
        violations.append("orchestration.rl: exploration rates must lie in [0, 1]")

    return violations

def load_scenario(path: str) -> ScenarioSpec:
    """Parse and validate a scenario JSON file."""
    raw = load_json_file(path)
    try:
        spec = ScenarioSpec.parse_obj(raw)
    except pydantic.ValidationError as e:
        messages = [f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()]
        first_field = ".".join(str(p) for p in e.errors()[0]["loc"]) if e.errors() else None
        raise ValidationError(violations=messages, field=first_field)

    violations = validate(spec)
    if violations:
        logger.warning(f"Scenario {path} failed validation with {len(violations)} violation(s)")
        raise ValidationError(violations=violations, field=violations[0].split(":")[0])

    logger.info(f"Loaded scenario {path}: {spec.days} days, {len(spec.ran.zones)} zones")
    return spec

def dump_scenario(spec: ScenarioSpec, path: str) -> str:
    return write_text_file(path, spec.json(indent=2) + "\n")
