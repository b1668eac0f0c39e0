from typing import Optional, Tuple

from pydantic import BaseModel

from .energy import PowerProfile
from .enums import BackhaulKind, RegionKind, TrafficClass, ZoneClass
from .environment import RainEvent

class StrictModel(BaseModel):
    class Config:
        extra = "forbid"

class ConstellationSpec(StrictModel):
    planes: int = 6
    sats_per_plane: int = 12
    total_satellites: int = 72
    altitude_km: float = 600.0
    inclination_deg: float = 53.0
    raan_spread_deg: float = 360.0
    min_elevation_deg: float = 10.0
    # Geodetic anchor of the planar region
    region_lat_deg: float = 37.0
    region_lon_deg: float = 0.0
    region_center_km: Tuple[float, float] = (100.0, 100.0)

class BandSpec(StrictModel):
    carrier_ghz: float
    bandwidth_hz: float
    tx_power_dbm: float
    noise_dbm: float
    max_spectral_efficiency: float = 7.8

class LinkSpec(StrictModel):
    macro: BandSpec
    small: BandSpec
    uav: BandSpec
    satellite: BandSpec
    microwave: BandSpec
    macro_distance_km: dict[ZoneClass, float]
    small_distance_km: dict[ZoneClass, float]
    fiber_capacity_bps: float = 40e9
    fiber_km_per_ms: float = 200.0
    isl_hop_latency_ms: float = 4.0
    isl_capacity_bps: float = 10e9
    processing_latency_ms: float = 1.0
    edge_hop_latency_ms: float = 0.5
    queue_bits: dict[TrafficClass, float]
    saturation_latency_ms: float = 250.0

class ZoneSpec(StrictModel):
    id: str
    zone_class: ZoneClass
    region: str
    centroid: Tuple[float, float]
    macro_sites: int
    small_sites: int
    backhaul: BackhaulKind
    industrial: bool = False

class RanSpec(StrictModel):
    macro_count: int = 60
    small_count: int = 120
    zones: list[ZoneSpec]

class SwapPadSpec(StrictModel):
    id: str
    region: str
    position: Tuple[float, float]

class UavSpec(StrictModel):
    count: int = 24
    endurance_h: float = 4.0
    coverage_km: float = 15.0
    swap_pads: list[SwapPadSpec]
    reserve_fraction: float = 0.3
    swap_minutes: float = 5.0
    transit_minutes: float = 2.0

class GatewaySiteSpec(StrictModel):
    id: str
    region: str
    position: Tuple[float, float]
    compute_capacity: float = 1.0
    hosts_edge: bool = True
    throughput_bps: float = 40e9
    pue: float = 1.3

class EdgeServiceSpec(StrictModel):
    id: str
    traffic_class: TrafficClass
    compute_demand: float

class GatewaySpec(StrictModel):
    count: int = 8
    sites: list[GatewaySiteSpec]
    services: list[EdgeServiceSpec]

class EmbbProfile(StrictModel):
    peak_bps: dict[ZoneClass, float]
    trough_ratio: float = 0.25
    peak_hour: float = 20.0
    trough_hour: float = 4.0
    noise: float = 0.05
    commuter_amplitude: float = 0.15

class UrllcProfile(StrictModel):
    rate_bps: float = 5e7
    noise: float = 0.02

class MiotProfile(StrictModel):
    batches_per_hour: dict[ZoneClass, float]
    batch_bits: float = 2e9

class SurgeSpec(StrictModel):
    multiplier: float = 2.0
    start_hour: float
    end_hour: float
    zone_class: ZoneClass = ZoneClass.URBAN
    traffic_class: TrafficClass = TrafficClass.EMBB

class TrafficProfiles(StrictModel):
    embb: EmbbProfile
    urllc: UrllcProfile = UrllcProfile()
    miot: MiotProfile
    surge: Optional[SurgeSpec] = None

class RegionProfile(StrictModel):
    id: str
    kind: RegionKind
    base_renewable: float
    solar_amplitude: float
    evening_amplitude: float
    noise: float = 0.02
    base_intensity: float = 450.0
    floor_intensity: float = 50.0

class CarbonSourceSpec(StrictModel):
    path: Optional[str] = None
    regions: list[RegionProfile]

class SlaSpec(StrictModel):
    urllc_latency_ms: float = 5.0
    embb_served_fraction: float = 0.95
    miot_served_fraction: float = 0.90
    urllc_served_fraction: float = 0.999

class RlSpec(StrictModel):
    gamma: float = 0.99
    alpha_actor: float = 0.01
    alpha_critic: float = 0.05
    reward_lambda: float = 10.0
    exploration_start: float = 0.2
    exploration_end: float = 0.01
    episodes: int = 200
    td_clip: float = 5.0
    no_op_prior: float = 3.0
    train_beam_width: int = 2

class OrchestrationSpec(StrictModel):
    # None falls back to settings.beam_width
    beam_width: Optional[int] = None
    uav_levels: list[float] = [0.0, 0.25, 0.5, 1.0]
    sleep_levels: list[float] = [0.0, 0.3, 0.6]
    gateway_choices: list[str] = ["nearest", "region"]
    edge_choices: list[str] = ["region"]
    latency_resolution_ms: float = 10.0
    served_resolution: float = 1e-3
    static_uav_fraction: float = 0.5
    recovery_threshold: float = 1.1
    recovery_window_minutes: int = 5
    rl: RlSpec = RlSpec()

class ScenarioSpec(StrictModel):
    days: int = 7
    epoch_minutes: int = 1
    decision_interval_hours: int = 1
    seed: int = 20240601
    constellation: ConstellationSpec = ConstellationSpec()
    ran: RanSpec
    uavs: UavSpec
    gateways: GatewaySpec
    traffic_profiles: TrafficProfiles
    rain_events: list[RainEvent] = []
    carbon_source: CarbonSourceSpec
    power_catalog: dict[str, PowerProfile]
    links: LinkSpec
    sla: SlaSpec = SlaSpec()
    orchestration: OrchestrationSpec = OrchestrationSpec()

    @property
    def region_ids(self) -> list[str]:
        return [r.id for r in self.carbon_source.regions]

    @property
    def horizon_hours(self) -> int:
        return self.days * 24

    @property
    def ticks_per_hour(self) -> int:
        return 60 // self.epoch_minutes
