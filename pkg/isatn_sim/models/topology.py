from typing import Tuple

from pydantic import BaseModel

from .enums import BackhaulKind, ElementKind, UavMode, ZoneClass

class SatelliteNode(BaseModel):
    id: str
    plane_index: int
    slot_index: int
    altitude_km: float
    inclination_deg: float
    raan_deg: float
    phase_deg: float

class TerrestrialSite(BaseModel):
    id: str
    kind: ElementKind
    zone: str
    position: Tuple[float, float]
    sleep_capable: bool

class UavNode(BaseModel):
    id: str
    position: Tuple[float, float]
    battery_wh: float
    capacity_wh: float
    endurance_h: float
    coverage_km: float
    mode: UavMode = UavMode.GROUNDED
    home_pad: str

class GatewayNode(BaseModel):
    id: str
    region: str
    position: Tuple[float, float]
    compute_capacity: float
    hosts_edge: bool
    throughput_bps: float
    pue: float

class Zone(BaseModel):
    id: str
    zone_class: ZoneClass
    region: str
    centroid: Tuple[float, float]
    backhaul: BackhaulKind = BackhaulKind.FIBER
    industrial: bool = False
