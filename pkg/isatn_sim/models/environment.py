from typing import Optional

from pydantic import BaseModel, Field

from .enums import Band, TrafficClass

class TrafficDemand(BaseModel):
    epoch: int
    zone: str
    traffic_class: TrafficClass = Field(..., alias="class")
    offered_bits: float
    latency_target_ms: Optional[float] = None

    class Config:
        allow_population_by_field_name = True

class RainEvent(BaseModel):
    start_hour: float
    end_hour: float
    affected_bands: list[Band] = [Band.KA, Band.MICROWAVE_BACKHAUL]
    attenuation_db: float = 15.0
    label: Optional[str] = None

    class Config:
        extra = "forbid"

    def active_at(self, t_minutes: float) -> bool:
        return self.start_hour * 60.0 <= t_minutes < self.end_hour * 60.0

class CarbonTracePoint(BaseModel):
    hour: int
    region: str
    intensity_gco2_per_kwh: float
    renewable_fraction: float
