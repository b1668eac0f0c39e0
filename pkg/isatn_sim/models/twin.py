from typing import Optional

from pydantic import BaseModel

class Forecast(BaseModel):
    """Day-ahead exogenous inputs.

    `traffic_bits` is hour x zone x class (bits per hour); carbon series are
    hour x region. A part left as None was not forecast (or is withheld, as
    for carbon-blind baselines).
    """
    start_hour: int = 0
    horizon_hours: int
    zone_ids: list[str] = []
    region_ids: list[str] = []
    traffic_bits: Optional[list[list[list[float]]]] = None
    carbon_intensity: Optional[list[list[float]]] = None
    renewable_share: Optional[list[list[float]]] = None

    def merge(self, other: "Forecast") -> "Forecast":
        return self.copy(update={
            "zone_ids": self.zone_ids or other.zone_ids,
            "region_ids": self.region_ids or other.region_ids,
            "traffic_bits": self.traffic_bits if self.traffic_bits is not None else other.traffic_bits,
            "carbon_intensity": self.carbon_intensity if self.carbon_intensity is not None else other.carbon_intensity,
            "renewable_share": self.renewable_share if self.renewable_share is not None else other.renewable_share,
        })

    def carbon_blind(self) -> "Forecast":
        return self.copy(update={"carbon_intensity": None, "renewable_share": None})

class ScenarioResult(BaseModel):
    emissions_g: float
    total_kwh: float
    energy_kwh_by_layer: dict[str, float]
    bits_delivered: float
    served_fraction: dict[str, float]
    p95_latency_ms: dict[str, float]
    sla_violations: int
    risk_hours: list[int] = []
