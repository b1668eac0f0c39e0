from dataclasses import dataclass
from typing import Optional

from pydantic import BaseModel

from .enums import ElementKind

class PowerProfile(BaseModel):
    element_kind: ElementKind
    active_w: float
    micro_sleep_w: float
    deep_sleep_w: float
    off_w: float = 0.0
    load_slope_w_per_bps: Optional[float] = None
    uav_cruise_w: Optional[float] = None
    uav_hover_w: Optional[float] = None

    class Config:
        extra = "forbid"

@dataclass(frozen=True)
class EnergyLedger:
    """Energy and emissions of one tick, or of a run when accumulated.

    Layer order follows `LAYERS`; region order follows the scenario's
    carbon source regions.
    """
    epoch: int
    layer_kwh: tuple
    region_kwh: tuple
    total_kwh: float
    renewable_kwh: float = 0.0
    emissions_g: float = 0.0
    bits_delivered: float = 0.0

    def plus(self, other: "EnergyLedger") -> "EnergyLedger":
        return EnergyLedger(
            epoch=other.epoch,
            layer_kwh=tuple(a + b for a, b in zip(self.layer_kwh, other.layer_kwh)),
            region_kwh=tuple(a + b for a, b in zip(self.region_kwh, other.region_kwh)),
            total_kwh=self.total_kwh + other.total_kwh,
            renewable_kwh=self.renewable_kwh + other.renewable_kwh,
            emissions_g=self.emissions_g + other.emissions_g,
            bits_delivered=self.bits_delivered + other.bits_delivered,
        )

    @classmethod
    def empty(cls, n_layers: int, n_regions: int, epoch: int = 0) -> "EnergyLedger":
        return cls(epoch=epoch, layer_kwh=(0.0,) * n_layers, region_kwh=(0.0,) * n_regions, total_kwh=0.0)
