from dataclasses import dataclass, field, replace
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel

from .energy import EnergyLedger
from .orchestration import HourConfig

@dataclass(frozen=True, eq=False)
class TickInputs:
    """Exogenous inputs for one tick: demand (zone x class bits), grid
    signals per region and rain attenuation per band."""
    demand_bits: np.ndarray
    intensity: np.ndarray
    renewable: np.ndarray
    rain_db: dict

@dataclass(frozen=True, eq=False)
class UavFleetState:
    battery_wh: np.ndarray
    airborne: np.ndarray
    returning: np.ndarray
    transit_left_min: np.ndarray
    swap_end_min: np.ndarray
    airborne_min: np.ndarray
    mode_codes: np.ndarray
    pad_busy_until: np.ndarray
    swaps: int = 0

@dataclass(frozen=True, eq=False)
class EpochState:
    """Complete simulated network state at the start of tick `t` (minutes)."""
    t: int
    spec: Any
    topology: Any
    source: Any
    config: HourConfig
    uav: UavFleetState
    zone_satellite: np.ndarray
    element_modes: np.ndarray
    element_power_w: np.ndarray
    element_region: np.ndarray
    last_demand_bits: np.ndarray
    last_served_bits: np.ndarray
    last_capacity_bps: np.ndarray
    last_p95_ms: float
    last_intensity: np.ndarray
    rain_active: bool
    ledger: EnergyLedger
    last_rain_db: dict = field(default_factory=dict)

    def with_source(self, source) -> "EpochState":
        return replace(self, source=source)

    def with_spec(self, spec) -> "EpochState":
        return replace(self, spec=spec)

@dataclass(frozen=True)
class KpiRecord:
    """Measurements of one tick; per-class tuples follow `TRAFFIC_CLASSES`."""
    tick_minute: int
    duration_minutes: int
    offered_bits: tuple
    served_bits: tuple
    latency_p95_ms: tuple
    latency_p95_all_ms: float
    layer_kwh: tuple
    region_kwh: tuple
    emissions_g: float
    renewable_kwh: float
    sla_violations: tuple
    actions: tuple = ()

    @property
    def total_kwh(self) -> float:
        return float(sum(self.layer_kwh))

    @property
    def total_served_bits(self) -> float:
        return float(sum(self.served_bits))

    @property
    def total_violations(self) -> int:
        return int(sum(self.sla_violations))

class RunSummary(BaseModel):
    policy: str
    seed: int
    days: int
    ticks: int
    offered_bits: dict[str, float]
    served_bits: dict[str, float]
    served_fraction: dict[str, Optional[float]]
    total_kwh: float
    energy_kwh_by_layer: dict[str, float]
    emissions_g: float
    renewable_kwh: float
    gco2_per_gb: Optional[float] = None
    renewable_utilization: Optional[float] = None
    p95_latency_ms: dict[str, Optional[float]]
    sla_violations: int
    recovery_times_s: dict[str, Optional[float]] = {}
    event_p95_latency_ms: dict[str, Optional[float]] = {}
    actions_taken: int = 0
    flags: list[str] = []

@dataclass
class RunResult:
    kpis: list
    summary: RunSummary
    hourly_intensity: dict = field(default_factory=dict)
    hourly_renewable: dict = field(default_factory=dict)
    rain_events: list = field(default_factory=list)
    risk_hours: list = field(default_factory=list)

