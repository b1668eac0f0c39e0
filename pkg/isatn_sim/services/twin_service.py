import logging
from typing import Optional, Union

import numpy as np

from ..config import settings
from ..models.enums import LAYERS, TRAFFIC_CLASSES
from ..models.orchestration import DayPlan
from ..models.scenario import ScenarioSpec
from ..models.simulation import EpochState, TickInputs
from ..models.twin import Forecast, ScenarioResult
from ..utils.error_handlers import HorizonMismatch, InsufficientHistory
from .engine_service import simulate_hours
from .environment_service import CarbonTrace, rain_state

logger = logging.getLogger(__name__)

DAY_HOURS = 24
BLEND_WEIGHT = 0.3

def forecast_traffic(history, horizon_hours: int, start_hour: int = 0, blend: float = BLEND_WEIGHT,
                     zone_ids: Optional[list] = None) -> Forecast:
    """Seasonal-naive forecast from the last complete day, nudged by an EWMA of day-over-day residuals.

    `history` is hour x zone x class bits, oldest first.
    """
    history = np.asarray(history, dtype=float)
    if history.ndim != 3 or history.shape[0] < DAY_HOURS:
        have = history.shape[0] if history.ndim else 0
        raise InsufficientHistory(f"Traffic forecast needs >= {DAY_HOURS} h of history, got {have}", field="history")

    last_day = history[-DAY_HOURS:]
    residual = np.zeros(history.shape[1:])
    for i in range(DAY_HOURS, history.shape[0]):
        residual = blend * (history[i] - history[i - DAY_HOURS]) + (1.0 - blend) * residual

    predicted = np.stack([last_day[h % DAY_HOURS] for h in range(horizon_hours)]) + blend * residual
    predicted = np.maximum(predicted, 0.0)
    return Forecast(
        start_hour=start_hour,
        horizon_hours=horizon_hours,
        zone_ids=list(zone_ids or []),
        traffic_bits=predicted.tolist(),
    )

def forecast_carbon(trace: CarbonTrace, horizon_hours: int, start_hour: int = 0) -> Forecast:
    """Day-ahead persistence: hour h tomorrow repeats hour h of the most recent day."""
    if trace.hours < DAY_HOURS:
        raise InsufficientHistory(f"Carbon forecast needs >= {DAY_HOURS} h of trace, got {trace.hours}",
                                  field="trace")
    intensity = trace.intensity[-DAY_HOURS:]
    renewable = np.clip(trace.renewable[-DAY_HOURS:], 0.0, 1.0)
    hours = [h % DAY_HOURS for h in range(horizon_hours)]
    return Forecast(
        start_hour=start_hour,
        horizon_hours=horizon_hours,
        region_ids=list(trace.regions),
        carbon_intensity=np.maximum(intensity[hours], 0.0).tolist(),
        renewable_share=renewable[hours].tolist(),
    )

def build_forecast(traffic_history, carbon_history: CarbonTrace, start_hour: int, horizon_hours: int,
                   zone_ids: list) -> Forecast:
    traffic = forecast_traffic(traffic_history, horizon_hours, start_hour, zone_ids=zone_ids)
    return traffic.merge(forecast_carbon(carbon_history, horizon_hours, start_hour))

class ForecastInputs:
    """Twin input source built from a Forecast plus the scheduled rain events."""

    def __init__(self, spec: ScenarioSpec, forecast: Forecast, rain_events: Optional[list] = None):
        self.forecast = forecast
        self.rain_events = list(spec.rain_events if rain_events is None else rain_events)
        n_zones = len(spec.ran.zones)
        n_regions = len(spec.region_ids)
        horizon = forecast.horizon_hours
        self._traffic = (np.asarray(forecast.traffic_bits, dtype=float) if forecast.traffic_bits is not None
                         else np.zeros((horizon, n_zones, len(TRAFFIC_CLASSES))))
        self._intensity = (np.asarray(forecast.carbon_intensity, dtype=float) if forecast.carbon_intensity is not None
                           else np.zeros((horizon, n_regions)))
        self._renewable = (np.asarray(forecast.renewable_share, dtype=float) if forecast.renewable_share is not None
                           else np.zeros((horizon, n_regions)))

    def inputs_at(self, t: int, minutes: int) -> TickInputs:
        h = t // 60 - self.forecast.start_hour
        if not 0 <= h < self.forecast.horizon_hours:
            raise HorizonMismatch(
                f"t={t} min falls outside the forecast window starting at hour {self.forecast.start_hour} "
                f"({self.forecast.horizon_hours} h)", field="t")
        return TickInputs(
            demand_bits=self._traffic[h] * (minutes / 60.0),
            intensity=self._intensity[h],
            renewable=self._renewable[h],
            rain_db=rain_state(self.rain_events, t),
        )

def planning_spec(spec: ScenarioSpec, epoch_minutes: Optional[int] = None) -> ScenarioSpec:
    """Coarser copy of the scenario used for what-if evaluation."""
    minutes = epoch_minutes or settings.planning_epoch_minutes
    if minutes == spec.epoch_minutes:
        return spec
    return spec.copy(update={"epoch_minutes": minutes})

def summarize_kpis(kpis: list) -> ScenarioResult:
    """Predicted totals; risk hours are hours with any SLA violation."""
    offered = np.zeros(len(TRAFFIC_CLASSES))
    served = np.zeros(len(TRAFFIC_CLASSES))
    layers = np.zeros(len(LAYERS))
    emissions = 0.0
    violations = 0
    latencies = [[] for _ in TRAFFIC_CLASSES]
    risk = set()
    for kpi in kpis:
        offered += kpi.offered_bits
        served += kpi.served_bits
        layers += kpi.layer_kwh
        emissions += kpi.emissions_g
        violations += kpi.total_violations
        for k in range(len(TRAFFIC_CLASSES)):
            if kpi.offered_bits[k] > 0:
                latencies[k].append(kpi.latency_p95_ms[k])
        if kpi.total_violations:
            risk.add(kpi.tick_minute // 60)

    return ScenarioResult(
        emissions_g=emissions,
        total_kwh=float(layers.sum()),
        energy_kwh_by_layer={layer.value: float(layers[i]) for i, layer in enumerate(LAYERS)},
        bits_delivered=float(served.sum()),
        served_fraction={c.value: float(served[k] / offered[k]) if offered[k] > 0 else 1.0
                         for k, c in enumerate(TRAFFIC_CLASSES)},
        p95_latency_ms={c.value: float(np.percentile(latencies[k], 95)) if latencies[k] else 0.0
                        for k, c in enumerate(TRAFFIC_CLASSES)},
        sla_violations=violations,
        risk_hours=sorted(risk),
    )

def _as_source(spec: ScenarioSpec, forecast):
    if isinstance(forecast, Forecast):
        return ForecastInputs(spec, forecast)
    return forecast

def evaluate_plan_detailed(spec: ScenarioSpec, start_state: EpochState, plan: Union[DayPlan, list],
                           forecast) -> tuple:
    """Run a plan on the twin; returns (final state, KPI records). `start_state` is left untouched."""
    configs = plan.configs if isinstance(plan, DayPlan) else list(plan)
    if isinstance(forecast, Forecast):
        offset = start_state.t // 60 - forecast.start_hour
        if offset < 0 or offset + len(configs) > forecast.horizon_hours:
            raise HorizonMismatch(
                f"Plan of {len(configs)} h starting at hour {start_state.t // 60} exceeds the forecast window "
                f"[{forecast.start_hour}, {forecast.start_hour + forecast.horizon_hours})",
                field="plan",
            )
    state = start_state.with_spec(spec).with_source(_as_source(spec, forecast))
    return simulate_hours(state, configs)

def evaluate_plan(spec: ScenarioSpec, start_state: EpochState, plan: Union[DayPlan, list], forecast) -> ScenarioResult:
    """Predicted KPIs of a plan. `forecast` is a Forecast or any input source (e.g. realized inputs)."""
    _, kpis = evaluate_plan_detailed(spec, start_state, plan, forecast)
    return summarize_kpis(kpis)
