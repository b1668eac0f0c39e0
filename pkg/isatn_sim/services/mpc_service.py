"""Day-ahead planner: receding-horizon beam search over the hourly knob lattice.

Every partial plan is scored on the twin. Survivors are ranked by risk hours,
then predicted emissions, then the number of knob changes, then lattice position.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..config import settings
from ..models.orchestration import DayPlan
from ..models.scenario import ScenarioSpec
from ..models.simulation import EpochState
from ..models.twin import Forecast
from ..utils.error_handlers import HorizonMismatch
from .candidate_service import (
    HOUR_MINUTES,
    BeamEntry,
    beam_search,
    candidate_configs,
    evaluate_candidates,
    knob_changes,
    qos_key,
    significant,
)
from .twin_service import ForecastInputs, evaluate_plan_detailed, planning_spec, summarize_kpis

logger = logging.getLogger(__name__)

MIN_HORIZON_HOURS = 12
MAX_HORIZON_HOURS = 24

@dataclass(frozen=True, eq=False)
class PartialPlan:
    state: EpochState
    configs: tuple
    emissions_g: float
    risk_hours: int
    changes: int

def _entry(plan: PartialPlan, path: tuple) -> BeamEntry:
    return BeamEntry(key=(plan.risk_hours, significant(plan.emissions_g), plan.changes, path), path=path,
                     payload=plan)

def _expand(source: ForecastInputs, orchestration):
    def expand(entry: BeamEntry, depth: int) -> list[BeamEntry]:
        plan: PartialPlan = entry.payload
        inputs = source.inputs_at(plan.state.t, HOUR_MINUTES)
        outcomes = evaluate_candidates(plan.state, candidate_configs(plan.state, inputs.demand_bits, inputs.rain_db))
        feasible = [o for o in outcomes if o.violations == 0]
        risk = 0
        if not feasible:
            fallback = min(outcomes, key=lambda o: qos_key(o, orchestration.served_resolution,
                                                           orchestration.latency_resolution_ms))
            feasible, risk = [fallback], 1
        previous = plan.configs[-1].knobs if plan.configs else plan.state.config.knobs
        return [
            _entry(PartialPlan(
                state=o.state,
                configs=plan.configs + (o.config,),
                emissions_g=plan.emissions_g + o.emissions_g,
                risk_hours=plan.risk_hours + risk,
                changes=plan.changes + knob_changes(previous, o.config.knobs),
            ), entry.path + (o.index,))
            for o in feasible
        ]
    return expand

def search_plan(spec: ScenarioSpec, state: EpochState, forecast: Forecast, beam_width: int) -> BeamEntry:
    """Best complete plan over the whole forecast window; `payload` is the PartialPlan."""
    if state.t != forecast.start_hour * 60:
        raise HorizonMismatch(
            f"Forecast starts at hour {forecast.start_hour} but the state is at t={state.t} min",
            field="forecast.start_hour",
        )
    planning = planning_spec(spec)
    source = ForecastInputs(planning, forecast)
    root_state = state.with_spec(planning).with_source(source)
    root = _entry(PartialPlan(state=root_state, configs=(), emissions_g=0.0, risk_hours=0, changes=0), ())
    return beam_search(root, _expand(source, spec.orchestration), forecast.horizon_hours, beam_width)

def plan_day_ahead_mpc(spec: ScenarioSpec, state: EpochState, forecast: Forecast,
                       beam_width: Optional[int] = None) -> DayPlan:
    """Hour-by-hour plan minimising predicted emissions subject to predicted SLA feasibility.

    Hours where no candidate is feasible fall back to the candidate serving the
    most traffic and are reported in `predicted.risk_hours`.
    """
    horizon = forecast.horizon_hours
    if not MIN_HORIZON_HOURS <= horizon <= MAX_HORIZON_HOURS:
        raise HorizonMismatch(
            f"Day-ahead planning needs a {MIN_HORIZON_HOURS}-{MAX_HORIZON_HOURS} h forecast, got {horizon} h",
            field="forecast.horizon_hours",
        )

    width = beam_width or spec.orchestration.beam_width or settings.beam_width
    best = search_plan(spec, state, forecast, width)
    configs = list(best.payload.configs)
    planning = planning_spec(spec)

    _, kpis = evaluate_plan_detailed(planning, state, configs, forecast)
    predicted = summarize_kpis(kpis)
    if predicted.risk_hours:
        logger.warning(f"MPC plan from hour {forecast.start_hour}: no feasible candidate in hours "
                       f"{predicted.risk_hours}, QoS fallback used")
    logger.info(
        f"MPC plan for hours {forecast.start_hour}-{forecast.start_hour + horizon - 1}: "
        f"predicted {predicted.emissions_g:.1f} g, {predicted.total_kwh:.1f} kWh, "
        f"{best.payload.changes} knob changes (beam {width})"
    )

    traffic = np.asarray(forecast.traffic_bits, dtype=float) if forecast.traffic_bits is not None else None
    intensity = np.asarray(forecast.carbon_intensity, dtype=float) if forecast.carbon_intensity is not None else None
    return DayPlan(
        configs=configs,
        predicted=predicted,
        start_hour=forecast.start_hour,
        expected_zone_bits=traffic.sum(axis=2).tolist() if traffic is not None else [],
        carbon_scale=float(intensity.max()) if intensity is not None and intensity.max() > 0 else 1.0,
    )
