import logging
from typing import Union

from ..models.enums import Band, PolicyKind
from ..models.environment import RainEvent
from ..models.orchestration import HourConfig
from ..models.scenario import ScenarioSpec
from ..models.simulation import EpochState
from ..models.twin import Forecast
from ..utils.error_handlers import InvalidParameter
from .candidate_service import HOUR_MINUTES, candidate_configs, evaluate_candidates, qos_key, significant, static_config
from .twin_service import ForecastInputs

logger = logging.getLogger(__name__)

BASELINES = (PolicyKind.STATIC, PolicyKind.QOS, PolicyKind.ENERGY)

def observed_rain(state: EpochState) -> list[RainEvent]:
    """Attenuation seen on the last tick, held for the coming hour."""
    start = state.t / 60.0
    return [
        RainEvent(start_hour=start, end_hour=start + 1.0, affected_bands=[Band(band)], attenuation_db=db)
        for band, db in state.last_rain_db.items() if db > 0
    ]

def baseline_decide(kind: Union[PolicyKind, str], state: EpochState, forecast: Forecast,
                    planning: ScenarioSpec) -> HourConfig:
    """Next hour's config for a carbon-unaware baseline.

    The forecast is stripped of carbon signals before any candidate is scored, and the
    baselines react to rain only once it is observed: the look-ahead holds the last
    tick's attenuation instead of the rain schedule.
    `planning` is the coarse scenario used for the one-hour look-ahead.
    """
    kind = PolicyKind(kind)
    if kind not in BASELINES:
        raise InvalidParameter(f"'{kind.value}' is not a baseline policy", field="kind")
    if kind == PolicyKind.STATIC:
        return static_config(state.topology)

    source = ForecastInputs(planning, forecast.carbon_blind(), rain_events=observed_rain(state))
    view = state.with_spec(planning).with_source(source)
    inputs = source.inputs_at(state.t, HOUR_MINUTES)
    outcomes = evaluate_candidates(view, candidate_configs(view, inputs.demand_bits, inputs.rain_db))

    orchestration = planning.orchestration
    best_qos = min(outcomes, key=lambda o: qos_key(o, orchestration.served_resolution,
                                                   orchestration.latency_resolution_ms))
    if kind == PolicyKind.QOS:
        return best_qos.config

    feasible = [o for o in outcomes if o.violations == 0]
    if not feasible:
        logger.warning(f"Energy baseline at t={state.t}: no feasible candidate, using the QoS choice")
        return best_qos.config
    return min(feasible, key=lambda o: (significant(o.kwh), o.index)).config
