"""Run orchestration: one plan-do-check-act loop per simulated day.

Each day the twin forecasts tomorrow from history, the policy produces the
day's hourly configs, the engine executes them tick by tick (with real-time
RL corrections for mpc_rl) and the realized traffic joins the history.
"""
import logging
from typing import Optional, Union

import numpy as np

from ..config import settings
from ..models.energy import EnergyLedger
from ..models.enums import LAYERS, TRAFFIC_CLASSES, PolicyKind
from ..models.environment import RainEvent
from ..models.orchestration import RlAgent
from ..models.scenario import ScenarioSpec
from ..models.simulation import RunResult, RunSummary
from ..utils.error_handlers import ConfigError, EmptyRun, EventNotFound, MissingPolicyFile, ZeroTraffic
from .baseline_service import baseline_decide
from .candidate_service import static_config
from .energy_service import gco2_per_gb, renewable_utilization
from .engine_service import initial_state, simulate_hours
from .environment_service import CarbonTrace, RealizedInputs, resolve_carbon_trace
from .mpc_service import plan_day_ahead_mpc
from .rl_service import RlController, load_policy
from .scenario_service import validate
from .topology_service import build_topology
from .twin_service import DAY_HOURS, build_forecast, planning_spec

logger = logging.getLogger(__name__)

RL_STREAM = 11
ZERO_TRAFFIC_FLAG = "ZERO_TRAFFIC"
EMPTY_RUN_FLAG = "EMPTY_RUN"
INFEASIBLE_FLAG = "INFEASIBLE"

def event_label(event: RainEvent, index: int) -> str:
    return event.label or f"event-{index + 1}"

def recovery_time(kpis: list, event: RainEvent, threshold: float = 1.1, window_minutes: int = 5) -> Optional[float]:
    """Seconds from event onset until p95 latency settles back near its pre-event level.

    The pre-event baseline is the p95 of per-tick latency over the hour before
    onset. Recovery is the first tick from which every tick of the following
    `window_minutes` stays at or below `threshold` x baseline, so a brief dip inside
    a longer disturbance does not count. None when that never happens inside the run.
    """
    if not kpis:
        raise EventNotFound("Empty KPI series", field="kpis")
    onset = event.start_hour * 60.0
    first = kpis[0].tick_minute
    end = kpis[-1].tick_minute + kpis[-1].duration_minutes
    before = [k.latency_p95_all_ms for k in kpis if onset - 60.0 <= k.tick_minute < onset]
    if not first <= onset < end or not before:
        raise EventNotFound(
            f"Event starting at hour {event.start_hour} has no pre-event hour inside the run [{first}, {end}) min",
            field="event",
        )
    limit = threshold * float(np.percentile(before, 95))

    minutes = np.array([k.tick_minute for k in kpis], dtype=float)
    latency = np.array([k.latency_p95_all_ms for k in kpis], dtype=float)
    for i in np.flatnonzero(minutes >= onset):
        tau = minutes[i]
        if tau + window_minutes > end:
            break
        window = latency[(minutes >= tau) & (minutes < tau + window_minutes)]
        if np.all(window <= limit):
            return (tau - onset) * 60.0
    return None

def summarize(kpis: list, spec: ScenarioSpec, policy: Union[PolicyKind, str], seed: int,
              rain_events: Optional[list] = None, risk_hours: Optional[list] = None) -> RunSummary:
    """Run totals, all recomputable from the KPI records."""
    policy = PolicyKind(policy)
    events = list(spec.rain_events if rain_events is None else rain_events)
    n_classes = len(TRAFFIC_CLASSES)
    offered = np.zeros(n_classes)
    served = np.zeros(n_classes)
    layers = np.zeros(len(LAYERS))
    regions = np.zeros(len(spec.region_ids))
    emissions = 0.0
    renewable = 0.0
    violations = 0
    actions = 0
    for k in kpis:
        offered += k.offered_bits
        served += k.served_bits
        layers += k.layer_kwh
        regions += k.region_kwh
        emissions += k.emissions_g
        renewable += k.renewable_kwh
        violations += k.total_violations
        actions += len(k.actions)

    flags = []
    bits = float(served.sum())
    try:
        per_gb = gco2_per_gb(emissions, bits)
    except ZeroTraffic:
        per_gb = None
        flags.append(ZERO_TRAFFIC_FLAG)

    total = EnergyLedger(epoch=0, layer_kwh=tuple(layers), region_kwh=tuple(regions), total_kwh=float(layers.sum()),
                         renewable_kwh=renewable, emissions_g=emissions, bits_delivered=bits)
    try:
        utilization = renewable_utilization([total])
    except EmptyRun:
        utilization = None
        flags.append(EMPTY_RUN_FLAG)

    p95 = {}
    for c, cls in enumerate(TRAFFIC_CLASSES):
        samples = [k.latency_p95_ms[c] for k in kpis if k.offered_bits[c] > 0]
        p95[cls.value] = float(np.percentile(samples, 95)) if samples else None

    recovery, event_p95 = {}, {}
    threshold = spec.orchestration.recovery_threshold
    window = spec.orchestration.recovery_window_minutes
    for i, event in enumerate(events):
        label = event_label(event, i)
        try:
            recovery[label] = recovery_time(kpis, event, threshold, window)
        except EventNotFound:
            continue
        during = [k.latency_p95_all_ms for k in kpis if event.active_at(k.tick_minute)]
        event_p95[label] = float(np.percentile(during, 95)) if during else None

    if risk_hours:
        flags.append(INFEASIBLE_FLAG)

    return RunSummary(
        policy=policy.value,
        seed=seed,
        days=spec.days,
        ticks=len(kpis),
        offered_bits={cls.value: float(offered[c]) for c, cls in enumerate(TRAFFIC_CLASSES)},
        served_bits={cls.value: float(served[c]) for c, cls in enumerate(TRAFFIC_CLASSES)},
        served_fraction={cls.value: float(served[c] / offered[c]) if offered[c] > 0 else None
                         for c, cls in enumerate(TRAFFIC_CLASSES)},
        total_kwh=float(layers.sum()),
        energy_kwh_by_layer={layer.value: float(layers[i]) for i, layer in enumerate(LAYERS)},
        emissions_g=emissions,
        renewable_kwh=renewable,
        gco2_per_gb=per_gb,
        renewable_utilization=utilization,
        p95_latency_ms=p95,
        sla_violations=violations,
        recovery_times_s=recovery,
        event_p95_latency_ms=event_p95,
        actions_taken=actions,
        flags=flags,
    )

def run_episode(
    spec: ScenarioSpec,
    policy: Union[PolicyKind, str],
    seed: int,
    agent: Optional[RlAgent] = None,
    learn: bool = False,
    trace: Optional[CarbonTrace] = None,
    beam_width: Optional[int] = None,
    rain_events: Optional[list] = None,
) -> tuple:
    """One full run; returns (RunResult, final agent or None)."""
    policy = PolicyKind(policy)
    violations = validate(spec)
    if violations:
        raise ConfigError(f"Invalid scenario: {'; '.join(violations)}", field=violations[0].split(":")[0])
    if policy == PolicyKind.MPC_RL and agent is None:
        raise MissingPolicyFile("mpc_rl needs a trained agent", field="policy_file")

    topology = build_topology(spec)
    trace = resolve_carbon_trace(spec, seed) if trace is None else trace.reordered(spec.region_ids)
    if trace.hours < spec.horizon_hours:
        raise ConfigError(f"Carbon trace covers {trace.hours} h, run needs {spec.horizon_hours} h", field="trace")
    events = list(spec.rain_events if rain_events is None else rain_events)
    source = RealizedInputs(spec, seed, trace, events)
    static = static_config(topology)
    state = initial_state(topology, source, static)
    planning = planning_spec(spec)
    zone_ids = [z.id for z in topology.zones]
    controller = (RlController(agent, spec.orchestration.rl.reward_lambda, learn=learn)
                  if policy == PolicyKind.MPC_RL else None)

    logger.info(f"Run start: policy={policy.value} seed={seed} days={spec.days} learn={learn}")
    history = source.hourly_traffic(-DAY_HOURS, DAY_HOURS)
    kpis, risk_hours = [], []
    for day in range(spec.days):
        start_hour = day * DAY_HOURS
        carbon_history = trace.window(max(start_hour - DAY_HOURS, 0), DAY_HOURS)
        forecast = build_forecast(history, carbon_history, start_hour, DAY_HOURS, zone_ids)

        if policy == PolicyKind.MPC_RL:
            plan = plan_day_ahead_mpc(spec, state, forecast, beam_width)
            risk_hours.extend(plan.predicted.risk_hours)
            controller.plan = plan
            state, day_kpis = simulate_hours(state, plan.configs, controller)
        elif policy == PolicyKind.STATIC:
            state, day_kpis = simulate_hours(state, [static] * DAY_HOURS)
        else:
            day_kpis = []
            for _ in range(DAY_HOURS):
                config = baseline_decide(policy, state, forecast, planning)
                state, hour_kpis = simulate_hours(state, [config])
                day_kpis.extend(hour_kpis)

        kpis.extend(day_kpis)
        history = np.concatenate([history, source.hourly_traffic(start_hour, DAY_HOURS)])
        logger.info(
            f"policy={policy.value} seed={seed} day={day + 1}: "
            f"{sum(k.emissions_g for k in day_kpis) / 1000.0:.2f} kg CO2, "
            f"{sum(k.total_kwh for k in day_kpis):.1f} kWh, "
            f"{sum(k.total_violations for k in day_kpis)} SLA violations, "
            f"{sum(len(k.actions) for k in day_kpis)} actions"
        )

    summary = summarize(kpis, spec, policy, seed, events, risk_hours)
    logger.info(f"Run finished: policy={policy.value} seed={seed} gco2_per_gb={summary.gco2_per_gb} "
                f"flags={summary.flags}")
    result = RunResult(
        kpis=kpis,
        summary=summary,
        hourly_intensity={r: trace.intensity[:spec.horizon_hours, j].tolist() for j, r in enumerate(trace.regions)},
        hourly_renewable={r: trace.renewable[:spec.horizon_hours, j].tolist() for j, r in enumerate(trace.regions)},
        rain_events=events,
        risk_hours=sorted(set(risk_hours)),
    )
    return result, controller.agent if controller is not None else None

def run(
    spec: ScenarioSpec,
    policy: Union[PolicyKind, str],
    seed: int,
    agent: Optional[RlAgent] = None,
    policy_file: Optional[str] = None,
    trace: Optional[CarbonTrace] = None,
    beam_width: Optional[int] = None,
) -> RunResult:
    """Evaluation run with frozen weights; identical inputs give identical results."""
    policy = PolicyKind(policy)
    if policy == PolicyKind.MPC_RL:
        if agent is None:
            agent, _ = load_policy(policy_file or settings.policy_file, build_topology(spec))
        agent = agent.with_exploration(0.0).with_rng([int(seed), RL_STREAM])
    result, _ = run_episode(spec, policy, seed, agent=agent, learn=False, trace=trace, beam_width=beam_width)
    return result
