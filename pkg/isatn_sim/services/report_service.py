import concurrent.futures
import json
import logging
import os
from typing import Optional, Union

import numpy as np
import pandas as pd

from ..config import settings
from ..data.loader import write_csv_frame, write_text_file
from ..models.enums import LAYERS, TRAFFIC_CLASSES, PolicyKind
from ..models.orchestration import RlAgent
from ..models.report import ComparisonReport, MetricStats, PolicyAggregate
from ..models.scenario import ScenarioSpec
from ..models.simulation import RunResult
from .energy_service import BITS_PER_GB
from .simulator_service import event_label, run

logger = logging.getLogger(__name__)

KPI_COLUMNS = [
    "tick_minute", "class", "offered_bits", "served_bits", "latency_ms_p95",
    "energy_kwh_ran", "energy_kwh_sat", "energy_kwh_uav", "energy_kwh_edge",
    "emissions_g", "renewable_kwh", "sla_violations",
]
ALL_CLASSES = "all"
LAYER_COLUMNS = ["energy_kwh_ran", "energy_kwh_sat", "energy_kwh_uav", "energy_kwh_edge"]
EVENT_MARGIN_MINUTES = 60
COMPARED_METRICS = [
    "gco2_per_gb", "total_kwh", "emissions_g", "renewable_utilization", "p95_latency_ms",
    "sla_violations", "actions_taken",
] + [f"energy_kwh_{layer.value}" for layer in LAYERS]

# ---------------------------------------------------------------- per-run outputs

def kpi_frame(kpis: list) -> pd.DataFrame:
    """Per tick: one row per class, then an `all` row carrying totals and energy."""
    rows = []
    zero_energy = [0.0] * len(LAYERS)
    for k in kpis:
        for c, cls in enumerate(TRAFFIC_CLASSES):
            rows.append([k.tick_minute, cls.value, k.offered_bits[c], k.served_bits[c], k.latency_p95_ms[c],
                         *zero_energy, 0.0, 0.0, k.sla_violations[c]])
        rows.append([k.tick_minute, ALL_CLASSES, sum(k.offered_bits), sum(k.served_bits), k.latency_p95_all_ms,
                     *k.layer_kwh, k.emissions_g, k.renewable_kwh, k.total_violations])
    return pd.DataFrame(rows, columns=KPI_COLUMNS)

def summary_payload(result: RunResult) -> dict:
    payload = json.loads(result.summary.json())
    payload["risk_hours"] = list(result.risk_hours)
    payload["rain_events"] = [
        {"label": event_label(e, i), "start_hour": e.start_hour, "end_hour": e.end_hour,
         "attenuation_db": e.attenuation_db}
        for i, e in enumerate(result.rain_events)
    ]
    return payload

def carbon_trace_frame(result: RunResult) -> pd.DataFrame:
    """Hourly grid signal per region next to the run's hourly gCO2/GB."""
    hours = len(next(iter(result.hourly_intensity.values()), []))
    emissions = np.zeros(hours)
    bits = np.zeros(hours)
    for k in result.kpis:
        h = k.tick_minute // 60
        if h < hours:
            emissions[h] += k.emissions_g
            bits[h] += sum(k.served_bits)
    frame = pd.DataFrame({"hour": np.arange(hours)})
    for region, series in result.hourly_intensity.items():
        frame[f"intensity_{region}"] = series
    for region, series in result.hourly_renewable.items():
        frame[f"renewable_{region}"] = series
    with np.errstate(divide="ignore", invalid="ignore"):
        frame["gco2_per_gb"] = np.where(bits > 0, emissions / (bits / BITS_PER_GB), np.nan)
    return frame

def energy_breakdown_frame(kpis: list, hours: Optional[int] = None) -> pd.DataFrame:
    """Hourly kWh per layer; column sums equal the run totals."""
    if hours is None:
        hours = (kpis[-1].tick_minute // 60 + 1) if kpis else 0
    layers = np.zeros((hours, len(LAYERS)))
    for k in kpis:
        layers[k.tick_minute // 60] += k.layer_kwh
    frame = pd.DataFrame(layers, columns=LAYER_COLUMNS)
    frame.insert(0, "hour", np.arange(hours))
    frame["energy_kwh_total"] = layers.sum(axis=1)
    return frame

def latency_event_frame(result: RunResult) -> pd.DataFrame:
    """Per-tick p95 latency from an hour before each event to an hour after it."""
    columns = ["event", "tick_minute", "minutes_from_onset", "in_event", "latency_ms_p95"] + [
        f"latency_ms_p95_{cls.value}" for cls in TRAFFIC_CLASSES
    ]
    rows = []
    for i, event in enumerate(result.rain_events):
        onset = event.start_hour * 60.0
        stop = event.end_hour * 60.0
        for k in result.kpis:
            if onset - EVENT_MARGIN_MINUTES <= k.tick_minute < stop + EVENT_MARGIN_MINUTES:
                rows.append([event_label(event, i), k.tick_minute, k.tick_minute - onset,
                             int(event.active_at(k.tick_minute)), k.latency_p95_all_ms, *k.latency_p95_ms])
    return pd.DataFrame(rows, columns=columns)

def emit_outputs(result: Union[RunResult, ComparisonReport], out_dir: str) -> list[str]:
    """Write kpis.csv, summary.json and the three figure series into `out_dir`.

    A ComparisonReport is written as comparison.json alone.
    """
    if isinstance(result, ComparisonReport):
        return [write_text_file(os.path.join(out_dir, "comparison.json"), result.json(indent=2) + "\n")]
    hours = len(next(iter(result.hourly_intensity.values()), [])) or None
    paths = [
        write_csv_frame(os.path.join(out_dir, "kpis.csv"), kpi_frame(result.kpis)),
        write_text_file(os.path.join(out_dir, "summary.json"),
                        json.dumps(summary_payload(result), indent=2, sort_keys=True) + "\n"),
        write_csv_frame(os.path.join(out_dir, "fig_carbon_trace.csv"), carbon_trace_frame(result)),
        write_csv_frame(os.path.join(out_dir, "fig_energy_breakdown.csv"),
                        energy_breakdown_frame(result.kpis, hours)),
        write_csv_frame(os.path.join(out_dir, "fig_latency_event.csv"), latency_event_frame(result)),
    ]
    logger.info(f"Wrote {len(paths)} files for policy={result.summary.policy} seed={result.summary.seed} "
                f"to {out_dir}")
    return paths

# ---------------------------------------------------------------- comparison

def run_metrics(result: RunResult) -> dict:
    s = result.summary
    latencies = [v for v in s.p95_latency_ms.values() if v is not None]
    metrics = {
        "gco2_per_gb": s.gco2_per_gb,
        "total_kwh": s.total_kwh,
        "emissions_g": s.emissions_g,
        "renewable_utilization": s.renewable_utilization,
        "p95_latency_ms": max(latencies) if latencies else None,
        "sla_violations": float(s.sla_violations),
        "actions_taken": float(s.actions_taken),
    }
    for layer in LAYERS:
        metrics[f"energy_kwh_{layer.value}"] = s.energy_kwh_by_layer.get(layer.value, 0.0)
    for label, seconds in s.recovery_times_s.items():
        metrics[f"recovery_s:{label}"] = seconds
    for label, latency in s.event_p95_latency_ms.items():
        metrics[f"event_p95_ms:{label}"] = latency
    return metrics

def _stats(values: list) -> MetricStats:
    present = [v for v in values if v is not None]
    if not present:
        return MetricStats()
    return MetricStats(mean=float(np.mean(present)), min=float(min(present)), max=float(max(present)))

def build_comparison(results: dict, reference: str = PolicyKind.QOS.value) -> ComparisonReport:
    """Aggregate `{policy: [RunResult, ...]}` over seeds; deltas are relative to `reference`."""
    policies = {}
    for policy, runs in results.items():
        per_run = [run_metrics(r) for r in runs]
        names = list(dict.fromkeys(name for m in per_run for name in m))
        policies[policy] = PolicyAggregate(
            policy=policy,
            seeds=[r.summary.seed for r in runs],
            metrics={name: _stats([m.get(name) for m in per_run]) for name in names},
        )

    deltas = {}
    if reference in policies:
        base = policies[reference].metrics
        for policy, aggregate in policies.items():
            deltas[policy] = {}
            for name, stats in aggregate.metrics.items():
                ref = base.get(name)
                if stats.mean is None or ref is None or ref.mean in (None, 0.0):
                    deltas[policy][name] = None
                else:
                    deltas[policy][name] = (stats.mean - ref.mean) / ref.mean
    return ComparisonReport(reference_policy=reference, policies=policies, deltas=deltas)

def compare(spec: ScenarioSpec, policies: list, seeds: list, out_dir: str, agent: Optional[RlAgent] = None,
            policy_file: Optional[str] = None, reference: str = PolicyKind.QOS.value,
            beam_width: Optional[int] = None) -> ComparisonReport:
    """Run every (policy, seed) pair in worker processes and write per-run and comparison outputs."""
    policies = [PolicyKind(p).value for p in policies]
    jobs = [(p, s) for p in policies for s in seeds]
    workers = min(settings.worker_count(), len(jobs)) or 1
    logger.info(f"Comparing {policies} over seeds {list(seeds)} with {workers} worker(s)")

    results = {}
    if workers == 1:
        for p, s in jobs:
            results[(p, s)] = run(spec, p, s, agent=agent, policy_file=policy_file, beam_width=beam_width)
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
            futures = {
                executor.submit(run, spec, p, s, agent=agent, policy_file=policy_file, beam_width=beam_width): (p, s)
                for p, s in jobs
            }
            for future in concurrent.futures.as_completed(futures):
                results[futures[future]] = future.result()

    grouped = {p: [results[(p, s)] for s in seeds] for p in policies}
    for (p, s), result in sorted(results.items()):
        emit_outputs(result, os.path.join(out_dir, f"{p}_seed{s}"))
    for p, runs in grouped.items():
        first = runs[0]
        write_csv_frame(os.path.join(out_dir, f"fig_carbon_trace_{p}.csv"), carbon_trace_frame(first))
        write_csv_frame(os.path.join(out_dir, f"fig_energy_breakdown_{p}.csv"), energy_breakdown_frame(first.kpis))
        write_csv_frame(os.path.join(out_dir, f"fig_latency_event_{p}.csv"), latency_event_frame(first))

    report = build_comparison(grouped, reference if reference in grouped else policies[0])
    emit_outputs(report, out_dir)
    return report
