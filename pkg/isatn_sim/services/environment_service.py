import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from ..data.loader import load_csv_frame, write_csv_frame
from ..models.enums import TRAFFIC_CLASSES, Band, TrafficClass, ZoneClass
from ..models.environment import CarbonTracePoint, RainEvent, TrafficDemand
from ..models.scenario import RegionProfile, ScenarioSpec
from ..models.simulation import TickInputs
from ..utils.error_handlers import ConfigError, GapError, OutOfRange, ParseError, RangeError

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["hour", "region", "intensity_gco2_per_kwh", "renewable_fraction"]
# Epoch offset keeps warm-up (negative) epochs on valid seed words
EPOCH_SEED_OFFSET = 1_000_000
CARBON_STREAM = 7

# ---------------------------------------------------------------- traffic

def _diurnal_shape(hour_of_day: float, trough_hour: float, peak_hour: float) -> float:
    """0 at the trough, 1 at the peak; cosine ramps on both sides."""
    rise = (peak_hour - trough_hour) % 24.0 or 24.0
    since_trough = (hour_of_day - trough_hour) % 24.0
    if since_trough <= rise:
        return 0.5 * (1.0 - math.cos(math.pi * since_trough / rise))
    fall = 24.0 - rise
    return 0.5 * (1.0 + math.cos(math.pi * (since_trough - rise) / fall))

def _work_hours_weight(hour_of_day: float) -> float:
    return max(0.0, math.sin(math.pi * (hour_of_day - 8.0) / 10.0)) if 8.0 <= hour_of_day <= 18.0 else 0.0

def embb_rate_bps(spec: ScenarioSpec, zone_class: ZoneClass, t_hours: float) -> float:
    """Noise-free eMBB rate for a zone class at absolute time `t_hours`."""
    p = spec.traffic_profiles.embb
    hour_of_day = t_hours % 24.0
    rate = p.peak_bps.get(zone_class, 0.0) * (
        p.trough_ratio + (1.0 - p.trough_ratio) * _diurnal_shape(hour_of_day, p.trough_hour, p.peak_hour)
    )
    # commuter flows move load into urban zones during working hours
    work = _work_hours_weight(hour_of_day)
    if zone_class == ZoneClass.URBAN:
        rate *= 1.0 + p.commuter_amplitude * work
    elif zone_class == ZoneClass.SUBURBAN:
        rate *= 1.0 - p.commuter_amplitude * work
    return rate

def traffic_rng(seed: int, epoch: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(epoch) + EPOCH_SEED_OFFSET])

def traffic_epoch_bits(spec: ScenarioSpec, epoch: int, rng: np.random.Generator) -> np.ndarray:
    """Offered bits for one epoch as a zone x class array (class order: TRAFFIC_CLASSES)."""
    profiles = spec.traffic_profiles
    minutes = spec.epoch_minutes
    seconds = minutes * 60.0
    t_hours = epoch * minutes / 60.0
    zones = spec.ran.zones
    n = len(zones)

    embb_noise = rng.uniform(-1.0, 1.0, n)
    urllc_noise = rng.uniform(-1.0, 1.0, n)
    lam = np.array([profiles.miot.batches_per_hour.get(z.zone_class, 0.0) for z in zones]) * minutes / 60.0
    batches = rng.poisson(lam)

    surge = profiles.surge
    surge_active = surge is not None and surge.start_hour <= t_hours < surge.end_hour

    bits = np.zeros((n, len(TRAFFIC_CLASSES)))
    for i, zone in enumerate(zones):
        embb = embb_rate_bps(spec, zone.zone_class, t_hours) * (1.0 + profiles.embb.noise * embb_noise[i])
        urllc = profiles.urllc.rate_bps * (1.0 + profiles.urllc.noise * urllc_noise[i]) if zone.industrial else 0.0
        rates = [embb, urllc]
        if surge_active and zone.zone_class == surge.zone_class:
            k = TRAFFIC_CLASSES.index(surge.traffic_class)
            if k < 2:
                rates[k] *= surge.multiplier
        bits[i, 0] = max(rates[0], 0.0) * seconds
        bits[i, 1] = max(rates[1], 0.0) * seconds
        bits[i, 2] = batches[i] * profiles.miot.batch_bits
    return bits

def generate_traffic(spec: ScenarioSpec, epoch: int, rng_stream: np.random.Generator) -> list[TrafficDemand]:
    bits = traffic_epoch_bits(spec, epoch, rng_stream)
    demands = []
    for i, zone in enumerate(spec.ran.zones):
        for k, traffic_class in enumerate(TRAFFIC_CLASSES):
            demands.append(TrafficDemand(
                epoch=epoch,
                zone=zone.id,
                traffic_class=traffic_class,
                offered_bits=float(bits[i, k]),
                latency_target_ms=spec.sla.urllc_latency_ms if traffic_class == TrafficClass.URLLC else None,
            ))
    return demands

def traffic_matrix(spec: ScenarioSpec, seed: int, first_epoch: int, n_epochs: int) -> np.ndarray:
    """Epoch x zone x class offered bits; each epoch draws from its own seeded stream."""
    return np.stack([
        traffic_epoch_bits(spec, e, traffic_rng(seed, e)) for e in range(first_epoch, first_epoch + n_epochs)
    ]) if n_epochs > 0 else np.zeros((0, len(spec.ran.zones), len(TRAFFIC_CLASSES)))

def hourly_traffic(spec: ScenarioSpec, seed: int, first_hour: int, hours: int) -> np.ndarray:
    """Hour x zone x class offered bits."""
    per_hour = spec.ticks_per_hour
    epochs = traffic_matrix(spec, seed, first_hour * per_hour, hours * per_hour)
    return epochs.reshape(hours, per_hour, *epochs.shape[1:]).sum(axis=1)

# ---------------------------------------------------------------- carbon

def intensity_from_renewable(renewable_fraction, base_intensity: float = 450.0, floor_intensity: float = 50.0):
    return base_intensity * (1.0 - np.asarray(renewable_fraction)) + floor_intensity

def _renewable_profile(profile: RegionProfile, hour_of_day: np.ndarray) -> np.ndarray:
    solar = np.maximum(0.0, np.sin(np.pi * (hour_of_day - 6.0) / 12.0))
    evening = np.exp(-((hour_of_day - 19.5) ** 2) / 8.0)
    return profile.base_renewable + profile.solar_amplitude * solar + profile.evening_amplitude * evening

def synth_carbon_trace(profile: RegionProfile, days: int, rng_stream: np.random.Generator) -> list[CarbonTracePoint]:
    """Hourly renewable share with a daily shape and bounded noise."""
    if days < 1:
        raise RangeError(f"days must be >= 1, got {days}", field="days")
    hours = np.arange(days * 24)
    noise = rng_stream.uniform(-profile.noise, profile.noise, hours.size)
    renewable = np.clip(_renewable_profile(profile, (hours % 24).astype(float)) + noise, 0.0, 1.0)
    intensity = intensity_from_renewable(renewable, profile.base_intensity, profile.floor_intensity)
    return [
        CarbonTracePoint(hour=int(h), region=profile.id, intensity_gco2_per_kwh=float(intensity[h]),
                         renewable_fraction=float(renewable[h]))
        for h in hours
    ]

@dataclass(frozen=True, eq=False)
class CarbonTrace:
    """Hourly carbon signal per region as hour x region arrays."""
    regions: tuple
    intensity: np.ndarray
    renewable: np.ndarray

    @property
    def hours(self) -> int:
        return self.intensity.shape[0]

    def region_index(self, region: str) -> int:
        try:
            return self.regions.index(region)
        except ValueError:
            raise OutOfRange(f"Region '{region}' is not in the carbon trace", field="region")

    def scaled(self, factor: float) -> "CarbonTrace":
        return CarbonTrace(self.regions, self.intensity * factor, self.renewable)

    def window(self, first_hour: int, hours: int) -> "CarbonTrace":
        if first_hour < 0 or first_hour + hours > self.hours:
            raise OutOfRange(f"Hours [{first_hour}, {first_hour + hours}) exceed the trace of {self.hours} h",
                             field="hours")
        span = slice(first_hour, first_hour + hours)
        return CarbonTrace(self.regions, self.intensity[span], self.renewable[span])

    def reordered(self, regions: list[str]) -> "CarbonTrace":
        idx = [self.region_index(r) for r in regions]
        return CarbonTrace(tuple(regions), self.intensity[:, idx], self.renewable[:, idx])

    def points(self) -> list[CarbonTracePoint]:
        return [
            CarbonTracePoint(hour=h, region=r, intensity_gco2_per_kwh=float(self.intensity[h, j]),
                             renewable_fraction=float(self.renewable[h, j]))
            for h in range(self.hours) for j, r in enumerate(self.regions)
        ]

    @classmethod
    def from_points(cls, points: list[CarbonTracePoint]) -> "CarbonTrace":
        regions = list(dict.fromkeys(p.region for p in points))
        hours = max((p.hour for p in points), default=-1) + 1
        intensity = np.zeros((hours, len(regions)))
        renewable = np.zeros((hours, len(regions)))
        for p in points:
            j = regions.index(p.region)
            intensity[p.hour, j] = p.intensity_gco2_per_kwh
            renewable[p.hour, j] = p.renewable_fraction
        return cls(tuple(regions), intensity, renewable)

def load_carbon_trace(path: str) -> list[CarbonTracePoint]:
    """Read a carbon trace CSV; hours must be contiguous from 0 for every region."""
    frame = load_csv_frame(path, TRACE_COLUMNS)
    try:
        hours = frame["hour"].astype("int64")
        regions = frame["region"].astype(str)
        intensity = frame["intensity_gco2_per_kwh"].astype(float)
        renewable = frame["renewable_fraction"].astype(float)
    except (ValueError, TypeError) as e:
        raise ParseError(f"Non-numeric values in {path}", details=str(e))

    bad = frame.index[(renewable < 0) | (renewable > 1)]
    if len(bad):
        row = bad[0]
        raise RangeError(
            f"renewable_fraction {renewable[row]} outside [0, 1] at hour {hours[row]}, region '{regions[row]}'",
            field="renewable_fraction",
        )
    bad = frame.index[intensity < 0]
    if len(bad):
        row = bad[0]
        raise RangeError(f"Negative intensity at hour {hours[row]}, region '{regions[row]}'",
                         field="intensity_gco2_per_kwh")

    if frame.duplicated(subset=["hour", "region"]).any():
        row = frame.index[frame.duplicated(subset=["hour", "region"])][0]
        raise ParseError(f"Duplicate row for hour {hours[row]}, region '{regions[row]}' in {path}")

    region_order = list(dict.fromkeys(regions))
    horizon = int(hours.max()) + 1 if len(hours) else 0
    if len(hours) and hours.min() < 0:
        raise GapError(f"Negative hour {int(hours.min())} in {path}", field="hour")
    present = set(zip(hours.tolist(), regions.tolist()))
    for h in range(horizon):
        for region in region_order:
            if (h, region) not in present:
                raise GapError(f"Missing hour {h} for region '{region}' in {path}", field="hour",
                               details=f"hour={h}, region={region}")

    points = [
        CarbonTracePoint(hour=int(h), region=r, intensity_gco2_per_kwh=float(i), renewable_fraction=float(f))
        for h, r, i, f in zip(hours, regions, intensity, renewable)
    ]
    points.sort(key=lambda p: (p.hour, region_order.index(p.region)))
    logger.info(f"Loaded carbon trace {path}: {horizon} hours x {len(region_order)} regions")
    return points

def dump_carbon_trace(points: list[CarbonTracePoint], path: str) -> str:
    frame = pd.DataFrame(
        [[p.hour, p.region, p.intensity_gco2_per_kwh, p.renewable_fraction] for p in points],
        columns=TRACE_COLUMNS,
    )
    return write_csv_frame(path, frame)

def synthetic_trace(spec: ScenarioSpec, seed: int, days: Optional[int] = None) -> CarbonTrace:
    days = days or spec.days
    points = []
    for j, profile in enumerate(spec.carbon_source.regions):
        points.extend(synth_carbon_trace(profile, days, np.random.default_rng([int(seed), j, CARBON_STREAM])))
    return CarbonTrace.from_points(points).reordered(spec.region_ids)

def resolve_carbon_trace(spec: ScenarioSpec, seed: int) -> CarbonTrace:
    """Carbon trace from the scenario's file when given, otherwise synthesised."""
    if spec.carbon_source.path is None:
        return synthetic_trace(spec, seed)

    trace = CarbonTrace.from_points(load_carbon_trace(spec.carbon_source.path))
    missing = [r for r in spec.region_ids if r not in trace.regions]
    if missing:
        raise ConfigError(f"Carbon trace {spec.carbon_source.path} lacks regions {missing}", field="carbon_source.path")
    if trace.hours < spec.horizon_hours:
        raise ConfigError(
            f"Carbon trace covers {trace.hours} hours, scenario needs {spec.horizon_hours}",
            field="carbon_source.path",
        )
    return trace.reordered(spec.region_ids)

def _trace_hour(trace: CarbonTrace, t: float) -> int:
    if t < 0 or t >= trace.hours * 60:
        raise OutOfRange(f"t={t} min is outside the trace horizon of {trace.hours} h", field="t")
    return int(t // 60)

def carbon_intensity_at(trace: CarbonTrace, region: str, t: float) -> float:
    """Hold-over-hour intensity at `t` minutes."""
    return float(trace.intensity[_trace_hour(trace, t), trace.region_index(region)])

def renewable_share_at(trace: CarbonTrace, region: str, t: float) -> float:
    return float(trace.renewable[_trace_hour(trace, t), trace.region_index(region)])

# ---------------------------------------------------------------- weather

def rain_attenuation_db(events: list[RainEvent], band: Band, t: float) -> float:
    """Summed attenuation of the events active at `t` minutes on `band`."""
    return float(sum(e.attenuation_db for e in events if band in e.affected_bands and e.active_at(t)))

def rain_state(events: list[RainEvent], t: float) -> dict:
    return {band: rain_attenuation_db(events, band, t) for band in (Band.KA, Band.MICROWAVE_BACKHAUL)}

def randomized_rain(events: list[RainEvent], days: int, rng: np.random.Generator) -> list[RainEvent]:
    """Same-length events moved to a random day and start hour."""
    shifted = []
    for e in events:
        length = e.end_hour - e.start_hour
        start = float(rng.integers(0, days) * 24 + rng.integers(0, max(1, int(24 - length) + 1)))
        shifted.append(e.copy(update={"start_hour": start, "end_hour": start + length}))
    return shifted

# ---------------------------------------------------------------- realized inputs

class RealizedInputs:
    """Ground-truth exogenous inputs of one run: generated traffic, the carbon trace and scheduled rain.

    Traffic is generated per day on first use. Instances belong to a single run.
    """

    def __init__(self, spec: ScenarioSpec, seed: int, trace: CarbonTrace, rain_events: Optional[list] = None):
        self.spec = spec
        self.seed = int(seed)
        self.trace = trace
        self.rain_events = list(spec.rain_events if rain_events is None else rain_events)
        self._epochs_per_day = 24 * spec.ticks_per_hour
        self._days: dict = {}

    def _day(self, day: int) -> np.ndarray:
        if day not in self._days:
            self._days[day] = traffic_matrix(self.spec, self.seed, day * self._epochs_per_day, self._epochs_per_day)
        return self._days[day]

    def demand_bits(self, t: int, minutes: int) -> np.ndarray:
        step = self.spec.epoch_minutes
        first = t // step
        count = max(1, minutes // step)
        day, offset = divmod(first, self._epochs_per_day)
        block = self._day(day)
        if offset + count <= self._epochs_per_day:
            return block[offset:offset + count].sum(axis=0)
        return sum(self.demand_bits((first + k) * step, step) for k in range(count))

    def hourly_traffic(self, first_hour: int, hours: int) -> np.ndarray:
        """Hour x zone x class bits, as observed by the engine."""
        return np.stack([self.demand_bits((first_hour + h) * 60, 60) for h in range(hours)])

    def inputs_at(self, t: int, minutes: int):
        h = _trace_hour(self.trace, t)
        return TickInputs(
            demand_bits=self.demand_bits(t, minutes),
            intensity=self.trace.intensity[h],
            renewable=self.trace.renewable[h],
            rain_db=rain_state(self.rain_events, t),
        )
