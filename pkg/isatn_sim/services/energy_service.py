import logging
from typing import Iterable, Union

import numpy as np

from ..models.energy import EnergyLedger, PowerProfile
from ..models.enums import LAYERS, ElementKind, SleepMode, UavMode
from ..utils.error_handlers import EmptyRun, InvalidMode, InvalidParameter, ZeroTraffic
from .environment_service import CarbonTrace, _trace_hour

logger = logging.getLogger(__name__)

BITS_PER_GB = 8e9

def element_power_w(profile: PowerProfile, mode: Union[SleepMode, UavMode], load_bps: float = 0.0) -> float:
    """Draw of one element in `mode`; the load term applies only while active."""
    if profile.element_kind == ElementKind.UAV:
        uav_modes = {
            UavMode.HOVER: profile.uav_hover_w,
            UavMode.CRUISE: profile.uav_cruise_w,
            UavMode.STANDBY: profile.deep_sleep_w,
            UavMode.GROUNDED: profile.off_w,
            SleepMode.OFF: profile.off_w,
        }
        if mode not in uav_modes:
            raise InvalidMode(f"Mode '{mode.value}' is not valid for a UAV", field="mode")
        return float(uav_modes[mode])

    if isinstance(mode, UavMode):
        raise InvalidMode(f"Mode '{mode.value}' is only valid for UAVs, not {profile.element_kind.value}",
                          field="mode")
    if mode == SleepMode.ACTIVE:
        return float(profile.active_w + (profile.load_slope_w_per_bps or 0.0) * max(load_bps, 0.0))
    if mode == SleepMode.MICRO_SLEEP:
        return float(profile.micro_sleep_w)
    if mode == SleepMode.DEEP_SLEEP:
        return float(profile.deep_sleep_w)
    return float(profile.off_w)

def ledger_from_power(
    power_w: np.ndarray,
    layer_index: np.ndarray,
    region_index: np.ndarray,
    n_regions: int,
    duration_h: float,
    epoch: int = 0,
) -> EnergyLedger:
    kwh = power_w * duration_h / 1000.0
    layer_kwh = np.bincount(layer_index, weights=kwh, minlength=len(LAYERS))
    region_kwh = np.bincount(region_index, weights=kwh, minlength=n_regions)
    return EnergyLedger(
        epoch=epoch,
        layer_kwh=tuple(float(x) for x in layer_kwh),
        region_kwh=tuple(float(x) for x in region_kwh),
        total_kwh=float(kwh.sum()),
    )

def step_energy(state, duration_h: float) -> EnergyLedger:
    """Energy of the state's current element draws held for `duration_h` hours."""
    if duration_h <= 0:
        raise InvalidParameter(f"duration_h must be > 0, got {duration_h}", field="duration_h")
    topology = state.topology
    return ledger_from_power(
        state.element_power_w, topology.element_layer, state.element_region, topology.n_regions,
        duration_h, epoch=state.t,
    )

def emissions_for(region_kwh, intensity, renewable) -> tuple:
    region_kwh = np.asarray(region_kwh, dtype=float)
    emissions = float(region_kwh @ np.asarray(intensity, dtype=float))
    renewable_kwh = float(region_kwh @ np.asarray(renewable, dtype=float))
    return emissions, renewable_kwh

def step_emissions(ledger: EnergyLedger, trace: CarbonTrace, t: float) -> tuple:
    """(emissions_g, renewable_kwh) of a ledger whose region order matches the trace."""
    h = _trace_hour(trace, t)
    return emissions_for(ledger.region_kwh, trace.intensity[h], trace.renewable[h])

def gco2_per_gb(emissions_g: float, bits_delivered: float) -> float:
    if bits_delivered <= 0:
        raise ZeroTraffic("No bits delivered; gCO2/GB is undefined", field="bits_delivered")
    return emissions_g / (bits_delivered / BITS_PER_GB)

def renewable_utilization(ledgers: Iterable[EnergyLedger]) -> float:
    ledgers = list(ledgers)
    total = sum(l.total_kwh for l in ledgers)
    if not ledgers or total <= 0:
        raise EmptyRun("Run consumed no energy; renewable utilization is undefined")
    return float(min(max(sum(l.renewable_kwh for l in ledgers) / total, 0.0), 1.0))
