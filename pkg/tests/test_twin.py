import numpy as np
import pytest

from isatn_sim.models.enums import SleepMode
from isatn_sim.services.candidate_service import static_config
from isatn_sim.services.engine_service import build_config
from isatn_sim.services.environment_service import CarbonTrace
from isatn_sim.services.twin_service import (
    ForecastInputs,
    evaluate_plan,
    forecast_carbon,
    forecast_traffic,
    planning_spec,
)
from isatn_sim.utils.error_handlers import HorizonMismatch, InsufficientHistory

from conftest import COASTAL, INLAND, hourly_forecast, root_state

def routed_plan(topology, gateway, hours=12):
    static = static_config(topology)
    config = build_config(
        zone_gateway={z.id: gateway for z in topology.zones},
        active_uavs={},
        small_cell_sleep={},
        macro_power_mode={},
        edge_placement={s: gateway for s in static.edge_placement},
        satellite_handover={},
    )
    return [config] * hours

# ---------------------------------------------------------------- forecasting

def test_periodic_traffic_is_forecast_exactly():
    rng = np.random.default_rng(3)
    day = rng.uniform(0.0, 1e9, (24, 2, 3))
    forecast = forecast_traffic(np.tile(day, (3, 1, 1)), 24, start_hour=72)
    assert forecast.horizon_hours == 24
    assert forecast.start_hour == 72
    assert np.allclose(np.asarray(forecast.traffic_bits), day, rtol=1e-12)

def test_traffic_forecast_follows_a_level_shift():
    history = np.concatenate([np.ones((24, 1, 1)), np.full((12, 1, 1), 3.0)])
    forecast = np.asarray(forecast_traffic(history, 12).traffic_bits)
    assert forecast[0, 0, 0] == pytest.approx(1.0 + 0.6 * (1.0 - 0.7 ** 12), rel=1e-12)
    assert forecast[0, 0, 0] == pytest.approx(1.5917, abs=1e-4)

def test_traffic_forecast_needs_a_day_of_history():
    with pytest.raises(InsufficientHistory):
        forecast_traffic(np.ones((10, 2, 3)), 12)

def test_periodic_carbon_is_forecast_exactly():
    hours = np.arange(48) % 24
    intensity = np.stack([300.0 - 10.0 * np.sin(hours), 420.0 + hours], axis=1)
    renewable = np.stack([0.5 + 0.2 * np.sin(hours), np.full(48, 0.1)], axis=1)
    forecast = forecast_carbon(CarbonTrace((COASTAL, INLAND), intensity, renewable), 24, start_hour=48)
    assert forecast.region_ids == [COASTAL, INLAND]
    assert np.array_equal(np.asarray(forecast.carbon_intensity), intensity[:24])
    assert np.allclose(np.asarray(forecast.renewable_share), renewable[:24])

def test_carbon_forecast_clamps_renewable_share():
    intensity = np.full((24, 1), 200.0)
    renewable = np.full((24, 1), 1.3)
    forecast = forecast_carbon(CarbonTrace((COASTAL,), intensity, renewable), 12)
    assert max(v for row in forecast.renewable_share for v in row) <= 1.0

def test_carbon_forecast_keeps_the_midday_dip():
    hours = np.arange(48) % 24
    coastal = np.where((hours >= 11) & (hours <= 14), 120.0, 380.0)
    trace = CarbonTrace((COASTAL,), coastal[:, None], np.zeros((48, 1)))
    predicted = np.asarray(forecast_carbon(trace, 24).carbon_intensity)[:, 0]
    assert predicted.argmin() in range(11, 15)
    assert predicted[12] < predicted[6]

def test_carbon_forecast_needs_a_day_of_trace():
    trace = CarbonTrace((COASTAL,), np.ones((10, 1)), np.zeros((10, 1)))
    with pytest.raises(InsufficientHistory):
        forecast_carbon(trace, 12)

# ---------------------------------------------------------------- what-if evaluation

def test_plan_longer_than_forecast(tiny_spec, tiny_topology):
    with pytest.raises(HorizonMismatch):
        evaluate_plan(planning_spec(tiny_spec), root_state(tiny_topology), routed_plan(tiny_topology, "gw-a", 13),
                      hourly_forecast(12))

def test_forecast_inputs_reject_ticks_outside_the_window(tiny_spec):
    source = ForecastInputs(planning_spec(tiny_spec), hourly_forecast(12, start_hour=24))
    assert source.inputs_at(24 * 60, 60).demand_bits.shape == (2, 3)
    with pytest.raises(HorizonMismatch):
        source.inputs_at(0, 60)
    with pytest.raises(HorizonMismatch):
        source.inputs_at(36 * 60, 60)

def test_evaluation_leaves_the_start_state_alone(tiny_spec, tiny_topology):
    state = root_state(tiny_topology)
    battery = state.uav.battery_wh.copy()
    evaluate_plan(planning_spec(tiny_spec), state, [static_config(tiny_topology)] * 12, hourly_forecast(12))
    assert state.t == 0
    assert state.spec.epoch_minutes == 15
    assert state.ledger.total_kwh == 0.0
    assert np.array_equal(state.uav.battery_wh, battery)

def test_everything_off_serves_nothing(tiny_spec, tiny_topology):
    off = {site.id: SleepMode.OFF for site in tiny_topology.sites}
    config = build_config(
        zone_gateway={"z-a": "gw-a", "z-b": "gw-b"},
        active_uavs={},
        small_cell_sleep=off,
        macro_power_mode={},
        edge_placement={"urllc-compute": "gw-a", "embb-cache": "gw-a"},
        satellite_handover={},
    )
    result = evaluate_plan(planning_spec(tiny_spec), root_state(tiny_topology), [config] * 12, hourly_forecast(12))
    assert all(v == 0.0 for v in result.served_fraction.values())
    assert result.energy_kwh_by_layer["ran"] == 0.0
    assert result.energy_kwh_by_layer["uav"] == 0.0
    assert result.emissions_g > 0.0
    assert result.sla_violations > 0
    assert result.risk_hours == list(range(12))

def test_routing_to_the_cleaner_region_emits_less(tiny_spec, tiny_topology):
    planning = planning_spec(tiny_spec)
    forecast = hourly_forecast(12)
    coastal = evaluate_plan(planning, root_state(tiny_topology), routed_plan(tiny_topology, "gw-a"), forecast)
    inland = evaluate_plan(planning, root_state(tiny_topology), routed_plan(tiny_topology, "gw-b"), forecast)
    assert coastal.emissions_g < inland.emissions_g
    assert coastal.total_kwh == pytest.approx(inland.total_kwh, rel=0.05)

def test_planning_spec_coarsens_the_tick(tiny_spec):
    planning = planning_spec(tiny_spec)
    assert planning.epoch_minutes == 60
    assert planning.ticks_per_hour == 1
    assert tiny_spec.epoch_minutes == 15
    assert planning_spec(planning) is planning
