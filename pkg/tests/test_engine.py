import numpy as np
import pytest

from isatn_sim.models.enums import MODE_CODES, ActionKind, Band, BackhaulKind, SleepMode, UavMode
from isatn_sim.models.orchestration import Action
from isatn_sim.services.candidate_service import static_config
from isatn_sim.services.engine_service import build_config, initial_state, simulate_hours, step
from isatn_sim.utils.error_handlers import InvalidParameter

from conftest import ConstantInputs

TICK_S = 15 * 60
DEMAND = np.array([
    [5e7 * TICK_S, 1e7 * TICK_S, 2e8],
    [2e7 * TICK_S, 0.0, 2e8],
])
INTENSITY = [100.0, 400.0]
RENEWABLE = [0.8, 0.1]

def _state(topology, demand=DEMAND, config=None, t=0, rain_db=None):
    source = ConstantInputs(demand, INTENSITY, RENEWABLE, rain_db)
    return initial_state(topology, source, config or static_config(topology), t)

def _routed_to(topology, gateway):
    static = static_config(topology)
    return build_config(
        zone_gateway={z.id: gateway for z in topology.zones},
        active_uavs={},
        small_cell_sleep={},
        macro_power_mode={},
        edge_placement={s: gateway for s in static.edge_placement},
        satellite_handover={},
    )

def test_every_tick_conserves_energy(tiny_topology):
    state = _state(tiny_topology)
    for _ in range(12):
        state, kpi = step(state)
        total = sum(kpi.layer_kwh)
        assert sum(kpi.region_kwh) == pytest.approx(total, rel=1e-9)
        assert kpi.total_kwh == pytest.approx(float(state.element_power_w.sum()) * 0.25 / 1000.0, rel=1e-9)
        assert all(s <= o * (1 + 1e-12) for s, o in zip(kpi.served_bits, kpi.offered_bits))
        assert 0.0 <= kpi.renewable_kwh <= total
        assert kpi.emissions_g == pytest.approx(float(np.dot(kpi.region_kwh, INTENSITY)), rel=1e-12)

def test_clock_and_ledger_advance(tiny_topology):
    state = _state(tiny_topology)
    next_state, kpi = step(state)
    assert (kpi.tick_minute, next_state.t, kpi.duration_minutes) == (0, 15, 15)
    assert next_state.ledger.total_kwh == pytest.approx(kpi.total_kwh)
    assert state.t == 0

def test_urllc_is_served_before_embb(tiny_topology):
    demand = np.array([[1e12, 1e7 * TICK_S, 0.0], [0.0, 0.0, 0.0]])
    _, kpi = step(_state(tiny_topology, demand))
    assert kpi.served_bits[1] == kpi.offered_bits[1]
    assert kpi.served_bits[0] < kpi.offered_bits[0]
    assert kpi.sla_violations[0] == 1
    assert kpi.latency_p95_ms[1] < 5.0

def test_idle_gateway_and_edge_fall_into_deep_sleep(tiny_topology):
    next_state, _ = step(_state(tiny_topology, config=_routed_to(tiny_topology, "gw-a")))
    top = tiny_topology
    gw_b = top.gateway_offset + 1
    assert next_state.element_power_w[gw_b] == pytest.approx(200.0 * 1.3)
    assert next_state.element_modes[gw_b] == MODE_CODES[SleepMode.DEEP_SLEEP]
    assert next_state.element_power_w[top.edge_element[1]] == pytest.approx(40.0 * 1.3)
    assert next_state.element_power_w[top.gateway_offset] >= 4000.0 * 1.3

def test_sleeping_cells_draw_sleep_power(tiny_topology):
    static = static_config(tiny_topology)
    smalls = [s.id for s in tiny_topology.sites if s.kind.value == "small"]
    config = build_config(**{**static.dict(exclude={"knobs"}), "small_cell_sleep": {sid: SleepMode.DEEP_SLEEP for sid in smalls}})
    next_state, _ = step(_state(tiny_topology, config=config))
    for sid in smalls:
        e = tiny_topology.site_index[sid]
        assert next_state.element_power_w[e] == pytest.approx(4.5)

def test_uav_hover_and_recall(tiny_topology):
    top = tiny_topology
    uav = top.uav_offset
    z_a = top.zone_index["z-a"]

    state, _ = step(_state(top))
    assert state.element_modes[uav] == MODE_CODES[UavMode.HOVER]
    # first tick: two minutes of transit then hover
    assert state.element_power_w[uav] == pytest.approx((400.0 * 2 + 800.0 * 13) / 15.0)

    state, _ = step(state)
    assert state.element_power_w[uav] == pytest.approx(800.0)
    on_station = state.last_capacity_bps[z_a]

    state, kpi = step(state, Action(kind=ActionKind.DEACTIVATE_UAV, params={"uav": "uav-01"}))
    assert kpi.actions == ("deactivate_uav",)
    assert state.element_power_w[uav] < 800.0
    assert state.element_modes[uav] != MODE_CODES[UavMode.HOVER]
    assert state.last_capacity_bps[z_a] < on_station
    assert "uav-01" not in state.config.active_uavs

def test_grounded_uav_draws_nothing(tiny_topology):
    state, _ = step(_state(tiny_topology))
    second = tiny_topology.uav_offset + 1
    assert state.element_power_w[second] == 0.0
    assert state.element_modes[second] == MODE_CODES[UavMode.GROUNDED]


def test_battery_stays_above_reserve_less_one_return_leg(tiny_topology):
    state = _state(tiny_topology)
    capacity = tiny_topology.uavs[0].capacity_wh
    return_leg_wh = 400.0 * 2.0 / 60.0
    for _ in range(40):
        state, _ = step(state)
        assert np.all(state.uav.battery_wh >= 0.3 * capacity - return_leg_wh - 1e-6)
        assert np.all(state.uav.airborne_min <= 4.0 * 60.0 + 1e-6)
    assert state.uav.swaps >= 1


def test_no_op_matches_no_action(tiny_topology):
    state = _state(tiny_topology)
    _, with_no_op = step(state, Action())
    _, without = step(state)
    assert with_no_op == without
    assert with_no_op.actions == ()

def test_reroute_changes_the_serving_gateway(tiny_topology):
    action = Action(kind=ActionKind.REROUTE_ZONE_TO_GATEWAY, params={"zone": "z-a", "gateway": "gw-b"})
    state, kpi = step(_state(tiny_topology), action)
    assert state.config.zone_gateway["z-a"] == "gw-b"
    assert kpi.actions == ("reroute_zone_to_gateway",)

def test_unknown_entity_in_action(tiny_topology):
    action = Action(kind=ActionKind.REROUTE_ZONE_TO_GATEWAY, params={"zone": "z-a", "gateway": "gw-z"})
    with pytest.raises(InvalidParameter):
        step(_state(tiny_topology), action)

def test_hour_configs_start_on_the_hour(tiny_topology):
    with pytest.raises(InvalidParameter):
        simulate_hours(_state(tiny_topology, t=15), [static_config(tiny_topology)])

def test_simulate_hours_steps_every_tick(tiny_topology):
    config = static_config(tiny_topology)
    state, kpis = simulate_hours(_state(tiny_topology), [config, config])
    assert [k.tick_minute for k in kpis] == list(range(0, 120, 15))
    assert state.t == 120

def test_rain_fade_cuts_satellite_backhaul(default_topology):
    top = default_topology
    z = next(i for i, zone in enumerate(top.zones) if zone.backhaul == BackhaulKind.SATELLITE)
    demand = np.zeros((top.n_zones, 3))
    demand[z, 0] = 1e10 * 60.0
    config = static_config(top)

    for t in range(0, 24 * 60, 7):
        clear_state = initial_state(top, ConstantInputs(demand, INTENSITY, RENEWABLE), config, t)
        _, clear = step(clear_state)
        if clear.served_bits[0] > 0:
            break
    else:
        pytest.fail("satellite-backed zone never served in a day")

    rain = {Band.KA: 15.0, Band.MICROWAVE_BACKHAUL: 15.0}
    rainy_state = initial_state(top, ConstantInputs(demand, INTENSITY, RENEWABLE, rain), config, t)
    next_state, rainy = step(rainy_state)
    assert rainy.served_bits[0] < clear.served_bits[0]
    assert rainy.latency_p95_all_ms >= clear.latency_p95_all_ms
    assert next_state.rain_active
    assert next_state.last_rain_db == rain
