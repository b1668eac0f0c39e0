import os
from dataclasses import replace

import numpy as np
import pytest

from isatn_sim.models.enums import ACTION_KINDS, ActionKind
from isatn_sim.models.orchestration import DayPlan, RlAgent
from isatn_sim.models.scenario import RlSpec
from isatn_sim.models.simulation import KpiRecord
from isatn_sim.services.candidate_service import static_config
from isatn_sim.services.engine_service import initial_state, step
from isatn_sim.services.rl_service import (
    RlController,
    feature_names,
    initial_agent,
    load_policy,
    policy_probabilities,
    random_agent,
    rl_act,
    rl_features,
    rl_update,
    save_policy,
    select_action,
    tick_reward,
)
from isatn_sim.utils.error_handlers import DimensionMismatch, MissingPolicyFile, ParseError

from conftest import ConstantInputs

TICK_S = 15 * 60
DEMAND = np.array([
    [5e7 * TICK_S, 1e7 * TICK_S, 2e8],
    [2e7 * TICK_S, 0.0, 2e8],
])
N_ACTIONS = len(ACTION_KINDS)

def _state(topology):
    source = ConstantInputs(DEMAND, [100.0, 400.0], [0.8, 0.1])
    return initial_state(topology, source, static_config(topology))

def _bias_only(agent):
    x = np.zeros(agent.n_features)
    x[agent.feature_names.index("bias")] = 1.0
    return x

def _flat_agent(topology, seed=0):
    agent = initial_agent(topology, RlSpec(), seed).with_exploration(0.0)
    return replace(agent, actor_weights=np.zeros_like(agent.actor_weights))

# ---------------------------------------------------------------- features

def test_feature_layout(tiny_topology):
    names = feature_names(tiny_topology)
    assert names == ("hour_sin", "hour_cos", "load_dev:z-a", "load_dev:z-b", "carbon:coastal", "carbon:inland",
                     "rain_active", "uav_available", "p95_latency", "bias")
    x = rl_features(_state(tiny_topology), None)
    assert x.shape == (len(names),)
    assert x[0] == pytest.approx(0.0, abs=1e-12)
    assert x[1] == pytest.approx(1.0)
    assert x[names.index("bias")] == 1.0

def test_features_stay_in_unit_range(tiny_topology):
    state = _state(tiny_topology)
    for _ in range(30):
        state, _ = step(state)
        x = rl_features(state, None)
        assert np.all(x >= -1.0)
        assert np.all(x <= 1.0)

def test_load_on_forecast_has_no_deviation(tiny_topology):
    state, _ = step(_state(tiny_topology))
    expected = (state.last_demand_bits.sum(axis=1) * 4.0).tolist()
    plan = DayPlan(configs=[static_config(tiny_topology)] * 12, expected_zone_bits=[expected] * 12)
    names = feature_names(tiny_topology)
    x = rl_features(state, plan)
    assert x[names.index("load_dev:z-a")] == pytest.approx(0.0, abs=1e-12)
    assert x[names.index("load_dev:z-b")] == pytest.approx(0.0, abs=1e-12)
    assert x[names.index("rain_active")] == 0.0

def test_load_above_forecast_is_positive(tiny_topology):
    state, _ = step(_state(tiny_topology))
    expected = (state.last_demand_bits.sum(axis=1) * 2.0).tolist()
    plan = DayPlan(configs=[static_config(tiny_topology)] * 12, expected_zone_bits=[expected] * 12)
    x = rl_features(state, plan)
    assert x[feature_names(tiny_topology).index("load_dev:z-a")] == pytest.approx(1.0)

# ---------------------------------------------------------------- sampling

def test_dominant_weight_wins(tiny_topology):
    agent = _flat_agent(tiny_topology)
    actor = agent.actor_weights.copy()
    actor[3, agent.feature_names.index("bias")] = 50.0
    agent = replace(agent, actor_weights=actor)
    x = _bias_only(agent)
    assert all(select_action(agent, x) == 3 for _ in range(200))

def test_flat_policy_is_uniform(tiny_topology):
    agent = _flat_agent(tiny_topology).with_rng(42)
    x = _bias_only(agent)
    counts = np.bincount([select_action(agent, x) for _ in range(8000)], minlength=N_ACTIONS)
    assert np.all(np.abs(counts - 1000) < 150)

def test_masked_actions_are_never_sampled(tiny_topology):
    agent = _flat_agent(tiny_topology).with_exploration(0.5).with_rng(1)
    x = _bias_only(agent)
    mask = [True, False, True, False, False, True, False, False]
    picks = {select_action(agent, x, mask) for _ in range(2000)}
    assert picks <= {0, 2, 5}
    assert policy_probabilities(agent, x, mask)[1] == 0.0

def test_greedy_takes_the_most_probable_action(tiny_topology):
    agent = _flat_agent(tiny_topology).with_exploration(0.5).with_rng(3)
    actor = agent.actor_weights.copy()
    actor[5, agent.feature_names.index("bias")] = 0.5
    agent = replace(agent, actor_weights=actor)
    x = _bias_only(agent)
    assert {select_action(agent, x, greedy=True) for _ in range(500)} == {5}

def test_greedy_ties_go_to_no_op(tiny_topology):
    agent = _flat_agent(tiny_topology)
    x = _bias_only(agent)
    assert select_action(agent, x, greedy=True) == ACTION_KINDS.index(ActionKind.NO_OP)
    mask = [i != ACTION_KINDS.index(ActionKind.NO_OP) for i in range(N_ACTIONS)]
    assert select_action(agent, x, mask, greedy=True) == int(np.flatnonzero(mask)[0])

def test_feature_length_is_checked(tiny_topology):
    agent = initial_agent(tiny_topology, RlSpec())
    with pytest.raises(DimensionMismatch):
        select_action(agent, np.zeros(agent.n_features + 1))
    with pytest.raises(DimensionMismatch):
        rl_update(agent, np.zeros(3), 0, 1.0, np.zeros(3))

def test_same_seed_same_decisions(tiny_topology):
    agent = initial_agent(tiny_topology, RlSpec()).with_exploration(0.3)
    x = _bias_only(agent)
    first = agent.with_rng(9)
    second = agent.with_rng(9)
    assert [select_action(first, x) for _ in range(100)] == [select_action(second, x) for _ in range(100)]

def test_acting_with_a_state_returns_parameters(tiny_topology):
    agent = _flat_agent(tiny_topology).with_rng(4)
    state = _state(tiny_topology)
    x = rl_features(state, None)
    for _ in range(50):
        action = rl_act(agent, x, state=state)
        assert action is not None
        if action.kind == ActionKind.ACTIVATE_UAV:
            assert action.params["uav"] == "uav-02"

def test_no_op_prior_dominates_a_fresh_agent(tiny_topology):
    agent = initial_agent(tiny_topology, RlSpec())
    p = policy_probabilities(agent, _bias_only(agent))
    assert p.argmax() == ACTION_KINDS.index(ActionKind.NO_OP)
    assert p.sum() == pytest.approx(1.0)

# ---------------------------------------------------------------- learning

def test_zero_td_error_changes_nothing(tiny_topology):
    agent = initial_agent(tiny_topology, RlSpec())
    x = _bias_only(agent)
    updated = rl_update(agent, x, 2, 0.0, x)
    assert np.array_equal(updated.actor_weights, agent.actor_weights)
    assert np.array_equal(updated.critic_weights, agent.critic_weights)

def test_positive_td_error_reinforces_the_action(tiny_topology):
    agent = initial_agent(tiny_topology, RlSpec())
    x = _bias_only(agent)
    before = policy_probabilities(agent, x)[5]
    updated = rl_update(agent, x, ActionKind.SLEEP_SMALL_CELLS, 1.0, np.zeros_like(x))
    assert policy_probabilities(updated, x)[5] > before
    updated = rl_update(agent, x, ActionKind.SLEEP_SMALL_CELLS, -1.0, np.zeros_like(x))
    assert policy_probabilities(updated, x)[5] < before

def test_critic_converges_to_the_discounted_return():
    agent = RlAgent(
        feature_names=("bias",),
        action_names=tuple(k.value for k in ACTION_KINDS),
        actor_weights=np.zeros((N_ACTIONS, 1)),
        critic_weights=np.zeros(1),
        gamma=0.99,
        alpha_critic=0.05,
    )
    x = np.ones(1)
    for _ in range(20000):
        agent = rl_update(agent, x, 0, 1.0, x)
    assert agent.critic_weights[0] == pytest.approx(100.0, rel=0.01)

def test_reward_is_negative_carbon_less_penalty():
    kpi = KpiRecord(
        tick_minute=0, duration_minutes=15, offered_bits=(8e9, 0.0, 0.0), served_bits=(8e9, 0.0, 0.0),
        latency_p95_ms=(10.0, 0.0, 0.0), latency_p95_all_ms=10.0, layer_kwh=(0.01, 0.0, 0.0, 0.0),
        region_kwh=(0.01, 0.0), emissions_g=3.2, renewable_kwh=0.0, sla_violations=(1, 1, 0),
    )
    assert tick_reward(kpi, 10.0) == pytest.approx(-23.2)

def test_reward_without_traffic_is_only_the_penalty():
    kpi = KpiRecord(
        tick_minute=0, duration_minutes=15, offered_bits=(0.0, 0.0, 0.0), served_bits=(0.0, 0.0, 0.0),
        latency_p95_ms=(0.0, 0.0, 0.0), latency_p95_all_ms=0.0, layer_kwh=(0.01, 0.0, 0.0, 0.0),
        region_kwh=(0.01, 0.0), emissions_g=3.2, renewable_kwh=0.0, sla_violations=(0, 0, 0),
    )
    assert tick_reward(kpi, 10.0) == 0.0

# ---------------------------------------------------------------- controller

def test_frozen_controller_keeps_its_agent(tiny_topology):
    agent = initial_agent(tiny_topology, RlSpec())
    controller = RlController(agent, reward_lambda=10.0, learn=False)
    state = _state(tiny_topology)
    for _ in range(4):
        action = controller.decide(state)
        next_state, kpi = step(state, action)
        controller.observe(state, action, kpi, next_state)
        state = next_state
    assert controller.agent is agent

def test_frozen_controller_acts_greedily(tiny_topology):
    # a fresh agent's no_op prior makes greedy inference a pure pass-through
    controller = RlController(initial_agent(tiny_topology, RlSpec()).with_exploration(0.0), reward_lambda=10.0)
    assert controller.greedy
    state = _state(tiny_topology)
    for _ in range(30):
        action = controller.decide(state)
        assert action.kind == ActionKind.NO_OP
        state, _ = step(state, action)

def test_learning_controller_samples(tiny_topology):
    controller = RlController(initial_agent(tiny_topology, RlSpec()), reward_lambda=10.0, learn=True)
    assert not controller.greedy

def test_learning_controller_updates_the_critic(tiny_topology):
    agent = initial_agent(tiny_topology, RlSpec())
    controller = RlController(agent, reward_lambda=10.0, learn=True)
    state = _state(tiny_topology)
    action = controller.decide(state)
    next_state, kpi = step(state, action)
    controller.observe(state, action, kpi, next_state)
    assert not np.array_equal(controller.agent.critic_weights, agent.critic_weights)

# ---------------------------------------------------------------- policy files

def test_policy_file_round_trip(tmp_path, tiny_topology):
    agent = random_agent(tiny_topology, RlSpec(), seed=3)
    agent = replace(agent, critic_weights=np.random.default_rng(5).normal(size=agent.n_features))
    path = save_policy(agent, RlSpec(gamma=0.95), os.path.join(tmp_path, "policy.json"), episodes=7, seed=3)
    loaded, rl = load_policy(path, tiny_topology)
    assert np.array_equal(loaded.actor_weights, agent.actor_weights)
    assert np.array_equal(loaded.critic_weights, agent.critic_weights)
    assert loaded.feature_names == agent.feature_names
    assert loaded.exploration_rate == 0.0
    assert rl.gamma == 0.95

def test_missing_policy_file(tmp_path):
    with pytest.raises(MissingPolicyFile):
        load_policy(os.path.join(tmp_path, "nope.json"))

def test_malformed_policy_file(tmp_path):
    path = os.path.join(tmp_path, "policy.json")
    with open(path, "w") as f:
        f.write("{not json")
    with pytest.raises(ParseError):
        load_policy(path)

def test_policy_from_another_topology(tmp_path, tiny_topology, default_topology):
    path = save_policy(initial_agent(tiny_topology, RlSpec()), RlSpec(), os.path.join(tmp_path, "policy.json"))
    with pytest.raises(DimensionMismatch):
        load_policy(path, default_topology)

def test_random_agent_is_not_the_initial_agent(tiny_topology):
    initial = initial_agent(tiny_topology, RlSpec())
    untrained = random_agent(tiny_topology, RlSpec())
    assert untrained.actor_weights.shape == initial.actor_weights.shape
    assert not np.array_equal(untrained.actor_weights, initial.actor_weights)
    assert untrained.exploration_rate == 0.0
