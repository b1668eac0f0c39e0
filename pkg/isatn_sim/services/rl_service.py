"""Real-time corrective control: a linear actor-critic over telemetry features.

Actor scores are per-action linear functions of the feature vector and the
policy is their masked softmax. The critic is a linear state-value estimate.
"""
import logging
import math
import os
from dataclasses import replace
from typing import Optional, Sequence, Union

import numpy as np

from ..data.loader import load_json_file, write_text_file
from ..models.enums import ACTION_KINDS, ActionKind
from ..models.orchestration import Action, DayPlan, PolicyFile, RlAgent
from ..models.scenario import RlSpec
from ..models.simulation import EpochState, KpiRecord
from ..utils.error_handlers import DimensionMismatch, MissingPolicyFile, ParseError
from .action_service import available_actions
from .energy_service import BITS_PER_GB
from .topology_service import Topology

logger = logging.getLogger(__name__)

NO_OP_INDEX = ACTION_KINDS.index(ActionKind.NO_OP)

def feature_names(topology: Topology) -> tuple:
    return (
        ("hour_sin", "hour_cos")
        + tuple(f"load_dev:{z.id}" for z in topology.zones)
        + tuple(f"carbon:{r}" for r in topology.region_ids)
        + ("rain_active", "uav_available", "p95_latency", "bias")
    )

def rl_features(state: EpochState, plan: Optional[DayPlan]) -> np.ndarray:
    """Telemetry feature vector in `feature_names` order, every entry in [-1, 1]."""
    topology = state.topology
    spec = state.spec
    minutes = spec.epoch_minutes
    phase = 2.0 * math.pi * ((state.t / 60.0) % 24.0) / 24.0

    deviation = np.zeros(topology.n_zones)
    if plan is not None and plan.expected_zone_bits and state.t > 0:
        h = min(max((state.t - minutes) // 60 - plan.start_hour, 0), len(plan.expected_zone_bits) - 1)
        expected = np.asarray(plan.expected_zone_bits[h], dtype=float)
        observed = state.last_demand_bits.sum(axis=1) * (60.0 / minutes)
        with np.errstate(divide="ignore", invalid="ignore"):
            deviation = np.where(expected > 0, (observed - expected) / np.where(expected > 0, expected, 1.0),
                                 np.where(observed > 0, 1.0, 0.0))

    scale = plan.carbon_scale if plan is not None and plan.carbon_scale > 0 else 1.0
    carbon = 2.0 * np.clip(np.asarray(state.last_intensity, dtype=float) / scale, 0.0, 1.0) - 1.0

    fleet = state.uav
    if topology.n_uavs:
        reserve = spec.uavs.reserve_fraction * topology.uavs[0].capacity_wh
        ready = (~fleet.airborne) & (fleet.swap_end_min <= state.t) & (fleet.battery_wh > reserve)
        uav_available = float(ready.sum()) / topology.n_uavs
    else:
        uav_available = 0.0

    latency = 2.0 * min(max(state.last_p95_ms / spec.links.saturation_latency_ms, 0.0), 1.0) - 1.0

    x = np.concatenate([
        [math.sin(phase), math.cos(phase)],
        deviation,
        carbon,
        [1.0 if state.rain_active else 0.0, uav_available, latency, 1.0],
    ])
    return np.clip(x, -1.0, 1.0)

def _check(agent: RlAgent, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (agent.n_features,):
        raise DimensionMismatch(f"Agent expects {agent.n_features} features, got {x.shape}", field="features")
    return x

def policy_probabilities(agent: RlAgent, features, mask: Optional[Sequence[bool]] = None) -> np.ndarray:
    x = _check(agent, features)
    mask = np.ones(len(agent.action_names), dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    scores = agent.actor_weights @ x
    scores = np.where(mask, scores, -np.inf)
    scores = scores - scores[mask].max()
    weights = np.where(mask, np.exp(scores), 0.0)
    return weights / weights.sum()

def select_action(agent: RlAgent, features, mask: Optional[Sequence[bool]] = None, greedy: bool = False) -> int:
    """Index into `agent.action_names`; consumes exactly two uniforms from the agent's stream.

    With `greedy` the most probable valid action is taken, ties going to no_op and
    then to the lowest index. Otherwise a uniform valid action with the exploration
    probability, else a softmax sample.
    """
    x = _check(agent, features)
    mask = np.ones(len(agent.action_names), dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    valid = np.flatnonzero(mask)
    explore, pick = agent.rng.random(2)
    if greedy:
        p = policy_probabilities(agent, x, mask)
        best = np.flatnonzero(p == p.max())
        return NO_OP_INDEX if NO_OP_INDEX in best else int(best[0])
    if explore < agent.exploration_rate:
        return int(valid[min(int(pick * valid.size), valid.size - 1)])
    cdf = np.cumsum(policy_probabilities(agent, x, mask))
    i = int(np.searchsorted(cdf, pick * cdf[-1], side="right"))
    return int(min(i, valid[-1]))

def rl_act(agent: RlAgent, features, mask: Optional[Sequence[bool]] = None,
           state: Optional[EpochState] = None, greedy: bool = False) -> Action:
    """Pick an action; with a state, masks and parameters come from the state."""
    actions = None
    if state is not None:
        actions = available_actions(state)
        mask = [a is not None for a in actions]
    i = select_action(agent, features, mask, greedy)
    if actions is not None:
        return actions[i]
    return Action(kind=ActionKind(agent.action_names[i]))

def rl_update(agent: RlAgent, features, action: Union[int, ActionKind, Action], reward: float, next_features,
              mask: Optional[Sequence[bool]] = None) -> RlAgent:
    """One-step actor-critic update; returns a new agent sharing the rng stream."""
    x = _check(agent, features)
    x_next = _check(agent, next_features)
    if isinstance(action, Action):
        action = action.kind
    a = agent.action_names.index(action.value) if isinstance(action, ActionKind) else int(action)

    delta = reward + agent.gamma * float(agent.critic_weights @ x_next) - float(agent.critic_weights @ x)
    critic = agent.critic_weights + agent.alpha_critic * delta * x

    pi = policy_probabilities(agent, x, mask)
    grad = -np.outer(pi, x)
    grad[a] += x
    step = min(max(delta, -agent.td_clip), agent.td_clip)
    actor = agent.actor_weights + agent.alpha_actor * step * grad
    return replace(agent, actor_weights=actor, critic_weights=critic)

def tick_reward(kpi: KpiRecord, reward_lambda: float) -> float:
    """Negative gCO2 per delivered GB this tick, minus the SLA penalty."""
    bits = kpi.total_served_bits
    carbon = kpi.emissions_g / (bits / BITS_PER_GB) if bits > 0 else 0.0
    return -carbon - reward_lambda * kpi.total_violations

def initial_agent(topology: Topology, rl: RlSpec, seed: int = 0) -> RlAgent:
    """Zero weights except a bias toward no_op."""
    names = feature_names(topology)
    actor = np.zeros((len(ACTION_KINDS), len(names)))
    actor[NO_OP_INDEX, names.index("bias")] = rl.no_op_prior
    return RlAgent(
        feature_names=names,
        action_names=tuple(k.value for k in ACTION_KINDS),
        actor_weights=actor,
        critic_weights=np.zeros(len(names)),
        gamma=rl.gamma,
        alpha_actor=rl.alpha_actor,
        alpha_critic=rl.alpha_critic,
        td_clip=rl.td_clip,
        exploration_rate=rl.exploration_start,
        rng=np.random.default_rng(seed),
    )

def random_agent(topology: Topology, rl: RlSpec, seed: int = 0, scale: float = 1.0) -> RlAgent:
    """Untrained comparison agent with Gaussian actor weights."""
    agent = initial_agent(topology, rl, seed)
    actor = np.random.default_rng([int(seed), 1]).normal(0.0, scale, agent.actor_weights.shape)
    return replace(agent, actor_weights=actor, exploration_rate=0.0)

class RlController:
    """Per-tick decision stream of one run.

    A learning controller samples and updates online. A frozen one acts greedily
    unless `greedy` says otherwise.
    """

    def __init__(self, agent: RlAgent, reward_lambda: float, learn: bool = False, greedy: Optional[bool] = None):
        self.agent = agent
        self.reward_lambda = reward_lambda
        self.learn = learn
        self.greedy = not learn if greedy is None else greedy
        self.plan: Optional[DayPlan] = None
        self._features = None
        self._mask = None
        self._index = NO_OP_INDEX

    def _features_at(self, state: EpochState) -> np.ndarray:
        if self._features is not None and self._features[0] == state.t:
            return self._features[1]
        x = rl_features(state, self.plan)
        self._features = (state.t, x)
        return x

    def decide(self, state: EpochState) -> Optional[Action]:
        x = self._features_at(state)
        actions = available_actions(state)
        self._mask = np.array([a is not None for a in actions], dtype=bool)
        self._index = select_action(self.agent, x, self._mask, self.greedy)
        return actions[self._index]

    def observe(self, state: EpochState, action: Optional[Action], kpi: KpiRecord, next_state: EpochState) -> None:
        if not self.learn:
            return
        x = self._features_at(state)
        x_next = rl_features(next_state, self.plan)
        self.agent = rl_update(self.agent, x, self._index, tick_reward(kpi, self.reward_lambda), x_next, self._mask)
        self._features = (next_state.t, x_next)

# ---------------------------------------------------------------- policy files

def save_policy(agent: RlAgent, rl: RlSpec, path: str, episodes: int = 0, seed: Optional[int] = None) -> str:
    policy = PolicyFile(
        feature_names=list(agent.feature_names),
        action_names=list(agent.action_names),
        actor_weights=agent.actor_weights.tolist(),
        critic_weights=agent.critic_weights.tolist(),
        config=rl,
        episodes_trained=episodes,
        seed=seed,
    )
    path = write_text_file(path, policy.json(indent=2) + "\n")
    logger.info(f"Saved policy ({len(agent.feature_names)} features, {episodes} episodes) to {path}")
    return path

def load_policy(path: str, topology: Optional[Topology] = None, seed: int = 0) -> tuple:
    """(agent, RlSpec) from a policy file; exploration is off for evaluation."""
    if not os.path.isfile(path):
        raise MissingPolicyFile(f"Policy file not found: {path}", field="policy_file")
    raw = load_json_file(path)
    try:
        policy = PolicyFile.parse_obj(raw)
    except ValueError as e:
        raise ParseError(f"Invalid policy file {path}", details=str(e))

    actor = np.array(policy.actor_weights, dtype=float)
    critic = np.array(policy.critic_weights, dtype=float)
    expected_actions = [k.value for k in ACTION_KINDS]
    if policy.action_names != expected_actions:
        raise ParseError(f"Policy file {path} orders actions {policy.action_names}, expected {expected_actions}")
    if actor.shape != (len(policy.action_names), len(policy.feature_names)) or critic.shape != (len(policy.feature_names),):
        raise ParseError(f"Policy file {path} has weight arrays that do not match its feature and action lists")
    if topology is not None and tuple(policy.feature_names) != feature_names(topology):
        raise DimensionMismatch(f"Policy file {path} was trained on a different feature layout",
                                field="feature_names")

    rl = policy.config
    agent = RlAgent(
        feature_names=tuple(policy.feature_names),
        action_names=tuple(policy.action_names),
        actor_weights=actor,
        critic_weights=critic,
        gamma=rl.gamma,
        alpha_actor=rl.alpha_actor,
        alpha_critic=rl.alpha_critic,
        td_clip=rl.td_clip,
        exploration_rate=0.0,
        rng=np.random.default_rng(seed),
    )
    return agent, rl
