import logging
from typing import Optional

import numpy as np

from ..models.enums import PolicyKind
from ..models.orchestration import RlAgent
from ..models.scenario import ScenarioSpec
from .environment_service import randomized_rain
from .rl_service import initial_agent
from .simulator_service import run_episode
from .topology_service import build_topology

logger = logging.getLogger(__name__)

TRAINING_STREAM = 13

def exploration_schedule(start: float, end: float, episodes: int) -> list[float]:
    """Linear decay from `start` in the first episode to `end` in the last."""
    if episodes <= 1:
        return [start] * max(episodes, 0)
    return [start + (end - start) * ep / (episodes - 1) for ep in range(episodes)]

def train_rl(spec: ScenarioSpec, episodes: Optional[int] = None, seed: int = 0, days: Optional[int] = None,
             agent: Optional[RlAgent] = None) -> RlAgent:
    """Online actor-critic training over re-seeded mpc_rl episodes with shuffled rain timing.

    Returns the trained agent with exploration switched off.
    """
    rl = spec.orchestration.rl
    episodes = rl.episodes if episodes is None else episodes
    days = days or spec.days
    episode_spec = spec if days == spec.days else spec.copy(update={"days": days})
    agent = agent or initial_agent(build_topology(episode_spec), rl, seed)

    for ep, rate in enumerate(exploration_schedule(rl.exploration_start, rl.exploration_end, episodes)):
        rng = np.random.default_rng([int(seed), ep, TRAINING_STREAM])
        rain = randomized_rain(spec.rain_events, days, rng)
        agent = agent.with_exploration(rate).with_rng([int(seed), ep])
        result, agent = run_episode(episode_spec, PolicyKind.MPC_RL, seed + ep, agent=agent, learn=True,
                                    beam_width=rl.train_beam_width, rain_events=rain)
        logger.info(f"Training episode {ep + 1}/{episodes}: exploration={rate:.3f} "
                    f"gco2_per_gb={result.summary.gco2_per_gb} violations={result.summary.sla_violations} "
                    f"actions={result.summary.actions_taken}")
    return agent.with_exploration(0.0)
