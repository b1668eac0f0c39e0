from dataclasses import dataclass, field, replace
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, PrivateAttr, validator

from .enums import ActionKind, SleepMode
from .scenario import RlSpec
from .twin import ScenarioResult

class HourConfig(BaseModel):
    zone_gateway: dict[str, str]
    active_uavs: dict[str, str] = {}
    small_cell_sleep: dict[str, SleepMode] = {}
    macro_power_mode: dict[str, SleepMode] = {}
    edge_placement: dict[str, str] = {}
    satellite_handover: dict[str, str] = {}
    # Lattice coordinates when built from the candidate lattice
    knobs: Optional[tuple] = None

    _compiled: Any = PrivateAttr(default=None)

class DayPlan(BaseModel):
    configs: list[HourConfig]
    predicted: Optional[ScenarioResult] = None
    start_hour: int = 0
    # hour x zone expected bits, used for load-deviation features
    expected_zone_bits: list[list[float]] = []
    carbon_scale: float = 1.0

    @validator("configs")
    def check_horizon(cls, v):
        if not 12 <= len(v) <= 24:
            raise ValueError(f"day plan must cover 12-24 hours, got {len(v)}")
        return v

class Action(BaseModel):
    kind: ActionKind = ActionKind.NO_OP
    params: dict[str, str] = {}

@dataclass(frozen=True, eq=False)
class RlAgent:
    """Linear actor-critic agent; value-copyable via `dataclasses.replace`."""
    feature_names: tuple
    action_names: tuple
    actor_weights: np.ndarray
    critic_weights: np.ndarray
    gamma: float = 0.99
    alpha_actor: float = 0.01
    alpha_critic: float = 0.05
    td_clip: float = 5.0
    exploration_rate: float = 0.0
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0), compare=False)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def with_exploration(self, rate: float) -> "RlAgent":
        return replace(self, exploration_rate=float(min(max(rate, 0.0), 1.0)))

    def with_rng(self, seed) -> "RlAgent":
        return replace(self, rng=np.random.default_rng(seed))

class PolicyFile(BaseModel):
    """Serialized agent: orderings, weights and the training config snapshot."""
    feature_names: list[str]
    action_names: list[str]
    actor_weights: list[list[float]]
    critic_weights: list[float]
    config: RlSpec
    episodes_trained: int = 0
    seed: Optional[int] = None
