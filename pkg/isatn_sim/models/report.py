from typing import Optional

from pydantic import BaseModel, root_validator

class MetricStats(BaseModel):
    mean: Optional[float] = None
    min: Optional[float] = None
    max: Optional[float] = None

class PolicyAggregate(BaseModel):
    policy: str
    seeds: list[int]
    metrics: dict[str, MetricStats]

class ComparisonReport(BaseModel):
    reference_policy: str
    policies: dict[str, PolicyAggregate]
    # Relative change of each metric mean vs the reference policy
    deltas: dict[str, dict[str, Optional[float]]] = {}

    @root_validator(skip_on_failure=True)
    def check_reference(cls, values):
        if values["reference_policy"] not in values["policies"]:
            raise ValueError(f"reference policy '{values['reference_policy']}' was not compared")
        return values
