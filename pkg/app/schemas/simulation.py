from enum import Enum
from typing import List

from pydantic import BaseModel, Field


class MissingTarget(str, Enum):
    any = "any"
    genuine = "genuine"
    imposter = "imposter"


class CorruptionSpec(BaseModel):
    # percent of the target class to corrupt: 0, 10, ..., 90
    proportion: int = Field(0, ge=0, le=90)
    target: MissingTarget = MissingTarget.any
    seed: int = 0


class TrialPlan(BaseModel):
    specs: List[CorruptionSpec]
    trials: int = Field(5, ge=1)
    base_seed: int = 0
