from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class ImputerKind(str, Enum):
    mean = "mean"
    median = "median"
    mice_bayes = "mice_bayes"
    mice_tree = "mice_tree"
    mice_knn = "mice_knn"

    @property
    def is_mice(self) -> bool:
        return self.value.startswith("mice_")


class MiceInit(str, Enum):
    mean = "mean"
    median = "median"


class ImputerSpec(BaseModel):
    kind: ImputerKind = ImputerKind.mean
    knn_k: int = Field(5, ge=1)
    mice_max_iters: int = Field(10, ge=1)
    mice_tol: float = Field(1e-4, gt=0)
    mice_init: MiceInit = MiceInit.mean
    tree_min_leaf: int = Field(5, ge=1)
    # None = grow until min_leaf / purity stops the split
    tree_max_depth: Optional[int] = Field(None, ge=1)


class ColumnStatsDoc(BaseModel):
    mean: List[float]
    median: List[float]
    count: List[int]


class ImputerDocument(BaseModel):
    """Serialised fitted imputer, reusable across CLI invocations."""

    format_version: int = 1
    kind: ImputerKind
    spec: ImputerSpec
    modalities: List[str]
    column_stats: ColumnStatsDoc
    # one entry per modality for MICE kinds, empty for mean/median
    regressors: List[Dict[str, Any]] = []
