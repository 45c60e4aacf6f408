from dataclasses import dataclass, field
from typing import List, Tuple, Union

import numpy as np

from app.models.regressors import BayesRidgeModel, KnnModel, TreeModel
from app.schemas.imputer import ImputerSpec

Regressor = Union[BayesRidgeModel, TreeModel, KnnModel]


@dataclass(frozen=True)
class ColumnStats:
    """Per-modality mean / median / count over observed training scores."""

    mean: np.ndarray
    median: np.ndarray
    count: np.ndarray

    def fill_values(self, how: str) -> np.ndarray:
        return self.median if how == "median" else self.mean


@dataclass(frozen=True)
class UnivariateImputer:
    spec: ImputerSpec
    modalities: Tuple[str, ...]
    stats: ColumnStats


@dataclass(frozen=True)
class MiceModel:
    """One frozen regressor per modality, each predicting it from the other m-1."""

    spec: ImputerSpec
    modalities: Tuple[str, ...]
    stats: ColumnStats
    regressors: Tuple[Regressor, ...]
    visit_order: Tuple[int, ...]

    def predictors(self, j: int) -> List[int]:
        return [c for c in range(len(self.modalities)) if c != j]


ImputerModel = Union[UnivariateImputer, MiceModel]


@dataclass
class MiceTrace:
    """Convergence record of one chained-equation pass."""

    max_changes: List[float] = field(default_factory=list)
    converged: bool = False

    @property
    def sweeps(self) -> int:
        return len(self.max_changes)
