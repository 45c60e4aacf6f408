import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd

from app.core.errors import FitError, FusionError, TransformError
from app.models.score_dataset import ScoreDataset, ScoreVector
from app.schemas.fusion import MissingConvention

logger = logging.getLogger("app.fusion")

DEGENERATE_VALUE = 0.5


@dataclass(frozen=True)
class NormParams:
    modalities: tuple
    minimum: np.ndarray
    maximum: np.ndarray

    @property
    def degenerate(self) -> np.ndarray:
        return self.maximum == self.minimum


def fit_norm(train: ScoreDataset) -> NormParams:
    """Observed min / max per modality, from training scores only."""
    lo = np.zeros(train.n_modalities)
    hi = np.zeros(train.n_modalities)
    for j, name in enumerate(train.modalities):
        observed = train.values[train.mask[:, j], j]
        if observed.size == 0:
            raise FitError(f"modality {name!r} has no observed training score", {"modality": name})
        lo[j] = observed.min()
        hi[j] = observed.max()
    params = NormParams(modalities=train.modalities, minimum=lo, maximum=hi)
    if params.degenerate.any():
        flagged = [m for m, d in zip(train.modalities, params.degenerate) if d]
        logger.warning(f"Constant modality(ies) {flagged} will normalise to {DEGENERATE_VALUE}")
    return params


def normalize(params: NormParams, dataset: ScoreDataset) -> ScoreDataset:
    """Min-max to [0, 1] with clamping; missing cells stay missing."""
    if tuple(params.modalities) != tuple(dataset.modalities):
        raise TransformError("dataset modalities do not match the normalisation parameters")
    span = params.maximum - params.minimum
    safe = np.where(params.degenerate, 1.0, span)
    scaled = np.clip((dataset.values - params.minimum) / safe, 0.0, 1.0)
    scaled[:, params.degenerate] = DEGENERATE_VALUE
    scaled[~dataset.mask] = 0.0
    return dataset.with_scores(scaled, dataset.mask)


def fuse(vector: ScoreVector) -> float:
    """Simple-sum rule on normalised scores, expressed as the mean of the present ones."""
    present = [s for s in vector.scores if s is not None]
    if not present:
        raise FusionError("cannot fuse a vector with every score missing",
                          {"probe_id": vector.probe_id, "gallery_id": vector.gallery_id})
    return float(sum(present) / len(present))


def fuse_dataset(dataset: ScoreDataset, convention: MissingConvention = MissingConvention.mean) -> np.ndarray:
    counts = dataset.mask.sum(axis=1)
    if dataset.n_rows and counts.min() == 0:
        raise FusionError("cannot fuse a vector with every score missing")
    totals = np.where(dataset.mask, dataset.values, 0.0).sum(axis=1)
    if MissingConvention(convention) is MissingConvention.sum:
        return totals
    return totals / np.maximum(counts, 1)


def fused_table(dataset: ScoreDataset, fused: Sequence[float]) -> pd.DataFrame:
    return pd.DataFrame({
        "probe_id": dataset.probe_ids.astype(str),
        "gallery_id": dataset.gallery_ids.astype(str),
        "label": ["genuine" if g else "imposter" for g in dataset.genuine],
        "fused": np.asarray(fused, dtype=float),
    })
