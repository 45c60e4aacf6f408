import logging
from typing import Iterable, Optional

import numpy as np
from scipy.stats import rankdata

from app.core.errors import MetricError
from app.models.roc import RocCurve
from app.models.score_dataset import ClassLabel, ScoreDataset
from app.schemas.metrics import ClassCorrelation, CorrPart, CorrSummary

logger = logging.getLogger("app.metrics")

DEFAULT_TARGET_FMR = 0.001


# =========================
# VERIFICATION
# =========================

def _as_genuine(label) -> bool:
    if isinstance(label, (bool, np.bool_)):
        return bool(label)
    if isinstance(label, (int, np.integer)):
        return bool(label)
    token = str(label).strip().lower()
    if token in ("true", "1"):
        return True
    if token in ("false", "0"):
        return False
    try:
        return ClassLabel.parse(token) is ClassLabel.genuine
    except ValueError:
        raise MetricError(f"unknown label {label!r}")


def roc(scores, genuine: Optional[Iterable] = None) -> RocCurve:
    """Exact ROC over every distinct score plus one sentinel above the maximum.

    ``scores`` is either a flat array (with ``genuine`` flags alongside) or a
    sequence of ``(score, label)`` pairs.
    """
    if genuine is None:
        pairs = list(scores)
        s = np.array([float(p[0]) for p in pairs], dtype=float)
        g = np.array([_as_genuine(p[1]) for p in pairs], dtype=bool)
    else:
        s = np.asarray(scores, dtype=float).reshape(-1)
        g = np.array([_as_genuine(x) for x in genuine], dtype=bool)
    if s.shape != g.shape:
        raise MetricError("scores and labels differ in length")
    n_gen = int(g.sum())
    n_imp = int((~g).sum())
    if n_gen == 0 or n_imp == 0:
        raise MetricError("ROC needs at least one genuine and one imposter score",
                          {"n_genuine": n_gen, "n_imposter": n_imp})
    if not np.all(np.isfinite(s)):
        raise MetricError("fused scores must be finite")

    distinct = np.unique(s)
    thresholds = np.append(distinct, np.nextafter(distinct[-1], np.inf))
    gen_sorted = np.sort(s[g])
    imp_sorted = np.sort(s[~g])
    true_matches = n_gen - np.searchsorted(gen_sorted, thresholds, side="left")
    false_matches = n_imp - np.searchsorted(imp_sorted, thresholds, side="left")
    return RocCurve(
        thresholds=thresholds,
        fmr=false_matches / n_imp,
        tmr=true_matches / n_gen,
        n_genuine=n_gen,
        n_imposter=n_imp,
    )


def tmr_at_fmr(curve: RocCurve, target_fmr: float = DEFAULT_TARGET_FMR) -> float:
    """TMR at the smallest threshold whose FMR does not exceed the target (no interpolation)."""
    ok = np.flatnonzero(curve.fmr <= target_fmr)
    if ok.size == 0:
        # unreachable for curves built by roc(): the sentinel has FMR 0
        logger.warning(f"No operating point reaches FMR <= {target_fmr}; reporting TMR 0")
        return 0.0
    return float(curve.tmr[ok[0]])


def eer(curve: RocCurve) -> float:
    fnmr = 1.0 - curve.tmr
    i = int(np.argmin(np.abs(fnmr - curve.fmr)))
    return float((fnmr[i] + curve.fmr[i]) / 2.0)


# =========================
# CORRELATION
# =========================

def _pearson(x: np.ndarray, y: np.ndarray) -> Optional[float]:
    if x.size < 2:
        return None
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        return None
    return float(np.clip((dx @ dy) / np.sqrt(sxx * syy), -1.0, 1.0))


def _pairwise(dataset: ScoreDataset, class_filter: Optional[ClassLabel], method: str) -> CorrPart:
    rows = dataset.class_mask(class_filter)
    m = dataset.n_modalities
    matrix = [[1.0 if i == j else None for j in range(m)] for i in range(m)]
    defined = []
    undefined = []
    for i in range(m):
        for j in range(i + 1, m):
            both = rows & dataset.mask[:, i] & dataset.mask[:, j]
            x = dataset.values[both, i]
            y = dataset.values[both, j]
            if method == "spearman" and x.size:
                x, y = rankdata(x, method="average"), rankdata(y, method="average")
            r = _pearson(x, y)
            matrix[i][j] = matrix[j][i] = r
            if r is None:
                undefined.append([dataset.modalities[i], dataset.modalities[j]])
            else:
                defined.append(r)
    if undefined:
        logger.info(f"{method}: undefined pair(s) {undefined} excluded from the mean")
    return CorrPart(
        method=method,
        modalities=list(dataset.modalities),
        matrix=matrix,
        mean=float(np.mean(defined)) if defined else None,
        mean_abs=float(np.mean(np.abs(defined))) if defined else None,
        undefined_pairs=undefined,
        n_rows=int(rows.sum()),
    )


def pearson_pairwise(dataset: ScoreDataset, class_filter: Optional[ClassLabel] = None) -> CorrPart:
    """Sample Pearson r for every modality pair over jointly observed rows."""
    return _pairwise(dataset, class_filter, "pearson")


def spearman_rank(dataset: ScoreDataset, class_filter: Optional[ClassLabel] = None) -> CorrPart:
    """Pearson r of mid-ranks (ties share their average rank)."""
    return _pairwise(dataset, class_filter, "spearman")


def correlation_summary(dataset: ScoreDataset) -> CorrSummary:
    parts = {}
    for key, label in (("genuine", ClassLabel.genuine), ("imposter", ClassLabel.imposter), ("all", None)):
        if int(dataset.class_mask(label).sum()) == 0:
            parts[key] = None
            continue
        parts[key] = ClassCorrelation(
            label=key,
            pearson=pearson_pairwise(dataset, label),
            spearman=spearman_rank(dataset, label),
        )
    return CorrSummary(**parts)
