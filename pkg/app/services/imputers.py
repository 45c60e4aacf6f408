import json
import logging
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from app.core.errors import ConfigError, FitError, TransformError
from app.models.imputer import ColumnStats, ImputerModel, MiceModel, MiceTrace, UnivariateImputer
from app.models.regressors import regressor_from_dict
from app.models.score_dataset import ScoreDataset
from app.schemas.imputer import ColumnStatsDoc, ImputerDocument, ImputerKind, ImputerSpec
from app.services.regression import fit_bayes_ridge, fit_knn, fit_tree

logger = logging.getLogger("app.imputers")

DOCUMENT_VERSION = 1


# ======================================================
# FIT
# ======================================================

def column_stats(train: ScoreDataset) -> ColumnStats:
    m = train.n_modalities
    mean = np.zeros(m)
    median = np.zeros(m)
    count = train.mask.sum(axis=0).astype(int)
    for j in range(m):
        if count[j] == 0:
            raise FitError(
                f"modality {train.modalities[j]!r} has no observed training score",
                {"modality": train.modalities[j]},
            )
        observed = train.values[train.mask[:, j], j]
        mean[j] = observed.mean()
        median[j] = np.median(observed)
    return ColumnStats(mean=mean, median=median, count=count)


def _fit_regressor(spec: ImputerSpec, X: np.ndarray, y: np.ndarray):
    if spec.kind is ImputerKind.mice_bayes:
        return fit_bayes_ridge(X, y)
    if spec.kind is ImputerKind.mice_tree:
        return fit_tree(X, y, min_leaf=spec.tree_min_leaf, max_depth=spec.tree_max_depth)
    return fit_knn(X, y, k=spec.knn_k)


def fit(train: ScoreDataset, spec: ImputerSpec) -> ImputerModel:
    """Fit an imputer on training scores only; labels are never read."""
    if train.n_rows == 0:
        raise FitError("empty training set")
    stats = column_stats(train)
    kind = ImputerKind(spec.kind)
    if not kind.is_mice:
        return UnivariateImputer(spec=spec, modalities=train.modalities, stats=stats)

    complete = train.values[train.complete_mask]
    if complete.shape[0] < 2:
        raise FitError(
            "chained-equation imputation needs at least two complete training vectors",
            {"complete_rows": int(complete.shape[0])},
        )
    m = train.n_modalities
    regressors = []
    for j in range(m):
        others = [c for c in range(m) if c != j]
        regressors.append(_fit_regressor(spec, complete[:, others], complete[:, j]))
    logger.debug(f"Fitted {kind.value} on {complete.shape[0]} complete vectors")
    return MiceModel(
        spec=spec,
        modalities=train.modalities,
        stats=stats,
        regressors=tuple(regressors),
        visit_order=tuple(range(m)),
    )


# ======================================================
# TRANSFORM
# ======================================================

def _check_modalities(model: ImputerModel, dataset: ScoreDataset) -> None:
    if tuple(model.modalities) != tuple(dataset.modalities):
        raise TransformError(
            "dataset modalities do not match the fitted imputer",
            {"model": list(model.modalities), "dataset": list(dataset.modalities)},
        )


def mice_loop(model: MiceModel, dataset: ScoreDataset) -> Tuple[ScoreDataset, MiceTrace]:
    """Chained equations with frozen regressors.

    Missing cells start at the column statistic, then every sweep visits the
    modalities left to right and re-predicts that modality's originally
    missing cells from the current values of the others. Stops after
    ``mice_max_iters`` sweeps or when a sweep moves no cell by ``mice_tol``.
    """
    _check_modalities(model, dataset)
    trace = MiceTrace()
    missing = ~dataset.mask
    if not missing.any():
        trace.converged = True
        return dataset, trace

    current = dataset.values.copy()
    fill = model.stats.fill_values(model.spec.mice_init.value)
    current[missing] = np.broadcast_to(fill, current.shape)[missing]

    for sweep in range(model.spec.mice_max_iters):
        max_change = 0.0
        for j in model.visit_order:
            rows = np.flatnonzero(missing[:, j])
            if rows.size == 0:
                continue
            pred = model.regressors[j].predict(current[np.ix_(rows, model.predictors(j))])
            max_change = max(max_change, float(np.max(np.abs(pred - current[rows, j]))))
            current[rows, j] = pred
        trace.max_changes.append(max_change)
        if max_change < model.spec.mice_tol:
            trace.converged = True
            break

    logger.debug(f"MICE finished after {trace.sweeps} sweep(s), last change {trace.max_changes[-1]:.3g}")
    out = dataset.with_scores(current, np.ones_like(dataset.mask))
    return out, trace


def transform(model: ImputerModel, dataset: ScoreDataset) -> ScoreDataset:
    """Fill every missing cell; observed cells are left bit-identical."""
    _check_modalities(model, dataset)
    if dataset.complete_mask.all():
        return dataset
    if isinstance(model, MiceModel):
        out, _ = mice_loop(model, dataset)
    else:
        current = dataset.values.copy()
        fill = model.stats.fill_values(model.spec.kind.value)
        missing = ~dataset.mask
        current[missing] = np.broadcast_to(fill, current.shape)[missing]
        out = dataset.with_scores(current, np.ones_like(dataset.mask))
    # predictions never touch observed cells; keep the original bits anyway
    values = np.where(dataset.mask, dataset.values, out.values)
    return dataset.with_scores(values, np.ones_like(dataset.mask))


# ======================================================
# PERSISTENCE
# ======================================================

def to_document(model: ImputerModel) -> ImputerDocument:
    regressors = [r.to_dict() for r in model.regressors] if isinstance(model, MiceModel) else []
    return ImputerDocument(
        format_version=DOCUMENT_VERSION,
        kind=model.spec.kind,
        spec=model.spec,
        modalities=list(model.modalities),
        column_stats=ColumnStatsDoc(
            mean=model.stats.mean.tolist(),
            median=model.stats.median.tolist(),
            count=[int(c) for c in model.stats.count],
        ),
        regressors=regressors,
    )


def from_document(doc: ImputerDocument) -> ImputerModel:
    if doc.format_version != DOCUMENT_VERSION:
        raise ConfigError(
            f"unsupported imputer document version {doc.format_version}",
            {"supported": DOCUMENT_VERSION},
        )
    stats = ColumnStats(
        mean=np.asarray(doc.column_stats.mean, dtype=float),
        median=np.asarray(doc.column_stats.median, dtype=float),
        count=np.asarray(doc.column_stats.count, dtype=int),
    )
    modalities = tuple(doc.modalities)
    if not doc.kind.is_mice:
        return UnivariateImputer(spec=doc.spec, modalities=modalities, stats=stats)
    if len(doc.regressors) != len(modalities):
        raise ConfigError("imputer document needs one regressor per modality")
    return MiceModel(
        spec=doc.spec,
        modalities=modalities,
        stats=stats,
        regressors=tuple(regressor_from_dict(r) for r in doc.regressors),
        visit_order=tuple(range(len(modalities))),
    )


def save_model(model: ImputerModel, path) -> None:
    Path(path).write_text(to_document(model).model_dump_json(indent=2), encoding="utf-8")


def load_model(path) -> ImputerModel:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    return from_document(ImputerDocument.model_validate(raw))


def fit_transform(train: ScoreDataset, spec: ImputerSpec, apply_to: Optional[ScoreDataset] = None):
    """Convenience: fit on ``train`` and impute ``apply_to`` (default: train itself)."""
    model = fit(train, spec)
    return model, transform(model, apply_to if apply_to is not None else train)
