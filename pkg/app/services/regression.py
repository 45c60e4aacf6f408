"""Regressors used inside the chained-equation imputer.

Evidence-maximised Bayesian ridge, a greedy squared-error CART tree and an
unweighted k-nearest-neighbour average, all deterministic.
"""
import logging
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from app.core.errors import FitError
from app.models.regressors import BayesRidgeModel, KnnModel, TreeModel, knn_mean

logger = logging.getLogger("app.regression")

# broad Gamma hyperpriors on both precisions
HYPER_SHAPE = 1e-6
HYPER_RATE = 1e-6


def _as_xy(X, y) -> Tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.shape[0] != y.shape[0]:
        raise FitError("predictor rows and targets differ in length", {"X": X.shape[0], "y": y.shape[0]})
    return X, y


# ======================================================
# BAYESIAN RIDGE
# ======================================================

def fit_bayes_ridge(X, y, max_iter: int = 300, tol: float = 1e-3) -> BayesRidgeModel:
    """Alternate closed-form updates of the noise precision alpha, the
    weight precision lambda and the posterior mean until both precisions move
    by less than ``tol`` (relative) or ``max_iter`` sweeps have run.
    Predictors are centred internally; the intercept is recovered at the end.
    """
    X, y = _as_xy(X, y)
    n, p = X.shape
    if n < 2:
        raise FitError("bayesian ridge needs at least two rows", {"rows": n})

    x_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    Xc = X - x_mean
    yc = y - y_mean
    eps = np.finfo(float).eps
    var_y = float(yc.var())

    if np.ptp(y) == 0.0:
        w = np.zeros(p + 1)
        w[-1] = y_mean
        return BayesRidgeModel(w=w, alpha=1.0 / (var_y + eps), lambda_=1.0, iterations=0, converged=True)

    U, S, Vh = linalg.svd(Xc, full_matrices=False)
    eig = S ** 2
    Uty = U.T @ yc

    def posterior(alpha: float, lambda_: float) -> Tuple[np.ndarray, float]:
        coef = Vh.T @ (S / (eig + lambda_ / alpha) * Uty)
        resid = yc - Xc @ coef
        return coef, float(resid @ resid)

    alpha = 1.0 / (var_y + eps)
    lambda_ = 1.0
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        coef, rss = posterior(alpha, lambda_)
        gamma = float(np.sum(alpha * eig / (lambda_ + alpha * eig)))
        lambda_new = (gamma + 2 * HYPER_SHAPE) / (float(coef @ coef) + 2 * HYPER_RATE)
        alpha_new = (n - gamma + 2 * HYPER_SHAPE) / (rss + 2 * HYPER_RATE)
        change = max(abs(lambda_new - lambda_) / lambda_, abs(alpha_new - alpha) / alpha)
        alpha, lambda_ = alpha_new, lambda_new
        if change < tol:
            converged = True
            break

    coef, _ = posterior(alpha, lambda_)
    intercept = y_mean - float(x_mean @ coef)
    if not converged:
        logger.warning(f"Bayesian ridge stopped after {iterations} iterations without converging")
    return BayesRidgeModel(
        w=np.append(coef, intercept), alpha=float(alpha), lambda_=float(lambda_),
        iterations=iterations, converged=converged,
    )


# ======================================================
# REGRESSION TREE
# ======================================================

def _best_split(X: np.ndarray, y: np.ndarray, min_leaf: int) -> Optional[Tuple[int, float]]:
    n, p = X.shape
    parent_sse = float(((y - y.mean()) ** 2).sum())
    sizes = np.arange(min_leaf, n - min_leaf + 1)
    if sizes.size == 0:
        return None
    best_total = np.inf
    best: Optional[Tuple[int, float]] = None
    for f in range(p):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        ys = y[order]
        csum = np.cumsum(ys)
        csum2 = np.cumsum(ys * ys)
        left_sum = csum[sizes - 1]
        left_sse = csum2[sizes - 1] - left_sum ** 2 / sizes
        right_n = n - sizes
        right_sum = csum[-1] - left_sum
        right_sse = (csum2[-1] - csum2[sizes - 1]) - right_sum ** 2 / right_n
        total = np.clip(left_sse, 0.0, None) + np.clip(right_sse, 0.0, None)
        # only between distinct predictor values
        total[xs[sizes - 1] >= xs[sizes]] = np.inf
        j = int(np.argmin(total))
        if total[j] < best_total:
            lo, hi = xs[sizes[j] - 1], xs[sizes[j]]
            thr = lo + (hi - lo) / 2.0
            if not lo <= thr < hi:
                thr = lo
            best_total = float(total[j])
            best = (f, float(thr))
    if best is None or not parent_sse - best_total > 1e-12 * parent_sse:
        return None
    return best


def fit_tree(X, y, min_leaf: int = 5, max_depth: Optional[int] = None) -> TreeModel:
    """Greedy CART on total squared error.

    A node splits only when the best split lowers the SSE and leaves at least
    ``min_leaf`` rows on each side; leaves predict the mean of their targets.
    """
    X, y = _as_xy(X, y)
    if X.shape[0] == 0:
        raise FitError("cannot grow a tree on zero rows")
    min_leaf = max(1, int(min_leaf))

    feature, threshold, left, right, value, n_samples = [], [], [], [], [], []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        n_samples.append(0)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.arange(X.shape[0]), 0)]
    deepest = 0
    while stack:
        node, idx, depth = stack.pop()
        ys = y[idx]
        value[node] = float(ys.mean())
        n_samples[node] = int(idx.size)
        deepest = max(deepest, depth)
        if idx.size < 2 * min_leaf or np.ptp(ys) == 0.0:
            continue
        if max_depth is not None and depth >= max_depth:
            continue
        split = _best_split(X[idx], ys, min_leaf)
        if split is None:
            continue
        f, thr = split
        goes_left = X[idx, f] <= thr
        lnode, rnode = new_node(), new_node()
        feature[node], threshold[node], left[node], right[node] = f, thr, lnode, rnode
        stack.append((rnode, idx[~goes_left], depth + 1))
        stack.append((lnode, idx[goes_left], depth + 1))

    return TreeModel(
        feature=np.asarray(feature, dtype=int),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=int),
        right=np.asarray(right, dtype=int),
        value=np.asarray(value, dtype=float),
        n_samples=np.asarray(n_samples, dtype=int),
        min_leaf=min_leaf,
        max_depth=max_depth,
        depth=deepest,
    )


def predict_tree(model: TreeModel, x) -> float:
    return float(model.predict(np.asarray(x, dtype=float).reshape(1, -1))[0])


# ======================================================
# K NEAREST NEIGHBOURS
# ======================================================

def fit_knn(X, y, k: int = 5) -> KnnModel:
    X, y = _as_xy(X, y)
    if X.shape[0] == 0:
        raise FitError("k-NN needs at least one training row")
    if X.shape[0] < k:
        logger.debug(f"k-NN has {X.shape[0]} rows for k={k}; every row will be used")
    return KnnModel(train_X=X.copy(), train_y=y.copy(), k=int(k))


def knn_predict(train_X, train_y, x, k: int = 5) -> float:
    """Mean target of the k training rows closest to ``x``; uses all rows when fewer than k."""
    train_X, train_y = _as_xy(train_X, train_y)
    if train_X.shape[0] == 0:
        raise FitError("k-NN needs at least one training row")
    return float(knn_mean(train_X, train_y, np.asarray(x, dtype=float).reshape(1, -1), k)[0])
