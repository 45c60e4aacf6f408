from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np


@dataclass(frozen=True)
class BayesRidgeModel:
    """Posterior-mean linear predictor; ``w`` = coefficients followed by the intercept."""

    w: np.ndarray
    alpha: float
    lambda_: float
    iterations: int = 0
    converged: bool = True

    @property
    def coef(self) -> np.ndarray:
        return self.w[:-1]

    @property
    def intercept(self) -> float:
        return float(self.w[-1])

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float).reshape(-1, self.coef.size)
        return X @ self.coef + self.intercept

    def to_dict(self) -> Dict[str, Any]:
        return {
            "type": "bayes_ridge",
            "w": self.w.tolist(),
            "alpha": self.alpha,
            "lambda": self.lambda_,
            "iterations": self.iterations,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "BayesRidgeModel":
        return cls(
            w=np.asarray(doc["w"], dtype=float),
            alpha=float(doc["alpha"]),
            lambda_=float(doc["lambda"]),
            iterations=int(doc.get("iterations", 0)),
            converged=bool(doc.get("converged", True)),
        )


@dataclass(frozen=True)
class TreeModel:
    """Binary regression tree in flat-array form.

    Node i is a leaf when ``feature[i] == -1``; otherwise rows with
    ``x[feature[i]] <= threshold[i]`` go to ``left[i]``, the rest to ``right[i]``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    min_leaf: int = 5
    max_depth: Optional[int] = None
    depth: int = 0

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of X."""
        X = np.asarray(X, dtype=float)
        X = X.reshape(-1, X.shape[-1]) if X.ndim > 1 else X.reshape(1, -1)
        node = np.zeros(X.shape[0], dtype=int)
        rows = np.arange(X.shape[0])
        for _ in range(self.depth + 1):
            feat = self.feature[node]
            internal = feat >= 0
            if not internal.any():
                break
            r = rows[internal]
            n = node[internal]
            go_left = X[r, feat[internal]] <= self.threshold[n]
            node[internal] = np.where(go_left, self.left[n], self.right[n])
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "type": "tree",
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "n_samples": self.n_samples.tolist(),
            "min_leaf": self.min_leaf,
            "max_depth": self.max_depth,
            "depth": self.depth,
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "TreeModel":
        return cls(
            feature=np.asarray(doc["feature"], dtype=int),
            threshold=np.asarray(doc["threshold"], dtype=float),
            left=np.asarray(doc["left"], dtype=int),
            right=np.asarray(doc["right"], dtype=int),
            value=np.asarray(doc["value"], dtype=float),
            n_samples=np.asarray(doc["n_samples"], dtype=int),
            min_leaf=int(doc.get("min_leaf", 5)),
            max_depth=doc.get("max_depth"),
            depth=int(doc.get("depth", 0)),
        )


def knn_mean(train_X: np.ndarray, train_y: np.ndarray, queries: np.ndarray, k: int) -> np.ndarray:
    """Unweighted mean target of the k nearest rows (Euclidean), ties to the lowest row index.

    With fewer than k training rows every row is used.
    """
    train_X = np.asarray(train_X, dtype=float)
    train_y = np.asarray(train_y, dtype=float)
    queries = np.asarray(queries, dtype=float).reshape(-1, train_X.shape[1])
    n = train_X.shape[0]
    k_eff = min(int(k), n)
    out = np.empty(queries.shape[0])
    if queries.shape[0] == 0:
        return out
    if k_eff == n:
        out[:] = train_y.mean()
        return out

    chunk = max(1, 2_000_000 // max(n * train_X.shape[1], 1))
    for start in range(0, queries.shape[0], chunk):
        q = queries[start:start + chunk]
        # squared distance has the same ordering (and ties) as the Euclidean distance
        dist = ((q[:, None, :] - train_X[None, :, :]) ** 2).sum(axis=2)
        kth = np.partition(dist, k_eff - 1, axis=1)[:, k_eff - 1][:, None]
        closer = dist < kth
        tied = dist == kth
        need = k_eff - closer.sum(axis=1)
        chosen = closer | (tied & (np.cumsum(tied, axis=1) <= need[:, None]))
        out[start:start + chunk] = (chosen.astype(float) @ train_y) / k_eff
    return out


@dataclass(frozen=True)
class KnnModel:
    train_X: np.ndarray
    train_y: np.ndarray
    k: int = 5

    def predict(self, X: np.ndarray) -> np.ndarray:
        return knn_mean(self.train_X, self.train_y, X, self.k)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "type": "knn",
            "k": self.k,
            "train_X": self.train_X.tolist(),
            "train_y": self.train_y.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "KnnModel":
        X = np.asarray(doc["train_X"], dtype=float)
        return cls(train_X=X.reshape(len(doc["train_y"]), -1), train_y=np.asarray(doc["train_y"], dtype=float), k=int(doc["k"]))


REGRESSOR_TYPES = {"bayes_ridge": BayesRidgeModel, "tree": TreeModel, "knn": KnnModel}


def regressor_from_dict(doc: Dict[str, Any]):
    return REGRESSOR_TYPES[doc["type"]].from_dict(doc)
