"""Squared-error gradient boosting over depth-bounded regression trees."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ._checks import as_matrix, as_row


@dataclass(frozen=True)
class GbtHyperparams:
    n_rounds: int = 100
    max_depth: int = 3
    learning_rate: float = 0.1
    min_samples_leaf: int = 5
    subsample: float = 1.0

    def __post_init__(self):
        if self.n_rounds < 0:
            raise ValueError("n_rounds must be >= 0")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if not 0.0 < self.subsample <= 1.0:
            raise ValueError("subsample must be in (0, 1]")


@dataclass(frozen=True)
class Tree:
    """Array-encoded binary tree; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        return kernels.predict_tree(
            self.feature, self.threshold, self.left, self.right, self.value, X
        )


@dataclass(frozen=True)
class LatencyModel:
    base_prediction: float
    learning_rate: float
    n_features: int
    trees: list[Tree] = field(default_factory=list)
    train_mse: list[float] = field(default_factory=list)

    def predict(self, X) -> np.ndarray:
        X = as_matrix(X, self.n_features)
        out = np.full(X.shape[0], self.base_prediction)
        for tree in self.trees:
            out += self.learning_rate * tree.predict(X)
        return out

    def to_json(self) -> str:
        """Debug dump; not a stable format."""
        return json.dumps(
            {
                "base_prediction": self.base_prediction,
                "learning_rate": self.learning_rate,
                "n_features": self.n_features,
                "trees": [
                    {k: getattr(t, k).tolist() for k in ("feature", "threshold", "left", "right", "value")}
                    for t in self.trees
                ],
            }
        )


def _grow_tree(X, r, order, rows_mask, hp):
    feature, threshold, left, right, value = [], [], [], [], []

    def grow(mask, depth):
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(r[mask != 0].mean()))
        if depth >= hp.max_depth:
            return node
        f, thr, gain = kernels.best_split(X, r, order, mask, hp.min_samples_leaf)
        if f < 0 or gain <= 1e-12:
            return node
        goes_left = X[:, f] <= thr
        lmask = (mask & goes_left).astype(np.uint8)
        rmask = (mask & ~goes_left).astype(np.uint8)
        feature[node] = f
        threshold[node] = thr
        left[node] = grow(lmask, depth + 1)
        right[node] = grow(rmask, depth + 1)
        return node

    grow(rows_mask, 0)
    return Tree(
        np.asarray(feature, dtype=np.intp),
        np.asarray(threshold, dtype=np.float64),
        np.asarray(left, dtype=np.intp),
        np.asarray(right, dtype=np.intp),
        np.asarray(value, dtype=np.float64),
    )


def fit_gbt(X, y, hp: GbtHyperparams | None = None, seed: int = 0) -> LatencyModel:
    """Fit a boosted regression-tree latency model.

    Rows are put in a canonical order first, so the fit does not depend on the
    order of the training rows. ``seed`` only matters when ``hp.subsample < 1``.
    """
    hp = hp or GbtHyperparams()
    X = as_matrix(X)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] == 0:
        raise ValueError("empty training set")
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    if not np.all(np.isfinite(y)):
        raise ValueError("non-finite training target")

    canon = np.lexsort(np.column_stack([X, y]).T[::-1])
    X = np.ascontiguousarray(X[canon])
    y = y[canon]
    n = X.shape[0]

    base = float(y.mean())
    pred = np.full(n, base)
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").astype(np.intp))
    rng = np.random.default_rng(seed)
    full = np.ones(n, dtype=np.uint8)
    trees, mse = [], [float(np.mean((y - pred) ** 2))]
    for _ in range(hp.n_rounds):
        r = y - pred
        if hp.subsample < 1.0:
            mask = (rng.random(n) < hp.subsample).astype(np.uint8)
            if mask.sum() == 0:
                mask = full
        else:
            mask = full
        tree = _grow_tree(X, r, order, mask, hp)
        trees.append(tree)
        pred = pred + hp.learning_rate * tree.predict(X)
        mse.append(float(np.mean((y - pred) ** 2)))
    return LatencyModel(base, hp.learning_rate, X.shape[1], trees, mse)


def predict_latency(model: LatencyModel, x) -> float:
    return float(model.predict(as_row(x, model.n_features))[0])
