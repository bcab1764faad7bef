"""CART regression trees grown on presorted indices."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..features import FeatureMatrix
from .base import TrainedModel, check_training_matrix
from .specs import TreeSpec


@dataclass
class RegressionTree:
    """Array-encoded binary tree; ``left[i] == -1`` marks a leaf.

    Rows with ``x[feature] <= threshold`` go left.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.value.size

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.left < 0))

    @cached_property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.left[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        for _ in range(self.depth):
            internal = self.left[node] >= 0
            if not internal.any():
                break
            go_left = X[rows, self.feature[node]] <= self.threshold[node]
            node = np.where(internal, np.where(go_left, self.left[node], self.right[node]), node)
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]


def presort(X: np.ndarray) -> np.ndarray:
    """Row order per feature, shape (p, n)."""
    return np.argsort(X, axis=0, kind="stable").T.copy()


def _best_split(X, y, S, features):
    """Best (feature, position) among ``features`` for the node whose sorted rows are ``S``.

    Maximising ``sum_L^2/n_L + sum_R^2/n_R`` on node-centred targets is the
    same as minimising the summed child squared error.
    """
    m = S.shape[1]
    Sf = S[features]
    xs = X[Sf, features[:, None]]
    yn = y[S[0]]
    yc = y[Sf] - yn.mean()
    total = yc[0].sum()
    left = np.cumsum(yc, axis=1)[:, :-1]
    n_left = np.arange(1, m, dtype=float)
    score = left**2 / n_left + (total - left) ** 2 / (m - n_left)
    valid = xs[:, :-1] < xs[:, 1:]
    if not valid.any():
        return None
    score = np.where(valid, score, -np.inf)
    flat = int(np.argmax(score))
    fi, pos = divmod(flat, m - 1)
    lo, hi = xs[fi, pos], xs[fi, pos + 1]
    threshold = 0.5 * (lo + hi)
    if not threshold < hi:  # adjacent floats
        threshold = lo
    return fi, pos, threshold


def build_tree(
    X: np.ndarray,
    y: np.ndarray,
    max_depth: int | None = None,
    min_samples_split: int = 2,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
    order: np.ndarray | None = None,
) -> RegressionTree:
    """Grow a CART tree by exhaustive midpoint search.

    ``max_features`` draws that many candidate features per split (``rng``
    required); ``order`` may pass a precomputed :func:`presort` of ``X``.
    """
    n, p = X.shape
    if order is None:
        order = presort(X)
    if max_features is not None and max_features < p and rng is None:
        raise ValueError("a random feature subset needs an rng")
    max_depth = math.inf if max_depth is None else max_depth
    all_features = np.arange(p)

    feature, threshold, left, right, value, count = [], [], [], [], [], []

    def new_node(S):
        yn = y[S[0]] if p else y
        feature.append(0)
        threshold.append(np.nan)
        left.append(-1)
        right.append(-1)
        value.append(float(yn.mean()))
        count.append(yn.size)
        return len(value) - 1

    mask = np.zeros(n, dtype=bool)
    root_S = order if p else np.arange(n)[None, :]
    stack = [(new_node(root_S), root_S, 0)]
    while stack:
        node, S, depth = stack.pop()
        m = S.shape[1]
        if p == 0 or depth >= max_depth or m < min_samples_split:
            continue
        yn = y[S[0]]
        if np.all(yn == yn[0]):
            continue
        if max_features is not None and max_features < p:
            feats = np.sort(rng.choice(p, size=max_features, replace=False))
        else:
            feats = all_features
        found = _best_split(X, y, S, feats)
        if found is None:
            continue
        fi, pos, thr = found
        chosen = S[feats[fi]]
        mask[chosen[: pos + 1]] = True
        go = mask[S]
        S_left = S[go].reshape(p, pos + 1)
        S_right = S[~go].reshape(p, m - pos - 1)
        mask[chosen[: pos + 1]] = False
        feature[node] = int(feats[fi])
        threshold[node] = float(thr)
        left_id = new_node(S_left)
        right_id = new_node(S_right)
        left[node], right[node] = left_id, right_id
        stack.append((right_id, S_right, depth + 1))
        stack.append((left_id, S_left, depth + 1))

    return RegressionTree(
        np.asarray(feature, dtype=np.int64),
        np.asarray(threshold, dtype=float),
        np.asarray(left, dtype=np.int64),
        np.asarray(right, dtype=np.int64),
        np.asarray(value, dtype=float),
        np.asarray(count, dtype=np.int64),
    )


def _tree_params(tree: RegressionTree, prefix=""):
    return {
        f"{prefix}feature": tree.feature,
        f"{prefix}threshold": tree.threshold,
        f"{prefix}left": tree.left,
        f"{prefix}value": tree.value,
    }


class TreeModel(TrainedModel):
    def __init__(self, spec, columns, tree: RegressionTree):
        super().__init__(spec, columns)
        self.tree = tree

    def _predict(self, X):
        return self.tree.predict(X)

    def parameters(self):
        return _tree_params(self.tree)


def fit_tree(train: FeatureMatrix, spec: TreeSpec | None = None) -> TreeModel:
    spec = spec or TreeSpec()
    check_training_matrix(train)
    tree = build_tree(train.X, train.y, spec.max_depth, spec.min_samples_split)
    return TreeModel(spec, train.columns, tree)
