"""Tree ensembles: bagged random forests and squared-loss gradient boosting."""

from __future__ import annotations

import math

import numpy as np

from ..features import FeatureMatrix
from .base import TrainedModel, check_training_matrix
from .specs import GradientBoostSpec, RandomForestSpec
from .tree import RegressionTree, _tree_params, build_tree, presort


class ForestModel(TrainedModel):
    def __init__(self, spec, columns, trees: list[RegressionTree]):
        super().__init__(spec, columns)
        self.trees = trees

    def tree_predictions(self, X) -> np.ndarray:
        return np.stack([t.predict(X) for t in self.trees])

    def _predict(self, X):
        return self.tree_predictions(X).mean(axis=0)

    def parameters(self):
        params = {}
        for i, t in enumerate(self.trees):
            params.update(_tree_params(t, f"t{i}_"))
        return params


def _n_features(max_features, p):
    if max_features is None:
        return p
    if max_features == "sqrt":
        return max(1, math.ceil(math.sqrt(p)))
    return min(int(max_features), p)


def fit_random_forest(train: FeatureMatrix, spec: RandomForestSpec) -> ForestModel:
    check_training_matrix(train)
    X, y = train.X, train.y
    n, p = X.shape
    rng = np.random.default_rng(spec.seed)
    mf = _n_features(spec.max_features, p) if p else None
    shared_order = None if spec.bootstrap else presort(X)
    trees = []
    for _ in range(spec.n_trees):
        if spec.bootstrap:
            rows = rng.integers(0, n, size=n)
            Xb, yb, order = X[rows], y[rows], None
        else:
            Xb, yb, order = X, y, shared_order
        trees.append(build_tree(Xb, yb, spec.max_depth, spec.min_samples_split, mf, rng, order))
    return ForestModel(spec, train.columns, trees)


class BoostModel(TrainedModel):
    """``init + learning_rate * sum(tree_t(x))``."""

    def __init__(self, spec, columns, init, trees, train_loss):
        super().__init__(spec, columns)
        self.init = float(init)
        self.trees = trees
        self.train_loss = np.asarray(train_loss)

    def staged_predict(self, X):
        pred = np.full(X.shape[0], self.init)
        yield pred.copy()
        for t in self.trees:
            pred += self.spec.learning_rate * t.predict(X)
            yield pred.copy()

    def _predict(self, X):
        pred = np.full(X.shape[0], self.init)
        for t in self.trees:
            pred += self.spec.learning_rate * t.predict(X)
        return pred

    def parameters(self):
        params = {"init": np.array([self.init])}
        for i, t in enumerate(self.trees):
            params.update(_tree_params(t, f"t{i}_"))
        return params


def fit_gradient_boost(train: FeatureMatrix, spec: GradientBoostSpec) -> BoostModel:
    """Stagewise fit of depth-limited trees to the current residuals.

    ``train_loss[t]`` is the training MSE after ``t`` stages (index 0 is the
    constant initial model).
    """
    check_training_matrix(train)
    X, y = train.X, train.y
    order = presort(X)
    init = float(y.mean())
    pred = np.full(y.size, init)
    losses = [float(np.mean((y - pred) ** 2))]
    trees = []
    for _ in range(spec.n_trees):
        tree = build_tree(X, y - pred, spec.max_depth, spec.min_samples_split, order=order)
        pred = pred + spec.learning_rate * tree.predict(X)
        trees.append(tree)
        losses.append(float(np.mean((y - pred) ** 2)))
    return BoostModel(spec, train.columns, init, trees, losses)
