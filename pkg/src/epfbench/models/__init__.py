"""Regressor zoo behind a uniform ``fit(spec, train)`` / ``model.predict(matrix)`` contract."""

from __future__ import annotations

import pickle
from pathlib import Path

from ..features import FeatureMatrix
from .base import ColumnMismatchError, DivergenceError, ModelError, TrainedModel
from .ensemble import BoostModel, ForestModel, fit_gradient_boost, fit_random_forest
from .knn import KnnModel, fit_knn
from .linear import LinearModel, fit_ols
from .neural import NetworkModel, fit_mlp, fit_sgd_linear
from .search import BudgetExceededError, SearchResult, grid_search
from .specs import (
    GradientBoostSpec,
    KnnSpec,
    LinearSvrSpec,
    MlpSpec,
    ModelSpec,
    OlsSpec,
    RandomForestSpec,
    SgdLinearSpec,
    SpecError,
    TreeSpec,
    spec_from_dict,
    zoo,
)
from .svr import SvrModel, fit_linear_svr
from .tree import RegressionTree, TreeModel, build_tree, fit_tree

_FITTERS = {
    OlsSpec: fit_ols,
    SgdLinearSpec: fit_sgd_linear,
    MlpSpec: fit_mlp,
    KnnSpec: fit_knn,
    TreeSpec: fit_tree,
    RandomForestSpec: fit_random_forest,
    GradientBoostSpec: fit_gradient_boost,
    LinearSvrSpec: fit_linear_svr,
}


def fit(spec: ModelSpec, train: FeatureMatrix) -> TrainedModel:
    try:
        fitter = _FITTERS[type(spec)]
    except KeyError:
        raise SpecError(f"no fitter for {type(spec).__name__}") from None
    return fitter(train, spec)


def predict(model: TrainedModel, matrix: FeatureMatrix):
    return model.predict(matrix)


MODEL_FORMAT = "epfbench-model"
MODEL_FORMAT_VERSION = 1


def save_model(model: TrainedModel, path: str | Path) -> Path:
    """Pickle ``model`` inside a small versioned envelope."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    envelope = {"format": MODEL_FORMAT, "version": MODEL_FORMAT_VERSION, "model": model}
    with path.open("wb") as fh:
        pickle.dump(envelope, fh, protocol=4)
    return path


def load_model(path: str | Path) -> TrainedModel:
    with Path(path).open("rb") as fh:
        envelope = pickle.load(fh)
    if not isinstance(envelope, dict) or envelope.get("format") != MODEL_FORMAT:
        raise ModelError(f"{path} is not a saved model")
    if envelope.get("version") != MODEL_FORMAT_VERSION:
        raise ModelError(f"{path}: model format version {envelope.get('version')} is not supported")
    return envelope["model"]


__all__ = [
    "BoostModel",
    "BudgetExceededError",
    "ColumnMismatchError",
    "DivergenceError",
    "ForestModel",
    "GradientBoostSpec",
    "KnnModel",
    "KnnSpec",
    "LinearModel",
    "LinearSvrSpec",
    "MlpSpec",
    "ModelError",
    "ModelSpec",
    "NetworkModel",
    "OlsSpec",
    "RandomForestSpec",
    "RegressionTree",
    "SearchResult",
    "SgdLinearSpec",
    "SpecError",
    "SvrModel",
    "TrainedModel",
    "TreeModel",
    "TreeSpec",
    "build_tree",
    "fit",
    "fit_gradient_boost",
    "fit_knn",
    "fit_linear_svr",
    "fit_mlp",
    "fit_ols",
    "fit_random_forest",
    "fit_sgd_linear",
    "fit_tree",
    "grid_search",
    "load_model",
    "predict",
    "save_model",
    "spec_from_dict",
    "zoo",
]
