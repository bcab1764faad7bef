from __future__ import annotations

import numpy as np

from ..features import FeatureMatrix
from .specs import ModelSpec


class ModelError(ValueError):
    pass


class ColumnMismatchError(ModelError):
    pass


class DivergenceError(ModelError):
    pass


def check_training_matrix(train: FeatureMatrix):
    if len(train) == 0:
        raise ModelError("empty training matrix")
    # FeatureMatrix already rejects non-finite cells; guard against raw arrays slipping in
    if not (np.all(np.isfinite(train.X)) and np.all(np.isfinite(train.y))):
        raise ModelError("training matrix contains non-finite values")


class TrainedModel:
    """Fitted state plus the feature names it was fitted on.

    Subclasses implement ``_predict`` on a bare array and ``parameters``.
    Instances are treated as immutable once returned by ``fit``.
    """

    def __init__(self, spec: ModelSpec, columns):
        self.spec = spec
        self.columns = tuple(columns)

    def check_columns(self, columns):
        columns = tuple(columns)
        if columns == self.columns:
            return
        missing = [c for c in self.columns if c not in columns]
        unexpected = [c for c in columns if c not in self.columns]
        detail = f"missing {missing}, unexpected {unexpected}"
        if not missing and not unexpected:
            detail = "same columns in a different order"
        raise ColumnMismatchError(f"predict columns differ from fitted columns: {detail}")

    def predict(self, matrix: FeatureMatrix) -> np.ndarray:
        self.check_columns(matrix.columns)
        out = np.asarray(self._predict(matrix.X), dtype=float)
        if not np.all(np.isfinite(out)):
            raise ModelError(f"{type(self).__name__} produced non-finite predictions")
        return out

    def _predict(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def parameters(self) -> dict[str, np.ndarray]:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}({self.spec!r}, {len(self.columns)} features)"
