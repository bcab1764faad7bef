"""k-nearest-neighbour regression by exhaustive Euclidean search."""

from __future__ import annotations

import numpy as np

from ..features import FeatureMatrix
from .base import ModelError, TrainedModel, check_training_matrix
from .specs import KnnSpec

# query rows per distance block; bounds the (block, n_train, p) temporary
_BLOCK_ELEMENTS = 4_000_000


def pairwise_distances(Q: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Euclidean distances from each query row to each training row, by direct differences."""
    n, p = X.shape
    out = np.empty((Q.shape[0], n))
    block = max(1, _BLOCK_ELEMENTS // max(1, n * max(p, 1)))
    for lo in range(0, Q.shape[0], block):
        diff = Q[lo : lo + block, None, :] - X[None, :, :]
        out[lo : lo + block] = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return out


def nearest(dist_row: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k smallest distances; ties broken by lower training index."""
    if k >= dist_row.size:
        return np.argsort(dist_row, kind="stable")
    part = np.argpartition(dist_row, k - 1)[:k]
    kth = dist_row[part].max()
    cand = np.flatnonzero(dist_row <= kth)
    order = np.lexsort((cand, dist_row[cand]))
    return cand[order[:k]]


class KnnModel(TrainedModel):
    def __init__(self, spec: KnnSpec, columns, X, y):
        super().__init__(spec, columns)
        self.X = X
        self.y = y

    def neighbours(self, Q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        dist = pairwise_distances(Q, self.X)
        idx = np.vstack([nearest(row, self.spec.k) for row in dist])
        return idx, np.take_along_axis(dist, idx, axis=1)

    def _predict(self, X):
        out = np.empty(X.shape[0])
        dist = pairwise_distances(X, self.X)
        for i, row in enumerate(dist):
            idx = nearest(row, self.spec.k)
            d = row[idx]
            targets = self.y[idx]
            if self.spec.weighting == "uniform":
                out[i] = targets.mean()
                continue
            zero = d == 0.0
            if zero.any():
                out[i] = targets[zero].mean()
            else:
                w = 1.0 / d
                out[i] = (w @ targets) / w.sum()
        return out

    def parameters(self):
        return {"X": self.X, "y": self.y}


def fit_knn(train: FeatureMatrix, spec: KnnSpec) -> KnnModel:
    check_training_matrix(train)
    if spec.k > len(train):
        raise ModelError(f"k={spec.k} exceeds the {len(train)} training rows")
    return KnnModel(spec, train.columns, train.X.copy(), train.y.copy())
