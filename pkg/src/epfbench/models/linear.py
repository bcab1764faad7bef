"""Ordinary least squares via the normal equations."""

from __future__ import annotations

import logging

import numpy as np

from ..features import FeatureMatrix
from .base import ModelError, TrainedModel, check_training_matrix
from .specs import OlsSpec

logger = logging.getLogger(__name__)

JITTER = 1e-8
_RCOND = 1e-12


class LinearModel(TrainedModel):
    def __init__(self, spec, columns, coefficients, intercept, jittered=False):
        super().__init__(spec, columns)
        self.coefficients = np.asarray(coefficients, dtype=float)
        self.intercept = float(intercept)
        self.jittered = jittered

    def _predict(self, X):
        return X @ self.coefficients + self.intercept

    def parameters(self):
        return {"coefficients": self.coefficients, "intercept": np.array([self.intercept])}


def _singular(A: np.ndarray) -> bool:
    eig = np.linalg.eigvalsh(A)
    top = eig[-1]
    return not top > 0 or eig[0] <= _RCOND * top


def solve_normal_equations(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float, bool]:
    """Least-squares coefficients and intercept from the centred normal equations.

    The system is formed on column-centred data divided by the row count.  If
    it is singular (or numerically so) a diagonal jitter of ``JITTER`` is added
    and the solve retried once.
    """
    n, p = X.shape
    y_mean = float(y.mean())
    if p == 0:
        return np.zeros(0), y_mean, False
    x_mean = X.mean(axis=0)
    Xc = X - x_mean
    A = Xc.T @ Xc / n
    rhs = Xc.T @ (y - y_mean) / n
    jittered = False
    if _singular(A):
        logger.info("normal equations singular; retrying with diagonal jitter %g", JITTER)
        A = A + JITTER * np.eye(p)
        jittered = True
        if _singular(A):
            raise ModelError("normal equations singular even after diagonal jitter")
    try:
        beta = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise ModelError(f"normal equations could not be solved: {exc}") from None
    if not np.all(np.isfinite(beta)):
        raise ModelError("normal equations produced non-finite coefficients")
    return beta, y_mean - float(x_mean @ beta), jittered


def fit_ols(train: FeatureMatrix, spec: OlsSpec | None = None) -> LinearModel:
    check_training_matrix(train)
    beta, intercept, jittered = solve_normal_equations(train.X, train.y)
    return LinearModel(spec or OlsSpec(), train.columns, beta, intercept, jittered)
