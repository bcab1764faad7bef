"""Linear support vector regression in the primal.

Minimises ``0.5 * ||w||^2 + C * sum(max(0, |y - Xw - b| - eps)^2)``; the bias is
not regularised.  The loss is continuously differentiable, so plain gradient
descent applies.  Steps that raise the objective are rejected and the step size
halved; accepted steps grow it gently.
"""

from __future__ import annotations

import numpy as np

from ..features import FeatureMatrix
from .base import DivergenceError, check_training_matrix
from .linear import LinearModel
from .specs import LinearSvrSpec


def svr_objective(w, b, X, y, epsilon, C) -> float:
    r = y - X @ w - b
    excess = np.maximum(np.abs(r) - epsilon, 0.0)
    return 0.5 * float(w @ w) + C * float(excess @ excess)


def _gradient(w, b, X, y, epsilon, C):
    r = y - X @ w - b
    g = np.sign(r) * np.maximum(np.abs(r) - epsilon, 0.0)
    return w - 2.0 * C * (X.T @ g), -2.0 * C * g.sum()


class SvrModel(LinearModel):
    def __init__(self, spec, columns, coefficients, intercept, objective_trace, n_iter):
        super().__init__(spec, columns, coefficients, intercept)
        self.objective_trace = np.asarray(objective_trace)
        self.n_iter = n_iter


def fit_linear_svr(train: FeatureMatrix, spec: LinearSvrSpec) -> SvrModel:
    check_training_matrix(train)
    X, y = train.X, train.y
    n, p = X.shape
    eps, C = spec.epsilon, spec.C
    # Lipschitz bound of the gradient: 1 + 2C * ||[X 1]||_2^2
    Xa = np.hstack([X, np.ones((n, 1))])
    lipschitz = 1.0 + 2.0 * C * float(np.linalg.norm(Xa, 2)) ** 2
    step = 1.0 / lipschitz
    w, b = np.zeros(p), 0.0
    obj = svr_objective(w, b, X, y, eps, C)
    trace = [obj]
    gw, gb = _gradient(w, b, X, y, eps, C)
    g0 = np.sqrt(gw @ gw + gb * gb)
    it = 0
    for it in range(1, spec.max_iter + 1):
        gnorm = np.sqrt(gw @ gw + gb * gb)
        if gnorm <= spec.tol * max(1.0, g0):
            break
        w_new, b_new = w - step * gw, b - step * gb
        obj_new = svr_objective(w_new, b_new, X, y, eps, C)
        if not np.isfinite(obj_new):
            raise DivergenceError("linear SVR objective became non-finite")
        if obj_new <= obj:
            w, b, obj = w_new, b_new, obj_new
            trace.append(obj)
            gw, gb = _gradient(w, b, X, y, eps, C)
            step *= 1.25
        else:
            step *= 0.5
            if step < 1e-30:
                break
    return SvrModel(spec, train.columns, w, b, trace, it)
