"""Point-forecast error metrics: MAE, RMSE and the naive-normalised rMAE."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class MetricError(ValueError):
    pass


class DegenerateBaselineError(MetricError):
    """The seasonal naive forecast is perfect on the window, so rMAE is undefined."""


def _pair(actual, predicted) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(actual, dtype=float).ravel()
    q = np.asarray(predicted, dtype=float).ravel()
    if p.size == 0:
        raise MetricError("empty forecast window")
    if p.shape != q.shape:
        raise MetricError(f"length mismatch: {p.size} actuals vs {q.size} predictions")
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
        raise MetricError("non-finite values in forecast pair")
    return p, q


def mae(actual, predicted) -> float:
    p, q = _pair(actual, predicted)
    return float(np.mean(np.abs(p - q)))


def rmse(actual, predicted) -> float:
    p, q = _pair(actual, predicted)
    return float(np.sqrt(np.mean((p - q) ** 2)))


def naive_forecast(actuals_with_context, m: int = 24) -> np.ndarray:
    """Seasonal persistence: the forecast for hour k is the actual at hour k - m.

    ``actuals_with_context`` holds the ``m`` hours preceding the window followed
    by the window itself; the result has the window's length.
    """
    a = np.asarray(actuals_with_context, dtype=float).ravel()
    if m < 1:
        raise MetricError("seasonal length must be positive")
    if a.size <= m:
        raise MetricError(f"need {m} hours of pre-context plus at least one window hour, got {a.size} values")
    return a[:-m].copy()


def rmae(actual, predicted, m: int = 24) -> float:
    """MAE over the window divided by the in-window seasonal naive MAE.

    The denominator is ``mean(|p_i - p_{i-m}|)`` for ``i = m+1..N``, using only
    actuals inside the window, while the numerator averages over all ``N``
    hours.
    """
    p, q = _pair(actual, predicted)
    n = p.size
    if n <= m:
        raise MetricError(f"window of {n} hours is not longer than the seasonal length {m}")
    denom = float(np.mean(np.abs(p[m:] - p[:-m])))
    if denom == 0.0:
        raise DegenerateBaselineError(f"naive baseline degenerate: window is exactly {m}-periodic")
    return float(np.mean(np.abs(p - q))) / denom


@dataclass(frozen=True)
class ForecastPair:
    actual: np.ndarray = field(repr=False)
    predicted: np.ndarray = field(repr=False)

    def __post_init__(self):
        p, q = _pair(self.actual, self.predicted)
        object.__setattr__(self, "actual", p)
        object.__setattr__(self, "predicted", q)

    def mae(self) -> float:
        return mae(self.actual, self.predicted)

    def rmse(self) -> float:
        return rmse(self.actual, self.predicted)

    def rmae(self, m: int = 24) -> float:
        return rmae(self.actual, self.predicted, m)
