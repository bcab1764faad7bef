"""Design-matrix construction, standardisation, correlation analysis and backward elimination."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
import pandas as pd

from .ingest.align import AlignedDataset, _as_date
from .metrics import mae

logger = logging.getLogger(__name__)

TARGET = "dam_price"
CALENDAR_FIELDS = ("year", "month", "week", "day_of_year")
WIND_STATIONS = ("wind_speed_dublin_airport", "wind_speed_mace_head", "wind_speed_malin_head")


class FeatureError(ValueError):
    pass


@dataclass(frozen=True)
class Lag:
    column: str
    hours: int

    def __post_init__(self):
        if int(self.hours) != self.hours or self.hours <= 0:
            raise FeatureError(f"lag for {self.column!r} must be a positive whole number of hours, got {self.hours}")
        object.__setattr__(self, "hours", int(self.hours))

    @property
    def name(self) -> str:
        return f"{self.column}_lag{self.hours}"


@dataclass(frozen=True)
class FeatureSpec:
    """Which columns enter the design matrix, in order: base, lags, calendar, derived.

    Same-hour values of the target are never allowed as inputs; every lag must
    look strictly into the past.
    """

    base: tuple[str, ...] = ()
    lags: tuple[Lag, ...] = ()
    calendar: tuple[str, ...] = ()
    wind_average: tuple[str, ...] = ()
    target: str = TARGET

    def __post_init__(self):
        object.__setattr__(self, "base", tuple(self.base))
        object.__setattr__(self, "lags", tuple(l if isinstance(l, Lag) else Lag(*l) for l in self.lags))
        object.__setattr__(self, "calendar", tuple(self.calendar))
        object.__setattr__(self, "wind_average", tuple(self.wind_average))
        if self.target in self.base:
            raise FeatureError(f"target {self.target!r} cannot be a same-hour input feature")
        unknown = set(self.calendar) - set(CALENDAR_FIELDS)
        if unknown:
            raise FeatureError(f"unknown calendar fields {sorted(unknown)}; choose from {CALENDAR_FIELDS}")
        if len(self.wind_average) == 1:
            raise FeatureError("a wind-speed average needs at least two stations")
        names = self.column_names
        dupes = {n for n in names if names.count(n) > 1}
        if dupes:
            raise FeatureError(f"duplicate feature columns: {sorted(dupes)}")

    @property
    def column_names(self) -> list[str]:
        names = list(self.base) + [lag.name for lag in self.lags] + list(self.calendar)
        if self.wind_average:
            names.append("wind_speed_average")
        return names

    @property
    def max_lag(self) -> int:
        return max((lag.hours for lag in self.lags), default=0)

    @property
    def source_columns(self) -> set[str]:
        return set(self.base) | {lag.column for lag in self.lags} | set(self.wind_average) | {self.target}

    @classmethod
    def standard(cls) -> "FeatureSpec":
        """The final-model feature set: 23 named inputs plus three station wind speeds."""
        return cls(
            base=(
                "eu_gas_price",
                "ie_demand",
                "ni_demand",
                "total_demand",
                "ie_generation",
                "ni_generation",
                "total_generation",
                "ie_wind_generation",
                "ni_wind_generation",
                "total_wind_generation",
                "ie_wind_availability",
                "ni_wind_availability",
                "ni_solar_generation",
                "snsp",
            )
            + WIND_STATIONS,
            lags=(
                Lag(TARGET, 24),
                Lag(TARGET, 48),
                Lag(TARGET, 168),
                Lag("total_demand", 24),
                Lag("total_demand", 168),
            ),
            calendar=CALENDAR_FIELDS,
        )


@dataclass(frozen=True)
class FeatureMatrix:
    """Numeric design matrix with named columns, the target and (date, hour) row keys."""

    columns: tuple[str, ...]
    X: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    dates: np.ndarray = field(repr=False)
    hours: np.ndarray = field(repr=False)

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, len(self.columns))
        y = np.array(self.y, dtype=float).ravel()
        object.__setattr__(self, "columns", tuple(self.columns))
        if X.shape != (y.size, len(self.columns)):
            raise FeatureError(f"X shape {X.shape} inconsistent with {y.size} targets and {len(self.columns)} columns")
        if len(self.dates) != y.size or len(self.hours) != y.size:
            raise FeatureError("row keys must match the number of rows")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise FeatureError("feature matrix contains non-finite entries")
        for arr in (X, y):
            arr.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "dates", np.asarray(self.dates, dtype="datetime64[D]"))
        object.__setattr__(self, "hours", np.asarray(self.hours, dtype=np.int64))

    @classmethod
    def from_arrays(cls, X, y, columns: Sequence[str] | None = None) -> "FeatureMatrix":
        """Wrap plain arrays, giving rows synthetic hourly keys from 1970-01-01."""
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        n, p = X.shape
        columns = tuple(columns) if columns is not None else tuple(f"x{i}" for i in range(p))
        idx = np.arange(n)
        dates = np.datetime64("1970-01-01") + (idx // 24).astype("timedelta64[D]")
        return cls(columns, X, y, dates, idx % 24)

    def __len__(self):
        return self.y.size

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self._index(name)]

    def _index(self, name: str) -> int:
        try:
            return self.columns.index(name)
        except ValueError:
            raise FeatureError(f"unknown feature column {name!r}") from None

    def select(self, columns: Iterable[str]) -> "FeatureMatrix":
        columns = tuple(columns)
        idx = [self._index(c) for c in columns]
        return FeatureMatrix(columns, self.X[:, idx], self.y, self.dates, self.hours)

    def rows(self, index) -> "FeatureMatrix":
        if not isinstance(index, slice):
            index = np.asarray(index)
        return FeatureMatrix(self.columns, self.X[index], self.y[index], self.dates[index], self.hours[index])

    def with_X(self, X, columns: Sequence[str] | None = None) -> "FeatureMatrix":
        return FeatureMatrix(tuple(columns) if columns is not None else self.columns, X, self.y, self.dates, self.hours)

    def split_tail(self, fraction: float) -> tuple["FeatureMatrix", "FeatureMatrix"]:
        """Chronological split: the final ``fraction`` of rows becomes the second part."""
        if not 0.0 < fraction < 1.0:
            raise FeatureError("split fraction must be in (0, 1)")
        cut = len(self) - int(round(fraction * len(self)))
        if cut < 1 or cut >= len(self):
            raise FeatureError(f"cannot split {len(self)} rows with fraction {fraction}")
        return self.rows(slice(0, cut)), self.rows(slice(cut, None))


def _calendar_column(name: str, days: list[date]) -> np.ndarray:
    if name == "year":
        vals = [d.year for d in days]
    elif name == "month":
        vals = [d.month for d in days]
    elif name == "week":
        vals = [d.isocalendar()[1] for d in days]
    else:
        vals = [d.timetuple().tm_yday for d in days]
    return np.repeat(np.asarray(vals, dtype=float), 24)


def build_features(dataset: AlignedDataset, spec: FeatureSpec, start, end) -> FeatureMatrix:
    """One row per hour of ``start..end`` (inclusive dates).

    Lag columns are read from rows before the range, so the dataset must hold
    ``spec.max_lag`` hours of history ahead of ``start``.
    """
    start, end = _as_date(start), _as_date(end)
    if end < start:
        raise FeatureError(f"empty feature range {start}..{end}")
    missing = sorted(c for c in spec.source_columns if c not in dataset)
    if missing:
        raise FeatureError(f"dataset lacks columns {missing}")
    if end > dataset.end_date:
        raise FeatureError(f"range end {end} is after the dataset end {dataset.end_date}")
    lo = dataset.row_index(start)
    hi = dataset.row_index(end) + 24
    if lo - spec.max_lag < 0:
        need = start - timedelta(days=math.ceil(spec.max_lag / 24))
        raise FeatureError(
            f"insufficient history for lag {spec.max_lag}h: dataset starts {dataset.start_date}, "
            f"range {start} needs data from {need}"
        )
    cols = []
    for name in spec.base:
        cols.append(dataset.column(name)[lo:hi])
    for lag in spec.lags:
        cols.append(dataset.column(lag.column)[lo - lag.hours : hi - lag.hours])
    if spec.calendar:
        days = [start + timedelta(days=i) for i in range((hi - lo) // 24)]
        for name in spec.calendar:
            cols.append(_calendar_column(name, days))
    if spec.wind_average:
        cols.append(np.mean([dataset.column(c)[lo:hi] for c in spec.wind_average], axis=0))
    X = np.column_stack(cols) if cols else np.empty((hi - lo, 0))
    return FeatureMatrix(
        tuple(spec.column_names),
        X,
        dataset.column(spec.target)[lo:hi],
        dataset.dates[lo:hi],
        dataset.hours[lo:hi],
    )


@dataclass(frozen=True)
class ScalerState:
    """Per-column training mean and sample standard deviation.

    ``dropped`` lists zero-variance columns, which :func:`apply_scaler` removes.
    """

    columns: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray
    dropped: tuple[str, ...] = ()

    @property
    def retained(self) -> tuple[str, ...]:
        return tuple(c for c in self.columns if c not in self.dropped)

    def invert(self, matrix: FeatureMatrix) -> FeatureMatrix:
        """Map a scaled matrix back to original units (retained columns only)."""
        keep = [self.columns.index(c) for c in self.retained]
        if matrix.columns != self.retained:
            raise FeatureError("matrix columns do not match the scaler's retained columns")
        return matrix.with_X(matrix.X * self.std[keep] + self.mean[keep])


def fit_scaler(matrix: FeatureMatrix) -> ScalerState:
    if len(matrix) < 2:
        raise FeatureError(f"need at least 2 rows to fit a scaler, got {len(matrix)}")
    mean = matrix.X.mean(axis=0)
    std = matrix.X.std(axis=0, ddof=1)
    dropped = tuple(c for c, s in zip(matrix.columns, std) if not s > 0)
    if dropped:
        warnings.warn(f"dropping zero-variance columns: {list(dropped)}", stacklevel=2)
    mean.setflags(write=False)
    std.setflags(write=False)
    return ScalerState(matrix.columns, mean, std, dropped)


def apply_scaler(state: ScalerState, matrix: FeatureMatrix) -> FeatureMatrix:
    if matrix.columns != state.columns:
        extra = sorted(set(matrix.columns) - set(state.columns))
        absent = sorted(set(state.columns) - set(matrix.columns))
        raise FeatureError(f"scaler column mismatch: unknown {extra}, missing {absent}")
    keep = [i for i, c in enumerate(state.columns) if c not in state.dropped]
    X = (matrix.X[:, keep] - state.mean[keep]) / state.std[keep]
    return matrix.with_X(X, state.retained)


def pearson_corr(x, y) -> float:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise ValueError("need at least 2 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("correlation undefined for a constant input")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


@dataclass(frozen=True)
class Period:
    label: str
    start: date
    end: date

    def __post_init__(self):
        object.__setattr__(self, "start", _as_date(self.start))
        object.__setattr__(self, "end", _as_date(self.end))

    @classmethod
    def year(cls, year: int, end: date | None = None) -> "Period":
        return cls(str(year), date(year, 1, 1), end or date(year, 12, 31))


def correlation_report(
    dataset: AlignedDataset,
    features: Sequence[str],
    target: str = TARGET,
    periods: Sequence[Period] = (),
) -> pd.DataFrame:
    """Feature rows by period columns of PCC against ``target``; undefined cells are NaN."""
    if not periods:
        periods = [Period("all", dataset.start_date, dataset.end_date)]
    table = pd.DataFrame(index=pd.Index(list(features), name="feature"), columns=[p.label for p in periods], dtype=float)
    for period in periods:
        part = dataset.slice_dates(period.start, period.end)
        y = part.column(target)
        for feat in features:
            try:
                table.loc[feat, period.label] = pearson_corr(part.column(feat), y)
            except ValueError as exc:
                warnings.warn(f"PCC undefined for {feat!r} in {period.label}: {exc}", stacklevel=2)
                table.loc[feat, period.label] = np.nan
    return table


def write_correlation_report(table: pd.DataFrame, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path, float_format="%.4f", na_rep="undefined", lineterminator="\n")
    return path


@dataclass(frozen=True)
class EliminationStep:
    step: int
    removed: str | None
    n_features: int
    mae: float


@dataclass(frozen=True)
class EliminationResult:
    selected: tuple[str, ...]
    best_mae: float
    trail: tuple[EliminationStep, ...]

    def trail_frame(self) -> pd.DataFrame:
        return pd.DataFrame([vars(s) for s in self.trail])


def backward_eliminate(
    trainer: Callable[[FeatureMatrix], object],
    train: FeatureMatrix,
    validation: FeatureMatrix,
    patience: int | None = None,
) -> EliminationResult:
    """Greedy backward elimination by smallest absolute coefficient.

    Each step fits ``trainer`` on the current columns, scores validation MAE and
    removes the column whose coefficient has the smallest magnitude (earliest
    column on ties).  The path runs until one feature remains, or until
    ``patience`` consecutive removals fail to beat the best MAE seen.  The
    best-scoring subset on the path is returned.
    """
    if train.columns != validation.columns:
        raise FeatureError("train and validation matrices must share columns")
    current = list(train.columns)
    trail: list[EliminationStep] = []
    best_cols, best_mae = tuple(current), math.inf
    removed = None
    stale = 0
    while True:
        model = trainer(train.select(current))
        coef = getattr(model, "coefficients", None)
        if coef is None:
            raise FeatureError(f"{type(model).__name__} exposes no per-feature coefficients")
        score = mae(validation.y, model.predict(validation.select(current)))
        trail.append(EliminationStep(len(trail), removed, len(current), score))
        logger.debug("elimination step %d: %d features, MAE %.4f", len(trail) - 1, len(current), score)
        if score < best_mae:
            best_cols, best_mae, stale = tuple(current), score, 0
        else:
            stale += 1
            if patience is not None and stale >= patience:
                break
        if len(current) < 2:
            break
        drop = int(np.argmin(np.abs(np.asarray(coef, dtype=float))))
        removed = current.pop(drop)
    return EliminationResult(best_cols, best_mae, tuple(trail))
