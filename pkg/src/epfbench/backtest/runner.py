"""Execute every (plan entry, model) run and collect evaluation records."""

from __future__ import annotations

import logging
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import date, timedelta
from typing import Mapping

import numpy as np

from ..features import FeatureSpec, ScalerState, apply_scaler, build_features, fit_scaler
from ..ingest.align import AlignedDataset
from ..metrics import mae, rmae, rmse
from ..models import fit
from ..models.base import TrainedModel
from ..models.specs import ModelSpec
from .plan import BacktestPlan, PlanEntry

logger = logging.getLogger(__name__)


class CoverageError(ValueError):
    pass


@dataclass(frozen=True)
class RunArtifacts:
    """Per-run outputs kept alongside the record; not part of equality."""

    dates: np.ndarray
    hours: np.ndarray
    actual: np.ndarray
    predicted: np.ndarray
    model: TrainedModel | None = None
    scaler: ScalerState | None = None


@dataclass(frozen=True)
class EvaluationRecord:
    model: str
    quarter: str
    window: str
    window_index: int
    train_start: date
    train_end: date
    test_start: date
    test_end: date
    seed: int
    status: str  # "ok" or "failed"
    mae: float = math.nan
    rmse: float = math.nan
    rmae: float = math.nan
    n_train: int = 0
    n_test: int = 0
    error: str = ""
    runtime: float = field(default=0.0, compare=False)
    artifacts: RunArtifacts | None = field(default=None, compare=False, repr=False)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_dict(self, runtime: bool = False) -> dict:
        d = asdict(self)
        d.pop("artifacts")
        if not runtime:
            d.pop("runtime")
        for k in ("train_start", "train_end", "test_start", "test_end"):
            d[k] = d[k].isoformat()
        return d


def check_coverage(plan: BacktestPlan, dataset: AlignedDataset, spec: FeatureSpec):
    """Raise before any run if some entry lacks data or lag history."""
    history = timedelta(days=math.ceil(spec.max_lag / 24))
    problems = []
    for e in plan:
        need_from = e.train_start - history
        if need_from < dataset.start_date or e.test_end > dataset.end_date:
            problems.append(f"{e.quarter}/{e.window} needs {need_from}..{e.test_end}")
    if problems:
        raise CoverageError(
            f"dataset covers {dataset.start_date}..{dataset.end_date}; "
            + "; ".join(problems)
        )
    missing = sorted(c for c in spec.source_columns | {spec.target} if c not in dataset)
    if missing:
        raise CoverageError(f"dataset lacks columns {missing}")


def run_one(
    entry: PlanEntry,
    name: str,
    spec: ModelSpec,
    dataset: AlignedDataset,
    feature_spec: FeatureSpec,
    keep_models: bool = False,
) -> EvaluationRecord:
    base = dict(
        model=name,
        quarter=entry.quarter,
        window=entry.window,
        window_index=entry.window_index,
        train_start=entry.train_start,
        train_end=entry.train_end,
        test_start=entry.test_start,
        test_end=entry.test_end,
        seed=spec.seed,
    )
    t0 = time.perf_counter()
    try:
        train = build_features(dataset, feature_spec, entry.train_start, entry.train_end)
        test = build_features(dataset, feature_spec, entry.test_start, entry.test_end)
        with warnings.catch_warnings():
            # short windows routinely hold a single calendar year
            warnings.simplefilter("ignore")
            scaler = fit_scaler(train)
        train_s, test_s = apply_scaler(scaler, train), apply_scaler(scaler, test)
        model = fit(spec, train_s)
        pred = model.predict(test_s)
        if not np.all(np.isfinite(pred)):
            raise FloatingPointError("non-finite predictions")
        scores = dict(mae=mae(test.y, pred), rmse=rmse(test.y, pred), rmae=rmae(test.y, pred))
    except Exception as exc:  # failures become records, never dropped
        logger.warning("run %s %s/%s failed: %s", name, entry.quarter, entry.window, exc)
        return EvaluationRecord(
            **base,
            status="failed",
            error=f"{type(exc).__name__}: {exc}",
            runtime=time.perf_counter() - t0,
        )
    artifacts = RunArtifacts(
        test.dates,
        test.hours,
        test.y,
        pred,
        model if keep_models else None,
        scaler if keep_models else None,
    )
    return EvaluationRecord(
        **base,
        status="ok",
        n_train=len(train),
        n_test=len(test),
        runtime=time.perf_counter() - t0,
        artifacts=artifacts,
        **scores,
    )


_WORKER: dict = {}


def _init_worker(dataset, feature_spec, keep_models):
    _WORKER.update(dataset=dataset, feature_spec=feature_spec, keep_models=keep_models)


def _run_task(task):
    entry, name, spec = task
    return run_one(entry, name, spec, _WORKER["dataset"], _WORKER["feature_spec"], _WORKER["keep_models"])


def run_backtest(
    plan: BacktestPlan,
    models: Mapping[str, ModelSpec],
    dataset: AlignedDataset,
    feature_spec: FeatureSpec,
    jobs: int = 1,
    keep_models: bool = False,
) -> list[EvaluationRecord]:
    """One record per (entry, model), in plan order then model order.

    ``jobs > 1`` dispatches runs to worker processes.  Each run is seeded
    from its spec, so records do not depend on scheduling.
    """
    if not models:
        raise ValueError("no models to run")
    check_coverage(plan, dataset, feature_spec)
    tasks = [(e, name, spec) for e in plan for name, spec in models.items()]
    if jobs <= 1 or len(tasks) == 1:
        return [run_one(e, n, s, dataset, feature_spec, keep_models) for e, n, s in tasks]
    with ProcessPoolExecutor(
        max_workers=jobs,
        initializer=_init_worker,
        initargs=(dataset, feature_spec, keep_models),
    ) as pool:
        return list(pool.map(_run_task, tasks))
