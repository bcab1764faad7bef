"""Ranking tables, report files and plot-data files built from evaluation records."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from .plan import Quarter
from .runner import EvaluationRecord

logger = logging.getLogger(__name__)

METRICS = ("mae", "rmse", "rmae")
TABLE_COLUMNS = ["quarter", "model", "window", "window_index", "mae", "rmse", "rmae"]


class ReportError(ValueError):
    pass


def _rank_key(r: EvaluationRecord):
    return (r.mae, r.rmse, r.model, r.window_index)


@dataclass
class ReportBundle:
    records: list = field(repr=False)
    ranked: dict  # quarter -> DataFrame sorted by rank
    best_per_quarter: pd.DataFrame
    top5: dict
    bottom5: dict
    metric_series: dict  # metric -> DataFrame, rows model, columns quarter

    @property
    def quarters(self) -> list[str]:
        return list(self.ranked)


def _frame(rows: Sequence[EvaluationRecord]) -> pd.DataFrame:
    df = pd.DataFrame([{c: getattr(r, c) for c in TABLE_COLUMNS} for r in rows], columns=TABLE_COLUMNS)
    df.insert(0, "rank", np.arange(1, len(df) + 1))
    return df


def rank_results(records: Sequence[EvaluationRecord], n: int = 5) -> ReportBundle:
    """Rank successful runs within each quarter by MAE, then RMSE, model name and window."""
    records = list(records)
    groups: dict[str, list] = {}
    for r in records:
        groups.setdefault(r.quarter, [])
        if r.ok:
            groups[r.quarter].append(r)
    ranked, top, bottom = {}, {}, {}
    for q in sorted(groups, key=Quarter.parse):
        rows = sorted(groups[q], key=_rank_key)
        if not rows:
            logger.warning("quarter %s has no successful runs; omitted from rankings", q)
            continue
        ranked[q] = _frame(rows)
        top[q] = ranked[q].head(n).reset_index(drop=True)
        bottom[q] = ranked[q].tail(n).reset_index(drop=True)
    best = pd.concat([t.head(1) for t in ranked.values()], ignore_index=True) if ranked else _frame([])
    best = best.drop(columns="rank")

    series = {}
    ok = [r for r in records if r.ok]
    models = sorted({r.model for r in ok})
    for metric in METRICS:
        table = pd.DataFrame(np.nan, index=pd.Index(models, name="model"), columns=list(ranked))
        for r in ok:
            if r.quarter in ranked:
                v = getattr(r, metric)
                cur = table.at[r.model, r.quarter]
                if not (cur <= v):
                    table.at[r.model, r.quarter] = v
        series[metric] = table
    return ReportBundle(records, ranked, best, top, bottom, series)


def _json_value(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return _json_value(float(v))
    return v


def _write_csv(df: pd.DataFrame, path: Path, display: bool, index: bool = False):
    df.to_csv(path, index=index, float_format="%.2f" if display else None, lineterminator="\n")
    return path


def emit_report(bundle: ReportBundle, out_dir: str | Path) -> list[Path]:
    """Write ranking tables (2-decimal display) and full-precision record files.

    Runtime is left out so that reruns produce identical bytes.
    """
    if not bundle.records:
        raise ReportError("no evaluation records to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [_write_csv(bundle.best_per_quarter, out / "best_per_quarter.csv", True)]
    for q in bundle.quarters:
        written.append(_write_csv(bundle.top5[q], out / f"top5_{q}.csv", True))
        written.append(_write_csv(bundle.bottom5[q], out / f"bottom5_{q}.csv", True))
    for metric, table in bundle.metric_series.items():
        written.append(_write_csv(table, out / f"metric_series_{metric}.csv", True, index=True))
    rows = [r.to_dict() for r in bundle.records]
    written.append(_write_csv(pd.DataFrame(rows), out / "records.csv", False))
    path = out / "records.jsonl"
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps({k: _json_value(v) for k, v in row.items()}, sort_keys=True) + "\n")
    written.append(path)
    return written


@dataclass(frozen=True)
class TraceRequest:
    quarter: str
    models: tuple
    start: date
    end: date


def _best_record(records, model, quarter):
    rows = [r for r in records if r.ok and r.model == model and r.quarter == quarter]
    return min(rows, key=_rank_key) if rows else None


def trace_frame(records: Sequence[EvaluationRecord], request: TraceRequest) -> pd.DataFrame:
    """Hourly actual and predicted prices for ``request``, using each model's best window."""
    start, end = np.datetime64(request.start, "D"), np.datetime64(request.end, "D")
    if end < start:
        raise ReportError(f"empty trace range {request.start}..{request.end}")
    frame = None
    for model in request.models:
        best = _best_record(records, model, request.quarter)
        if best is None:
            raise ReportError(f"no successful run for model {model!r} in quarter {request.quarter}")
        art = best.artifacts
        if art is None:
            raise ReportError(f"run {model}/{request.quarter} kept no predictions")
        mask = (art.dates >= start) & (art.dates <= end)
        if mask.sum() != 24 * (int((end - start).astype(int)) + 1):
            raise ReportError(f"trace range {request.start}..{request.end} is outside quarter {request.quarter}")
        if frame is None:
            frame = pd.DataFrame(
                {
                    "date": art.dates[mask].astype(str),
                    "hour": art.hours[mask],
                    "actual": art.actual[mask],
                }
            )
        frame[model] = art.predicted[mask]
    if frame is None:
        raise ReportError("trace request names no models")
    return frame


def emit_plot_data(
    records: Sequence[EvaluationRecord],
    out_dir: str | Path,
    traces: Sequence[TraceRequest] = (),
) -> list[Path]:
    """Best MAE and best rMAE per model and quarter, plus optional actual-vs-predicted traces."""
    records = list(records)
    if not records:
        raise ReportError("no evaluation records")
    known_models = {r.model for r in records}
    known_quarters = {r.quarter for r in records}
    for t in traces:
        if t.quarter not in known_quarters:
            raise ReportError(f"unknown quarter {t.quarter!r}")
        unknown = sorted(set(t.models) - known_models)
        if unknown:
            raise ReportError(f"unknown models {unknown}")
    bundle = rank_results(records)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for metric in ("mae", "rmae"):
        table = bundle.metric_series[metric].T
        table.index.name = "quarter"
        written.append(_write_csv(table, out / f"plot_best_{metric}.csv", False, index=True))
    for t in traces:
        frame = trace_frame(records, t)
        name = f"trace_{t.quarter}_{t.start.isoformat()}_{t.end.isoformat()}.csv"
        written.append(_write_csv(frame, out / name, False))
    return written
