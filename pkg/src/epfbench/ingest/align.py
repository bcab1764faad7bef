"""The canonical hourly table and the join that produces it."""

from __future__ import annotations

from datetime import date, datetime, timedelta
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .series import IngestError, RawSeries, Resolution

_EPOCH = date(1970, 1, 1)


def _as_date(value) -> date:
    if isinstance(value, datetime):
        return value.date()
    if isinstance(value, date):
        return value
    if isinstance(value, np.datetime64):
        return pd.Timestamp(value).date()
    return date.fromisoformat(str(value))


class AlignedDataset:
    """Contiguous hourly table: 24 rows per calendar date, no gaps, no missing cells.

    Rows are addressed positionally: row ``24 * (d - start_date).days + hour``.
    Column arrays are read-only; derive modified copies with :meth:`with_column`.
    """

    def __init__(self, start_date: date, columns: Mapping[str, np.ndarray]):
        if not columns:
            raise IngestError("dataset needs at least one column")
        self._start = _as_date(start_date)
        self._columns: dict[str, np.ndarray] = {}
        n_rows = None
        for name, values in columns.items():
            arr = np.array(values, dtype=float)
            if arr.ndim != 1:
                raise IngestError(f"column {name!r} must be one-dimensional")
            if n_rows is None:
                n_rows = arr.shape[0]
            elif arr.shape[0] != n_rows:
                raise IngestError(f"column {name!r} has {arr.shape[0]} rows, expected {n_rows}")
            if not np.all(np.isfinite(arr)):
                bad = int(np.flatnonzero(~np.isfinite(arr))[0])
                raise IngestError(f"column {name!r} has a missing/non-finite cell at row {bad}")
            arr.setflags(write=False)
            self._columns[name] = arr
        if n_rows == 0 or n_rows % 24:
            raise IngestError(f"row count {n_rows} is not a positive multiple of 24")
        self._n_rows = n_rows

    # -- shape ---------------------------------------------------------------
    @property
    def columns(self) -> tuple[str, ...]:
        return tuple(self._columns)

    @property
    def n_rows(self) -> int:
        return self._n_rows

    @property
    def n_days(self) -> int:
        return self._n_rows // 24

    @property
    def start_date(self) -> date:
        return self._start

    @property
    def end_date(self) -> date:
        return self._start + timedelta(days=self.n_days - 1)

    def __len__(self):
        return self._n_rows

    def __repr__(self):
        return f"AlignedDataset({self.start_date}..{self.end_date}, {len(self.columns)} columns)"

    @property
    def dates(self) -> np.ndarray:
        start = np.datetime64(self._start, "D")
        return start + (np.arange(self._n_rows) // 24).astype("timedelta64[D]")

    @property
    def hours(self) -> np.ndarray:
        return np.arange(self._n_rows) % 24

    # -- access --------------------------------------------------------------
    def column(self, name: str) -> np.ndarray:
        try:
            return self._columns[name]
        except KeyError:
            raise KeyError(f"unknown column {name!r}; available: {list(self._columns)}") from None

    def __contains__(self, name):
        return name in self._columns

    def row_index(self, day, hour: int = 0) -> int:
        return 24 * (_as_date(day) - self._start).days + hour

    def covers(self, start, end) -> bool:
        return self._start <= _as_date(start) and _as_date(end) <= self.end_date

    def slice_dates(self, start, end) -> "AlignedDataset":
        start, end = _as_date(start), _as_date(end)
        if not self.covers(start, end) or end < start:
            raise IngestError(f"range {start}..{end} outside dataset {self.start_date}..{self.end_date}")
        lo, hi = self.row_index(start), self.row_index(end) + 24
        return AlignedDataset(start, {k: v[lo:hi] for k, v in self._columns.items()})

    def with_column(self, name: str, values) -> "AlignedDataset":
        cols = dict(self._columns)
        cols[name] = values
        return AlignedDataset(self._start, cols)

    # -- io ------------------------------------------------------------------
    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({"date": pd.Series(self.dates).dt.strftime("%Y-%m-%d"), "hour": self.hours})
        for name, values in self._columns.items():
            frame[name] = values
        return frame

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, lineterminator="\n")
        return path

    @classmethod
    def from_csv(cls, path: str | Path) -> "AlignedDataset":
        path = Path(path)
        if not path.exists():
            raise IngestError(f"aligned dataset not found: {path}")
        frame = pd.read_csv(path, dtype={"date": str}, float_precision="round_trip")
        for col in ("date", "hour"):
            if col not in frame.columns:
                raise IngestError(f"{path}: missing column {col!r}")
        if frame.empty:
            raise IngestError(f"{path}: no rows")
        start = date.fromisoformat(frame["date"].iloc[0])
        value_cols = {c: frame[c].to_numpy(dtype=float) for c in frame.columns if c not in ("date", "hour")}
        dataset = cls(start, value_cols)
        expected_dates = pd.Series(dataset.dates).dt.strftime("%Y-%m-%d").to_numpy()
        if not np.array_equal(frame["date"].to_numpy(dtype=str), expected_dates) or not np.array_equal(
            frame["hour"].to_numpy(), dataset.hours
        ):
            raise IngestError(f"{path}: rows are not a contiguous (date, hour 0-23) sequence")
        return dataset


def _hour_position(ts: datetime) -> int:
    if ts.tzinfo is not None or ts.minute or ts.second or ts.microsecond:
        raise IngestError(f"timestamp {ts.isoformat()} is not a canonical (date, hour) stamp; run normalize_dst first")
    return 24 * (ts.date() - _EPOCH).days + ts.hour


def _position_label(pos: int) -> str:
    pos = int(pos)
    day = _EPOCH + timedelta(days=pos // 24)
    return f"{day} hour {pos % 24}"


def align_join(sources: Sequence[RawSeries], max_gap_hours: int = 6) -> AlignedDataset:
    """Inner-join hourly canonical series on (date, hour) over their common whole days.

    Runs of up to ``max_gap_hours`` missing hours (absent rows or NaN values)
    are filled by linear interpolation between the neighbouring values; a
    longer run, or a run touching the edge of the common range, is an error.
    """
    if not sources:
        raise IngestError("no sources to join")
    names = [s.name for s in sources]
    if len(set(names)) != len(names):
        raise IngestError(f"duplicate source names: {names}")
    positions = []
    for s in sources:
        if s.resolution is not Resolution.HOURLY:
            raise IngestError(f"{s.name}: align_join needs hourly series, got {s.resolution.value}")
        if not len(s):
            raise IngestError(f"{s.name}: empty series")
        positions.append(np.array([_hour_position(t) for t in s.timestamps], dtype=np.int64))
    lo = max(int(p[0]) for p in positions)
    hi = max(lo - 1, min(int(p[-1]) for p in positions))
    first_day = -(-lo // 24)
    last_day = (hi + 1) // 24 - 1
    if last_day < first_day:
        raise IngestError(f"empty common range: sources share no complete day (common span {_position_label(lo)} .. {_position_label(hi)})")
    start, stop = 24 * first_day, 24 * (last_day + 1)
    n = stop - start
    joined: dict[str, np.ndarray] = {}
    for s, pos in zip(sources, positions):
        arr = np.full(n, np.nan)
        keep = (pos >= start) & (pos < stop)
        arr[pos[keep] - start] = s.values[keep]
        joined[s.name] = _fill_gaps(s.name, arr, start, max_gap_hours)
    return AlignedDataset(_EPOCH + timedelta(days=first_day), joined)


def _fill_gaps(name: str, arr: np.ndarray, offset: int, max_gap: int) -> np.ndarray:
    missing = np.isnan(arr)
    if not missing.any():
        return arr
    edges = np.diff(np.concatenate([[0], missing.astype(np.int8), [0]]))
    run_starts = np.flatnonzero(edges == 1)
    run_ends = np.flatnonzero(edges == -1)  # exclusive
    for a, b in zip(run_starts, run_ends):
        where = f"{_position_label(offset + a)} .. {_position_label(offset + b - 1)}"
        if b - a > max_gap:
            raise IngestError(f"column {name!r}: gap of {b - a} hours ({where}) exceeds {max_gap}")
        if a == 0 or b == arr.size:
            raise IngestError(f"column {name!r}: gap at the edge of the common range ({where}) cannot be interpolated")
    idx = np.arange(arr.size)
    out = arr.copy()
    out[missing] = np.interp(idx[missing], idx[~missing], arr[~missing])
    return out


def summary_stats(dataset: AlignedDataset, column: str, start=None, end=None) -> dict[str, float]:
    """Mean, sample standard deviation (N-1), minimum and maximum over a date range."""
    start = _as_date(start) if start is not None else dataset.start_date
    end = _as_date(end) if end is not None else dataset.end_date
    if end < start:
        raise ValueError(f"empty period {start}..{end}")
    values = dataset.slice_dates(start, end).column(column)
    if values.size < 2:
        raise ValueError("need at least 2 rows for a sample standard deviation")
    return {
        "mean": float(values.mean()),
        "std": float(values.std(ddof=1)),
        "min": float(values.min()),
        "max": float(values.max()),
    }
