"""Raw source series: parsing, hourly resampling, daily broadcast and DST repair."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from enum import Enum
from pathlib import Path
from typing import Iterable

import numpy as np

logger = logging.getLogger(__name__)

HOUR = timedelta(hours=1)


class IngestError(ValueError):
    """Raised when a source file or series violates the ingest contracts."""


class Resolution(str, Enum):
    HOURLY = "hourly"
    QUARTER_HOURLY = "quarter_hourly"
    DAILY = "daily"


_SPACING = {
    Resolution.HOURLY: timedelta(hours=1),
    Resolution.QUARTER_HOURLY: timedelta(minutes=15),
    Resolution.DAILY: timedelta(days=1),
}


@dataclass(frozen=True)
class SourceSchema:
    """How to read one value column out of a delimited source file.

    ``timestamp_format`` is either ``"iso"`` (anything ``datetime.fromisoformat``
    accepts, including UTC offsets) or a ``strptime`` pattern.  Local files that
    cover a fall-back night must carry UTC offsets, otherwise the repeated
    wall-clock hour is indistinguishable from a duplicate row.
    """

    name: str
    timestamp_column: str
    value_column: str
    resolution: Resolution = Resolution.HOURLY
    timestamp_format: str = "iso"
    unit: str = ""
    path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "resolution", Resolution(self.resolution))

    def parse_timestamp(self, text: str) -> datetime:
        text = text.strip()
        if self.timestamp_format == "iso":
            return datetime.fromisoformat(text)
        return datetime.strptime(text, self.timestamp_format)


@dataclass(frozen=True)
class RawSeries:
    """A single named series with strictly increasing timestamps.

    Missing values inside an otherwise well-formed file are carried as NaN;
    they are repaired (or rejected) by :func:`epfbench.ingest.align_join`.
    """

    name: str
    resolution: Resolution
    timestamps: tuple[datetime, ...]
    values: np.ndarray = field(repr=False)
    unit: str = ""

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "timestamps", tuple(self.timestamps))
        object.__setattr__(self, "resolution", Resolution(self.resolution))
        if len(self.timestamps) != values.shape[0] or values.ndim != 1:
            raise IngestError(f"{self.name}: {len(self.timestamps)} timestamps but {values.shape} values")
        for prev, cur in zip(self.timestamps, self.timestamps[1:]):
            if not cur > prev:
                raise IngestError(f"{self.name}: timestamps not strictly increasing at {cur.isoformat()}")

    def __len__(self):
        return len(self.timestamps)


def _check_spacing(path, schema: SourceSchema, stamps: list[datetime]):
    if len(stamps) < 2:
        return
    deltas = sorted(b - a for a, b in zip(stamps, stamps[1:]))
    median = deltas[len(deltas) // 2]
    if median != _SPACING[schema.resolution]:
        raise IngestError(
            f"{path}: declared resolution {schema.resolution.value} but median spacing is {median}"
        )


def parse_source(path: str | Path, schema: SourceSchema) -> RawSeries:
    """Read ``schema.value_column`` against ``schema.timestamp_column`` from a CSV file.

    Blank value cells become NaN.  Any other unparseable cell, a duplicate
    timestamp or a timestamp earlier than its predecessor raises
    :class:`IngestError` with the offending line number.
    """
    path = Path(path)
    if not path.exists():
        raise IngestError(f"source file not found: {path}")
    stamps: list[datetime] = []
    values: list[float] = []
    seen: dict[datetime, int] = {}
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in (schema.timestamp_column, schema.value_column):
            if col not in header:
                raise IngestError(f"{path}: missing column {col!r} (header: {header})")
        for row in reader:
            line = reader.line_num
            raw_ts = row.get(schema.timestamp_column)
            raw_val = row.get(schema.value_column)
            if raw_ts is None or raw_val is None:
                raise IngestError(f"{path}:{line}: malformed row, expected {len(header)} fields")
            try:
                ts = schema.parse_timestamp(raw_ts)
            except ValueError as exc:
                raise IngestError(f"{path}:{line}: bad timestamp {raw_ts!r}: {exc}") from None
            raw_val = raw_val.strip()
            try:
                val = float(raw_val) if raw_val else float("nan")
            except ValueError:
                raise IngestError(f"{path}:{line}: bad value {raw_val!r} in {schema.value_column!r}") from None
            if ts in seen:
                raise IngestError(
                    f"{path}:{line}: duplicate timestamp {ts.isoformat()} (first at line {seen[ts]})"
                )
            if stamps and ts < stamps[-1]:
                raise IngestError(
                    f"{path}:{line}: non-monotonic timestamp {ts.isoformat()} after {stamps[-1].isoformat()}"
                )
            seen[ts] = line
            stamps.append(ts)
            values.append(val)
    _check_spacing(path, schema, stamps)
    logger.debug("parsed %d points from %s", len(stamps), path)
    return RawSeries(schema.name, schema.resolution, tuple(stamps), np.asarray(values), schema.unit)


@dataclass(frozen=True)
class DstCalendar:
    """Local clock-change dates: spring-forward days have 23 hours, fall-back days 25."""

    spring_forward: frozenset[date] = frozenset()
    fall_back: frozenset[date] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "spring_forward", frozenset(self.spring_forward))
        object.__setattr__(self, "fall_back", frozenset(self.fall_back))

    @classmethod
    def european(cls, years: Iterable[int]) -> "DstCalendar":
        """Last Sunday of March and of October for each year."""
        def last_sunday(year, month):
            d = date(year, month + 1, 1) - timedelta(days=1)
            return d - timedelta(days=(d.weekday() - 6) % 7)

        years = list(years)
        return cls(
            frozenset(last_sunday(y, 3) for y in years),
            frozenset(last_sunday(y, 10) for y in years),
        )

    def expected_hours(self, day: date) -> int:
        if day in self.spring_forward:
            return 23
        if day in self.fall_back:
            return 25
        return 24


def _hour_key(ts: datetime) -> datetime:
    return ts.replace(minute=0, second=0, microsecond=0)


def resample_to_hourly(series: RawSeries, calendar: DstCalendar | None = None) -> RawSeries:
    """Average quarter-hourly points into hourly points.

    Each hour must hold 1-4 points.  An hour with no points inside the covered
    span is an error; for naive timestamps the skipped spring-forward hour is
    accepted on dates listed in ``calendar``.
    """
    if series.resolution is not Resolution.QUARTER_HOURLY:
        raise IngestError(f"{series.name}: expected quarter_hourly series, got {series.resolution.value}")
    keys: list[datetime] = []
    groups: list[list[float]] = []
    for ts, val in zip(series.timestamps, series.values):
        key = _hour_key(ts)
        if keys and keys[-1] == key:
            groups[-1].append(val)
        else:
            keys.append(key)
            groups.append([val])
    for key, group in zip(keys, groups):
        if len(group) > 4:
            raise IngestError(f"{series.name}: hour {key.isoformat()} has {len(group)} points (max 4)")
    for prev, cur in zip(keys, keys[1:]):
        step = cur - prev
        if step == HOUR:
            continue
        spring = calendar is not None and cur.tzinfo is None and cur.date() in calendar.spring_forward
        if spring and step == 2 * HOUR:
            continue
        raise IngestError(
            f"{series.name}: no points for hour(s) between {prev.isoformat()} and {cur.isoformat()}"
        )
    out = np.empty(len(groups))
    for i, group in enumerate(groups):
        arr = np.asarray(group)
        finite = arr[~np.isnan(arr)]
        out[i] = finite.mean() if finite.size else np.nan
    return RawSeries(series.name, Resolution.HOURLY, tuple(keys), out, series.unit)


def _canonical(day: date, hour: int) -> datetime:
    return datetime(day.year, day.month, day.day, hour)


def broadcast_daily(
    series: RawSeries,
    fill: str = "forward_fill",
    start: date | None = None,
    end: date | None = None,
) -> RawSeries:
    """Repeat each daily value over the 24 hours of its day.

    Days missing from the input (weekends, market holidays) take the most
    recent earlier value.  ``start``/``end`` widen the output range; a start
    before the first quoted day has nothing to fill from and is an error.
    """
    if fill != "forward_fill":
        raise IngestError(f"unsupported fill rule {fill!r}")
    if series.resolution is not Resolution.DAILY:
        raise IngestError(f"{series.name}: expected daily series, got {series.resolution.value}")
    quotes: dict[date, float] = {}
    for ts, val in zip(series.timestamps, series.values):
        if not np.isnan(val):
            quotes[ts.date()] = float(val)
    if not quotes:
        raise IngestError(f"{series.name}: no quoted values")
    first = min(quotes)
    start = start or first
    end = end or max(quotes)
    if start < first:
        raise IngestError(f"{series.name}: no value on or before {start} to fill from (first quote {first})")
    if end < start:
        raise IngestError(f"{series.name}: empty range {start}..{end}")
    stamps: list[datetime] = []
    values: list[float] = []
    last = None
    day = first
    while day <= end:
        last = quotes.get(day, last)
        if day >= start:
            for h in range(24):
                stamps.append(_canonical(day, h))
                values.append(last)
        day += timedelta(days=1)
    return RawSeries(series.name, Resolution.HOURLY, tuple(stamps), np.asarray(values, dtype=float), series.unit)


def normalize_dst(series: RawSeries, calendar: DstCalendar | None = None) -> RawSeries:
    """Give every local day exactly 24 hourly points, positionally.

    A 25-point day loses its 25th point; a 23-point day gets its 23rd point
    repeated.  With a ``calendar``, 23/25-point days are only accepted on the
    listed transition dates and transition dates must have the expected count.
    Output timestamps are naive ``(date, hour 0-23)``.
    """
    if series.resolution is not Resolution.HOURLY:
        raise IngestError(f"{series.name}: expected hourly series, got {series.resolution.value}")
    days: dict[date, list[float]] = {}
    for ts, val in zip(series.timestamps, series.values):
        days.setdefault(ts.date(), []).append(val)
    stamps: list[datetime] = []
    values: list[float] = []
    for day, vals in days.items():
        n = len(vals)
        if n not in (23, 24, 25):
            raise IngestError(f"{series.name}: {day} has {n} hourly values (expected 23, 24 or 25)")
        if calendar is not None and n != calendar.expected_hours(day):
            raise IngestError(
                f"{series.name}: {day} has {n} hourly values, calendar expects {calendar.expected_hours(day)}"
            )
        if n == 25:
            vals = vals[:24]
        elif n == 23:
            vals = vals + [vals[22]]
        stamps.extend(_canonical(day, h) for h in range(24))
        values.extend(vals)
    return RawSeries(series.name, Resolution.HOURLY, tuple(stamps), np.asarray(values, dtype=float), series.unit)
