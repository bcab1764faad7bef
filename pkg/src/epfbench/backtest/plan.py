"""Walk-forward train/test plan: three training windows per calendar quarter."""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date, timedelta

from ..ingest.align import _as_date


class PlanError(ValueError):
    pass


WINDOWS = (("six_months", 6), ("one_year", 12), ("two_years_capped", 24))

_QUARTER_RE = re.compile(r"^(\d{4})\s*-?\s*Q([1-4])$", re.IGNORECASE)


@dataclass(frozen=True, order=True)
class Quarter:
    year: int
    q: int

    @classmethod
    def parse(cls, label) -> "Quarter":
        if isinstance(label, Quarter):
            return label
        m = _QUARTER_RE.match(str(label).strip())
        if not m:
            raise PlanError(f"bad quarter label {label!r}; expected e.g. 2020Q1")
        return cls(int(m.group(1)), int(m.group(2)))

    @property
    def label(self) -> str:
        return f"{self.year}Q{self.q}"

    @property
    def start(self) -> date:
        return date(self.year, 3 * self.q - 2, 1)

    @property
    def end(self) -> date:
        nxt = self.next().start
        return nxt - timedelta(days=1)

    def next(self) -> "Quarter":
        return Quarter(self.year + 1, 1) if self.q == 4 else Quarter(self.year, self.q + 1)

    def __str__(self):
        return self.label


def add_months(d: date, months: int) -> date:
    """Shift a first-of-month date by whole months."""
    if d.day != 1:
        raise PlanError(f"{d} is not the first of a month")
    k = d.year * 12 + (d.month - 1) + months
    return date(k // 12, k % 12 + 1, 1)


def months_between(a: date, b: date) -> int:
    return (b.year - a.year) * 12 + (b.month - a.month)


@dataclass(frozen=True)
class PlanEntry:
    quarter: str
    window: str
    window_index: int  # 1, 2, 3 in column order of the training-period table
    train_start: date
    train_end: date
    test_start: date
    test_end: date
    months: int
    capped: bool

    def __post_init__(self):
        if not self.train_start <= self.train_end < self.test_start <= self.test_end:
            raise PlanError(f"inconsistent plan entry {self}")


@dataclass(frozen=True)
class BacktestPlan:
    entries: tuple
    data_start: date

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def quarters(self) -> list[str]:
        return list(dict.fromkeys(e.quarter for e in self.entries))

    @property
    def earliest_train_start(self) -> date:
        return min(e.train_start for e in self.entries)

    @property
    def latest_test_end(self) -> date:
        return max(e.test_end for e in self.entries)

    def table(self):
        import pandas as pd

        return pd.DataFrame([e.__dict__ for e in self.entries])


def _first_month_after(d: date) -> date:
    return add_months(date(d.year, d.month, 1), 1)


def make_plan(quarters, data_start) -> BacktestPlan:
    """Three training windows per test quarter, each ending the day before the quarter.

    The 6-month and 1-year windows are fixed.  The 2-year window is capped when
    its nominal start falls before ``data_start``: it then begins at the first
    month boundary after ``data_start``, which leaves the opening weeks of data
    available as lag history.  A 6-month window that does not fit is an error.
    """
    data_start = _as_date(data_start)
    if not quarters:
        raise PlanError("no test quarters given")
    parsed = [Quarter.parse(q) for q in quarters]
    if len(set(parsed)) != len(parsed):
        raise PlanError("duplicate test quarters")
    entries = []
    for qt in parsed:
        test_start, test_end = qt.start, qt.end
        train_end = test_start - timedelta(days=1)
        for index, (label, months) in enumerate(WINDOWS, start=1):
            start = add_months(test_start, -months)
            capped = False
            if start < data_start:
                if label != "two_years_capped":
                    raise PlanError(
                        f"{qt.label}: {label} window would start {start}, before data start {data_start}"
                    )
                start = _first_month_after(data_start)
                capped = True
                if start > train_end:
                    raise PlanError(f"{qt.label}: no room for a capped window after {data_start}")
            entries.append(
                PlanEntry(
                    quarter=qt.label,
                    window=label,
                    window_index=index,
                    train_start=start,
                    train_end=train_end,
                    test_start=test_start,
                    test_end=test_end,
                    months=months_between(start, test_start),
                    capped=capped,
                )
            )
    return BacktestPlan(tuple(entries), data_start)


def quarter_range(first, last) -> list[str]:
    """Inclusive list of quarter labels, e.g. ``quarter_range("2020Q1", "2022Q3")``."""
    a, b = Quarter.parse(first), Quarter.parse(last)
    if b < a:
        raise PlanError(f"{b} precedes {a}")
    out = [a]
    while out[-1] != b:
        out.append(out[-1].next())
    return [q.label for q in out]
