"""YAML run configuration.

Top-level keys (``schema_version: 1``)::

    seed: 0                      # required; feeds every model and the generator
    output_dir: out
    data:
      aligned: data/aligned.csv  # canonical file read by analyze/select-features/tune/backtest
      synthetic: {...}           # SyntheticRecipe fields, used by ``synth``
      sources: [...]             # raw files mapped to canonical columns, used by ``ingest``
      dst: european | {spring_forward: [...], fall_back: [...]}
      max_gap_hours: 6
    features: standard | {base, lags: [{column, hours}], calendar, wind_average}
    analysis: {columns: [...], years: [2019, 2020] | periods: [{label, start, end}]}
    selection: {model, start, end, validation_fraction, patience}
    tune: {model, start, end, validation_fraction, budget, grids: {param: [values]}}
    models: [linear_regression, ...] | {name: {preset|kind, ...overrides}}
    backtest: {quarters: [...] | {first, last}, data_start, jobs, traces: [{quarter, models, start, end}]}

Relative paths resolve against the config file's directory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Any

import yaml

from .backtest import TraceRequest, quarter_range
from .features import CALENDAR_FIELDS, FeatureSpec, Lag, Period
from .ingest import DstCalendar, Resolution, SourceSchema, SyntheticRecipe
from .ingest.align import _as_date
from .models import ModelSpec, spec_from_dict, zoo

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SourceEntry:
    schema: SourceSchema
    column: str  # canonical column name in the aligned dataset
    path: Path


@dataclass
class RunConfig:
    path: Path
    seed: int
    output_dir: Path
    aligned: Path | None = None
    synthetic: SyntheticRecipe | None = None
    sources: list = field(default_factory=list)
    dst: DstCalendar | None = None
    max_gap_hours: int = 6
    features: FeatureSpec = field(default_factory=FeatureSpec.standard)
    analysis: dict = field(default_factory=dict)
    selection: dict = field(default_factory=dict)
    tune: dict = field(default_factory=dict)
    models: dict = field(default_factory=dict)
    quarters: list = field(default_factory=list)
    data_start: date | None = None
    jobs: int = 1
    traces: list = field(default_factory=list)

    def with_seed(self, seed: int) -> "RunConfig":
        self.seed = seed
        self.models = {k: _reseed(v, seed) for k, v in self.models.items()}
        return self


def _reseed(spec: ModelSpec, seed: int) -> ModelSpec:
    return spec.with_params(seed=seed)


def _require(mapping, key, where):
    if key not in mapping:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return mapping[key]


def _check_keys(mapping, allowed, where):
    if not isinstance(mapping, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(mapping).__name__}")
    unknown = set(mapping) - set(allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")


def _date(value, where) -> date:
    try:
        return _as_date(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: bad date {value!r}: {exc}") from None


def _features(raw) -> FeatureSpec:
    if raw is None or raw == "standard":
        return FeatureSpec.standard()
    _check_keys(raw, {"base", "lags", "calendar", "wind_average", "target"}, "features")
    lags = []
    for item in raw.get("lags", []):
        _check_keys(item, {"column", "hours"}, "features.lags")
        lags.append(Lag(item["column"], int(item["hours"])))
    calendar = tuple(raw.get("calendar", ()))
    bad = set(calendar) - set(CALENDAR_FIELDS)
    if bad:
        raise ConfigError(f"features.calendar: unknown fields {sorted(bad)}")
    kw = dict(
        base=tuple(raw.get("base", ())),
        lags=tuple(lags),
        calendar=calendar,
        wind_average=tuple(raw.get("wind_average", ())),
    )
    if "target" in raw:
        kw["target"] = raw["target"]
    return FeatureSpec(**kw)


def _models(raw, seed) -> dict[str, ModelSpec]:
    presets = zoo(seed)
    if raw is None:
        return presets
    if isinstance(raw, list):
        unknown = [n for n in raw if n not in presets]
        if unknown:
            raise ConfigError(f"models: unknown presets {unknown}; choose from {sorted(presets)}")
        return {n: presets[n] for n in raw}
    if isinstance(raw, dict):
        out = {}
        for name, body in raw.items():
            body = dict(body or {})
            if "preset" not in body and "kind" not in body:
                body["preset"] = name
            out[name] = spec_from_dict(body, seed=seed)
        return out
    raise ConfigError("models: expected a list of preset names or a mapping")


def _sources(raw, base: Path) -> list[SourceEntry]:
    out = []
    allowed = {"name", "column", "path", "timestamp_column", "value_column", "resolution", "timestamp_format", "unit"}
    for i, item in enumerate(raw or []):
        where = f"data.sources[{i}]"
        _check_keys(item, allowed, where)
        path = base / _require(item, "path", where)
        if not path.exists():
            raise ConfigError(f"{where}: file not found: {path}")
        column = item.get("column", item.get("name"))
        if not column:
            raise ConfigError(f"{where}: needs 'column' or 'name'")
        try:
            schema = SourceSchema(
                name=column,
                timestamp_column=_require(item, "timestamp_column", where),
                value_column=_require(item, "value_column", where),
                resolution=Resolution(item.get("resolution", "hourly")),
                timestamp_format=item.get("timestamp_format", "iso"),
                unit=item.get("unit", ""),
                path=str(path),
            )
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None
        out.append(SourceEntry(schema, column, path))
    return out


def _dst(raw) -> DstCalendar | None:
    if raw is None:
        return None
    if raw == "european":
        return DstCalendar.european(range(1990, 2100))
    _check_keys(raw, {"spring_forward", "fall_back"}, "data.dst")
    return DstCalendar(
        frozenset(_date(d, "data.dst.spring_forward") for d in raw.get("spring_forward", [])),
        frozenset(_date(d, "data.dst.fall_back") for d in raw.get("fall_back", [])),
    )


def parse_periods(raw: dict) -> list[Period]:
    periods = [Period.year(int(y)) for y in raw.get("years", [])]
    for i, p in enumerate(raw.get("periods", [])):
        _check_keys(p, {"label", "start", "end"}, f"analysis.periods[{i}]")
        periods.append(
            Period(str(p["label"]), _date(p["start"], "analysis.periods"), _date(p["end"], "analysis.periods"))
        )
    return periods


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw: Any = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    _check_keys(
        raw,
        {"schema_version", "seed", "output_dir", "data", "features", "analysis", "selection", "tune", "models", "backtest"},
        str(path),
    )
    version = raw.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"{path}: schema_version must be {SCHEMA_VERSION}, got {version!r}")
    if "seed" not in raw or not isinstance(raw["seed"], int):
        raise ConfigError(f"{path}: an integer 'seed' is required")
    seed = raw["seed"]
    base = path.parent

    data = raw.get("data", {}) or {}
    _check_keys(data, {"aligned", "synthetic", "sources", "dst", "max_gap_hours"}, "data")
    synthetic = None
    if "synthetic" in data:
        try:
            synthetic = SyntheticRecipe.from_dict(data["synthetic"] or {})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"data.synthetic: {exc}") from None

    bt = raw.get("backtest", {}) or {}
    _check_keys(bt, {"quarters", "data_start", "jobs", "traces"}, "backtest")
    quarters = bt.get("quarters", [])
    if isinstance(quarters, dict):
        _check_keys(quarters, {"first", "last"}, "backtest.quarters")
        quarters = quarter_range(_require(quarters, "first", "backtest.quarters"), _require(quarters, "last", "backtest.quarters"))
    traces = []
    for i, t in enumerate(bt.get("traces", [])):
        where = f"backtest.traces[{i}]"
        _check_keys(t, {"quarter", "models", "start", "end"}, where)
        traces.append(
            TraceRequest(
                str(_require(t, "quarter", where)),
                tuple(_require(t, "models", where)),
                _date(_require(t, "start", where), where),
                _date(_require(t, "end", where), where),
            )
        )

    for section in ("analysis", "selection", "tune"):
        if not isinstance(raw.get(section, {}) or {}, dict):
            raise ConfigError(f"{section}: expected a mapping")

    try:
        features = _features(raw.get("features"))
        models = _models(raw.get("models"), seed)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    return RunConfig(
        path=path,
        seed=seed,
        output_dir=base / raw.get("output_dir", "out"),
        aligned=base / data["aligned"] if data.get("aligned") else None,
        synthetic=synthetic,
        sources=_sources(data.get("sources"), base),
        dst=_dst(data.get("dst")),
        max_gap_hours=int(data.get("max_gap_hours", 6)),
        features=features,
        analysis=raw.get("analysis") or {},
        selection=raw.get("selection") or {},
        tune=raw.get("tune") or {},
        models=models,
        quarters=[str(q) for q in quarters],
        data_start=_date(bt["data_start"], "backtest.data_start") if "data_start" in bt else None,
        jobs=int(bt.get("jobs", 1)),
        traces=traces,
    )
