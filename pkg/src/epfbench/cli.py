"""Command-line entry point: ``epfbench <command> --config run.yaml``.

Exit codes: 0 success, 2 usage or config error, 3 data error, 4 one or more
backtest runs failed (reports are still written).
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from datetime import date, timedelta
from pathlib import Path

import numpy as np
import pandas as pd
import yaml

from . import __version__
from .backtest import (
    CoverageError,
    PlanError,
    ReportError,
    emit_plot_data,
    emit_report,
    make_plan,
    rank_results,
    run_backtest,
)
from .config import ConfigError, RunConfig, load_config, parse_periods
from .features import FeatureError, Period, apply_scaler, backward_eliminate, build_features, correlation_report, fit_scaler, write_correlation_report
from .ingest import (
    AlignedDataset,
    IngestError,
    Resolution,
    align_join,
    broadcast_daily,
    generate_synthetic,
    normalize_dst,
    parse_source,
    resample_to_hourly,
    summary_stats,
)
from .models import ModelError, SpecError, fit, grid_search

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_RUNS = 0, 2, 3, 4

logger = logging.getLogger("epfbench")

EPILOG = "exit codes: 0 success, 2 usage/config error, 3 data error, 4 backtest runs failed"


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _out_dir(cfg: RunConfig, args) -> Path:
    out = Path(args.out) if args.out else cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    return out


def _aligned_path(cfg: RunConfig, args) -> Path:
    if cfg.aligned is not None:
        return cfg.aligned
    return (Path(args.out) if args.out else cfg.output_dir) / "aligned.csv"


def _load_aligned(cfg: RunConfig, args) -> AlignedDataset:
    path = _aligned_path(cfg, args)
    if not path.exists():
        raise CliError(f"aligned dataset not found: {path} (run `epfbench ingest` or `epfbench synth` first)", EXIT_DATA)
    return AlignedDataset.from_csv(path)


def _print_stats(ds: AlignedDataset, column: str):
    rows = []
    for year in range(ds.start_date.year, ds.end_date.year + 1):
        lo, hi = max(date(year, 1, 1), ds.start_date), min(date(year, 12, 31), ds.end_date)
        rows.append({"year": year, **summary_stats(ds, column, lo, hi)})
    table = pd.DataFrame(rows).set_index("year")
    print(f"{column} by year")
    print(table.to_string(float_format=lambda v: f"{v:.2f}"))


def _write_aligned(ds: AlignedDataset, path: Path, args):
    ds.to_csv(path)
    print(f"wrote {path}: {ds.n_rows} rows ({ds.n_days} days x 24 hours), {len(ds.columns)} columns, "
          f"{ds.start_date}..{ds.end_date}")
    if args.stats:
        _print_stats(ds, "dam_price" if "dam_price" in ds else ds.columns[0])


def _target_path(cfg, args) -> Path:
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        return Path(args.out) / "aligned.csv"
    path = _aligned_path(cfg, args)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def cmd_synth(cfg: RunConfig, args) -> int:
    if cfg.synthetic is None:
        raise CliError("config has no data.synthetic recipe", EXIT_CONFIG)
    ds = generate_synthetic(cfg.synthetic, cfg.seed)
    _write_aligned(ds, _target_path(cfg, args), args)
    return EXIT_OK


def _hourly_series(entry, cfg: RunConfig):
    raw = parse_source(entry.path, entry.schema)
    if raw.resolution is Resolution.DAILY:
        return broadcast_daily(raw)
    if raw.resolution is Resolution.QUARTER_HOURLY:
        raw = resample_to_hourly(raw, cfg.dst)
    return normalize_dst(raw, cfg.dst)


def cmd_ingest(cfg: RunConfig, args) -> int:
    if not cfg.sources:
        if cfg.synthetic is None:
            raise CliError("config lists no data.sources and no data.synthetic recipe", EXIT_CONFIG)
        return cmd_synth(cfg, args)
    series = [_hourly_series(e, cfg) for e in cfg.sources]
    ds = align_join(series, cfg.max_gap_hours)
    _write_aligned(ds, _target_path(cfg, args), args)
    return EXIT_OK


def cmd_analyze(cfg: RunConfig, args) -> int:
    ds = _load_aligned(cfg, args)
    target = cfg.features.target
    columns = cfg.analysis.get("columns") or [target] + [c for c in ds.columns if c != target]
    periods = parse_periods(cfg.analysis) or [Period.year(y) for y in range(ds.start_date.year, ds.end_date.year + 1)]
    # a period partly outside the data is reported over the covered part
    periods = [
        Period(p.label, max(p.start, ds.start_date), min(p.end, ds.end_date))
        for p in periods
        if p.end >= ds.start_date and p.start <= ds.end_date
    ]
    if not periods:
        raise CliError("no analysis period overlaps the dataset", EXIT_DATA)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        table = correlation_report(ds, columns, target, periods)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    path = write_correlation_report(table, _out_dir(cfg, args) / "correlation.csv")
    print(table.to_string(float_format=lambda v: f"{v:.2f}", na_rep="undefined"))
    print(f"wrote {path}")
    return EXIT_OK


def _split(cfg: RunConfig, section: dict, ds: AlignedDataset):
    history = timedelta(days=-(-cfg.features.max_lag // 24))
    start = section.get("start", ds.start_date + history)
    end = section.get("end", ds.end_date)
    matrix = build_features(ds, cfg.features, start, end)
    train, val = matrix.split_tail(float(section.get("validation_fraction", 0.2)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        scaler = fit_scaler(train)
    return apply_scaler(scaler, train), apply_scaler(scaler, val), scaler


def _section_spec(cfg: RunConfig, section: dict, default: str):
    name = section.get("model", default)
    if name not in cfg.models:
        raise CliError(f"model {name!r} is not defined under models", EXIT_CONFIG)
    return name, cfg.models[name]


def cmd_select_features(cfg: RunConfig, args) -> int:
    ds = _load_aligned(cfg, args)
    sel = cfg.selection
    name, spec = _section_spec(cfg, sel, "linear_regression")
    train, val, scaler = _split(cfg, sel, ds)
    result = backward_eliminate(lambda m: fit(spec, m), train, val, sel.get("patience"))
    out = _out_dir(cfg, args)
    (out / "selected_features.txt").write_text("\n".join(result.selected) + "\n")
    result.trail_frame().to_csv(out / "elimination_trail.csv", index=False, lineterminator="\n")
    print(f"model {name}: kept {len(result.selected)} of {len(train.columns)} features, "
          f"validation MAE {result.best_mae:.2f}")
    if scaler.dropped:
        print(f"zero-variance columns dropped before selection: {', '.join(scaler.dropped)}")
    print("\n".join(result.selected))
    return EXIT_OK


def cmd_tune(cfg: RunConfig, args) -> int:
    ds = _load_aligned(cfg, args)
    tune = cfg.tune
    if not tune.get("grids"):
        raise CliError("tune.grids is empty", EXIT_CONFIG)
    name, spec = _section_spec(cfg, tune, "knn")
    train, val, _ = _split(cfg, tune, ds)
    result = grid_search(spec, tune["grids"], train, val, int(tune.get("budget", 100)))
    out = _out_dir(cfg, args)
    result.table.to_csv(out / "tune_results.csv", index=False, lineterminator="\n")
    best = {name: {k: list(v) if isinstance(v, tuple) else v for k, v in result.best.to_dict().items()}}
    (out / "tune_best.yaml").write_text(yaml.safe_dump({"models": best}, sort_keys=True))
    print(result.table.to_string(float_format=lambda v: f"{v:.2f}"))
    print(f"best {name}: validation MAE {result.best_mae:.2f}")
    return EXIT_OK


def cmd_backtest(cfg: RunConfig, args) -> int:
    ds = _load_aligned(cfg, args)
    if not cfg.quarters:
        raise CliError("backtest.quarters is empty", EXIT_CONFIG)
    plan = make_plan(cfg.quarters, cfg.data_start or ds.start_date)
    jobs = args.jobs if args.jobs is not None else cfg.jobs
    records = run_backtest(plan, cfg.models, ds, cfg.features, jobs=jobs)
    out = _out_dir(cfg, args)
    failed = [r for r in records if not r.ok]
    bundle = rank_results(records)
    emit_report(bundle, out)
    if any(r.ok for r in records):
        emit_plot_data(records, out, cfg.traces)
    print(bundle.best_per_quarter.to_string(index=False, float_format=lambda v: f"{v:.2f}"))
    print(f"{len(records)} runs, {len(failed)} failed; reports in {out}")
    for r in failed:
        print(f"failed: {r.model} {r.quarter} {r.window}: {r.error}", file=sys.stderr)
    return EXIT_RUNS if failed else EXIT_OK


COMMANDS = {
    "ingest": (cmd_ingest, "parse and align source files (or generate the synthetic recipe)"),
    "analyze": (cmd_analyze, "write the Pearson correlation table per period"),
    "select-features": (cmd_select_features, "backward feature elimination on a validation split"),
    "tune": (cmd_tune, "exhaustive hyperparameter grid search"),
    "backtest": (cmd_backtest, "walk-forward backtest with ranked reports and plot data"),
    "synth": (cmd_synth, "generate the synthetic aligned dataset"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="epfbench", description=__doc__.splitlines()[0], epilog=EPILOG)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text, epilog=EPILOG)
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--out", help="output directory (overrides output_dir)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--jobs", type=int, help="worker processes for backtest runs")
        p.add_argument("--stats", action="store_true", help="print per-year summary statistics of the target")
        p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    handler = COMMANDS[args.command][0]
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.with_seed(args.seed)
        if args.jobs is not None and args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        return handler(cfg, args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, SpecError, PlanError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IngestError, FeatureError, CoverageError, ReportError, ModelError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
