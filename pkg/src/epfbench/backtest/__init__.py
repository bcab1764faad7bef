"""Walk-forward backtests: plan, execution and reporting."""

from .plan import WINDOWS, BacktestPlan, PlanEntry, PlanError, Quarter, make_plan, quarter_range
from .report import (
    ReportBundle,
    ReportError,
    TraceRequest,
    emit_plot_data,
    emit_report,
    rank_results,
    trace_frame,
)
from .runner import CoverageError, EvaluationRecord, RunArtifacts, check_coverage, run_backtest, run_one

__all__ = [
    "WINDOWS",
    "BacktestPlan",
    "CoverageError",
    "EvaluationRecord",
    "PlanEntry",
    "PlanError",
    "Quarter",
    "ReportBundle",
    "ReportError",
    "RunArtifacts",
    "TraceRequest",
    "check_coverage",
    "emit_plot_data",
    "emit_report",
    "make_plan",
    "quarter_range",
    "rank_results",
    "run_backtest",
    "run_one",
    "trace_frame",
]
