"""Source ingestion and alignment into the canonical hourly dataset."""

from .align import AlignedDataset, align_join, summary_stats
from .series import (
    DstCalendar,
    IngestError,
    RawSeries,
    Resolution,
    SourceSchema,
    broadcast_daily,
    normalize_dst,
    parse_source,
    resample_to_hourly,
)
from .synthetic import CANONICAL_COLUMNS, SyntheticRecipe, benchmark_recipe, generate_synthetic

__all__ = [
    "AlignedDataset",
    "CANONICAL_COLUMNS",
    "DstCalendar",
    "IngestError",
    "RawSeries",
    "Resolution",
    "SourceSchema",
    "SyntheticRecipe",
    "align_join",
    "benchmark_recipe",
    "broadcast_daily",
    "generate_synthetic",
    "normalize_dst",
    "parse_source",
    "resample_to_hourly",
    "summary_stats",
]
