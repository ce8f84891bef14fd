"""Evaluation protocols, reports, and the pipeline CLI."""

from .config import AppConfig, AttackSection, EvalConfig, baseline_kind, load_config
from .evaluation import (
    AdaptRule,
    evaluate_ser,
    few_shot_eval,
    format_timing_table,
    sample_efficiency,
    shot_limit,
    shot_source,
    take_shots,
    timing_report,
)
from .report import (
    CSV_COLUMNS,
    SCHEMA_VERSION,
    EvalReport,
    SERCell,
    TimingRow,
    read_report,
    write_report,
)

__all__ = [
    "CSV_COLUMNS",
    "SCHEMA_VERSION",
    "AdaptRule",
    "AppConfig",
    "AttackSection",
    "EvalConfig",
    "EvalReport",
    "SERCell",
    "TimingRow",
    "baseline_kind",
    "evaluate_ser",
    "few_shot_eval",
    "format_timing_table",
    "load_config",
    "read_report",
    "sample_efficiency",
    "shot_limit",
    "shot_source",
    "take_shots",
    "timing_report",
    "write_report",
]
