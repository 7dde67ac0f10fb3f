"""Pipeline orchestration and report files."""

from src.engine.pipeline import (
    ENSEMBLE,
    CombinationFits,
    ComponentFits,
    ReportBundle,
    Verification,
    combine_components,
    evaluation_days,
    run_pipeline,
    run_settings,
    stage,
    train_components,
    verify_systems,
)
from src.engine.reports import (
    read_coefficients,
    read_combinations,
    read_table,
    write_coefficients,
    write_combinations,
    write_reports,
    write_verification,
)

__all__ = [
    "ENSEMBLE",
    "CombinationFits",
    "ComponentFits",
    "ReportBundle",
    "Verification",
    "combine_components",
    "evaluation_days",
    "run_pipeline",
    "run_settings",
    "stage",
    "train_components",
    "verify_systems",
    "read_coefficients",
    "read_combinations",
    "read_table",
    "write_coefficients",
    "write_combinations",
    "write_reports",
    "write_verification",
]
