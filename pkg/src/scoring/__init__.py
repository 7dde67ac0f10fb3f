"""Proper scoring rules (CRPS, LogS) and PIT computation."""

from src.scoring.models import IntegrationGrid, PredictiveCdf, ScoreKind, ScoreValue
from src.scoring.rules import (
    crps_closed,
    crps_cross_term,
    crps_numeric,
    default_grid,
    ensemble_crps,
    logs,
    pit,
    randomized_pit,
)

__all__ = [
    "IntegrationGrid",
    "PredictiveCdf",
    "ScoreKind",
    "ScoreValue",
    "crps_closed",
    "crps_cross_term",
    "crps_numeric",
    "default_grid",
    "ensemble_crps",
    "logs",
    "pit",
    "randomized_pit",
]
