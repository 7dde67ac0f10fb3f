"""Forecast verification: score tables, calibration histograms and tests."""

from src.verification.histograms import (
    DEFAULT_PIT_BINS,
    histogram_from_pit,
    observation_ranks,
    pit_histogram,
    pit_values,
    randomized_pit_values,
    rank_histogram,
    uniformity_tests,
)
from src.verification.models import (
    BootstrapResult,
    DmResult,
    HistogramKind,
    HistogramResult,
    PairwiseEntry,
    ScoreRow,
    ScoreSeries,
    ScoreTable,
    UniformityResult,
)
from src.verification.significance import (
    autocovariances,
    block_bootstrap,
    dm_test,
    pairwise_matrices,
)
from src.verification.tables import ensemble_score_series, score_table

__all__ = [
    "DEFAULT_PIT_BINS",
    "BootstrapResult",
    "DmResult",
    "HistogramKind",
    "HistogramResult",
    "PairwiseEntry",
    "ScoreRow",
    "ScoreSeries",
    "ScoreTable",
    "UniformityResult",
    "autocovariances",
    "block_bootstrap",
    "dm_test",
    "ensemble_score_series",
    "histogram_from_pit",
    "observation_ranks",
    "pairwise_matrices",
    "pit_histogram",
    "pit_values",
    "randomized_pit_values",
    "rank_histogram",
    "score_table",
    "uniformity_tests",
]
