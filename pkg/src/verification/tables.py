"""Mean score tables over forecast systems."""

from __future__ import annotations

import logging
from collections.abc import Mapping

import numpy as np
import pandas as pd

from src.emos.models import ForecastBatch
from src.scoring.kernels import ensemble_crps
from src.verification.models import ScoreRow, ScoreSeries, ScoreTable

logger = logging.getLogger(__name__)


def ensemble_score_series(batch: ForecastBatch, label: str = "ensemble") -> ScoreSeries:
    """CRPS of the raw ensemble for every case, from the empirical CDF."""
    values = ensemble_crps(batch.members, batch.observations)
    return ScoreSeries.create(batch.dates, batch.stations, values, label)


def score_table(series: Mapping[str, ScoreSeries]) -> ScoreTable:
    """Mean score per system over the cases every system covers.

    Cases missing from some system are dropped for all systems and the
    number each system lacks is reported in ``ScoreTable.missing``.
    """
    frames = [
        s.to_frame().set_index(["date", "station"])["value"].rename(name)
        for name, s in series.items()
    ]
    if not frames:
        return ScoreTable(rows=[])
    joined = pd.concat(frames, axis=1, join="outer")
    missing = {name: int(joined[name].isna().sum()) for name in series}
    complete = joined.dropna()
    if len(complete) < len(joined):
        logger.warning(
            f"Score table uses {len(complete)} of {len(joined)} cases; "
            f"missing per system: {missing}"
        )
    rows = [
        ScoreRow(
            system=name,
            mean=float(np.mean(complete[name])) if len(complete) else float("nan"),
            n_cases=len(complete),
        )
        for name in series
    ]
    return ScoreTable(rows=rows, missing={k: v for k, v in missing.items() if v})
