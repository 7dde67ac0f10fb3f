"""Rolling-window EMOS estimation over a data set."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from enum import Enum

import numpy as np
from numpy.typing import NDArray

from src.config.settings import Settings, get_settings
from src.emos.estimation import fit_emos
from src.emos.models import (
    EmosCoefficients,
    EmosFamily,
    ForecastBatch,
    Objective,
    TrainingWindow,
)

logger = logging.getLogger(__name__)


class RollingMode(str, Enum):
    """How consecutive target days are fitted.

    Attributes:
        SEQUENTIAL: Each day starts from the previous day's fit; bit-reproducible
        PARALLEL: Every day starts from the default initial values, days run
            concurrently
    """

    SEQUENTIAL = "sequential"
    PARALLEL = "parallel"


def training_window(
    batch: ForecastBatch, target_date: np.datetime64, n_days: int
) -> TrainingWindow | None:
    """The ``n_days`` latest available days strictly before ``target_date``.

    Missing calendar days are skipped, so the lookback extends until
    ``n_days`` days with data are collected. Returns None if fewer exist.
    """
    days = batch.unique_dates
    prior = days[days < target_date]
    if len(prior) < n_days:
        return None
    return TrainingWindow(
        target_date=target_date, n_days=n_days, batch=batch.on_dates(prior[-n_days:])
    )


def rolling_fit(
    batch: ForecastBatch,
    family: EmosFamily,
    window_length: int,
    objective: Objective = Objective.MIN_CRPS,
    target_dates: NDArray[np.datetime64] | None = None,
    mode: RollingMode = RollingMode.SEQUENTIAL,
    settings: Settings | None = None,
) -> dict[np.datetime64, EmosCoefficients]:
    """Fit ``family`` for every target day on its rolling training window.

    Args:
        batch: Chronological data set pooled over stations
        family: EMOS family to fit
        window_length: Number of available days per training window
        objective: Estimation criterion
        target_dates: Days to fit for; defaults to every day in ``batch``
        mode: Sequential warm starts or parallel cold starts
        settings: Optimizer and worker settings

    Returns:
        Mapping from target day to fitted coefficients; days without enough
        history are skipped and logged
    """
    settings = settings or get_settings()
    targets = batch.unique_dates if target_dates is None else np.unique(target_dates)
    windows: list[TrainingWindow] = []
    for day in targets:
        window = training_window(batch, day, window_length)
        if window is None:
            logger.warning(
                f"Skipping {family.value} fit for {day}: fewer than "
                f"{window_length} prior days"
            )
            continue
        windows.append(window)

    fits: dict[np.datetime64, EmosCoefficients] = {}
    if mode == RollingMode.PARALLEL:
        with ThreadPoolExecutor(max_workers=settings.max_workers) as pool:
            results = pool.map(
                lambda w: fit_emos(family, w, objective, None, settings), windows
            )
            for window, coefficients in zip(windows, results, strict=True):
                fits[window.target_date] = coefficients
    else:
        previous: EmosCoefficients | None = None
        for window in windows:
            previous = fit_emos(family, window, objective, previous, settings)
            fits[window.target_date] = previous
            logger.info(
                f"Fitted {family.value} for {window.target_date} on "
                f"{len(window)} cases"
            )
    return fits
