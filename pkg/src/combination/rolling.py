"""Rolling-window pooling over a data set."""

from __future__ import annotations

import logging
from collections.abc import Mapping
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numpy.typing import NDArray

from src.combination.estimation import fit_combination
from src.combination.models import CombinationMethod, CombinationParams, PluginWeight
from src.combination.plugin import plugin_weight
from src.config.settings import Settings, get_settings
from src.emos.models import EmosCoefficients, ForecastBatch, TrainingWindow
from src.emos.rolling import RollingMode, training_window

logger = logging.getLogger(__name__)

History = Mapping[np.datetime64, EmosCoefficients]


def _windows(
    batch: ForecastBatch,
    g_history: History,
    h_history: History,
    window_length: int,
    target_dates: NDArray[np.datetime64] | None,
    label: str,
    need_history: bool,
) -> list[TrainingWindow]:
    """Training windows for every target day that has component fits.

    With ``need_history`` the window is drawn from days that have component
    coefficients themselves, so each case can be scored under its own fit.
    """
    fitted = np.array(sorted(set(g_history) & set(h_history)), dtype="datetime64[D]")
    targets = fitted if target_dates is None else np.intersect1d(target_dates, fitted)
    source = batch.on_dates(fitted) if need_history else batch
    windows: list[TrainingWindow] = []
    for day in targets:
        window = training_window(source, day, window_length)
        if window is None:
            logger.warning(
                f"Skipping {label} for {day}: fewer than {window_length} usable prior days"
            )
            continue
        windows.append(window)
    return windows


def rolling_combination(
    batch: ForecastBatch,
    method: CombinationMethod,
    g_history: History,
    h_history: History,
    window_length: int,
    n_components: int = 3,
    target_dates: NDArray[np.datetime64] | None = None,
    mode: RollingMode = RollingMode.SEQUENTIAL,
    settings: Settings | None = None,
) -> dict[np.datetime64, CombinationParams]:
    """Fit a pool for every target day on its rolling window.

    Each window case is scored under the component coefficients of its own
    day, so only days with component fits enter a window.

    Args:
        batch: Chronological data set pooled over stations
        method: LP, SLP, BLP or BM_L
        g_history: G coefficients per day
        h_history: H coefficients per day
        window_length: Number of usable days per window
        n_components: Beta-mixture size L
        target_dates: Days to fit for; defaults to every day with component fits
        mode: Sequential warm starts or parallel cold starts
        settings: Optimizer, grid and worker settings
    """
    settings = settings or get_settings()
    windows = _windows(
        batch, g_history, h_history, window_length, target_dates, method.value, True
    )
    fits: dict[np.datetime64, CombinationParams] = {}
    if mode == RollingMode.PARALLEL:
        with ThreadPoolExecutor(max_workers=settings.max_workers) as pool:
            results = pool.map(
                lambda w: fit_combination(
                    method, g_history, h_history, w, n_components, None, settings
                ),
                windows,
            )
            for window, params in zip(windows, results, strict=True):
                fits[window.target_date] = params
        return fits
    previous: CombinationParams | None = None
    for window in windows:
        previous = fit_combination(
            method, g_history, h_history, window, n_components, previous, settings
        )
        fits[window.target_date] = previous
        logger.info(f"Fitted {method.value} for {window.target_date} on {len(window)} cases")
    return fits


def rolling_plugin(
    batch: ForecastBatch,
    g_history: History,
    h_history: History,
    window_length: int,
    target_dates: NDArray[np.datetime64] | None = None,
    settings: Settings | None = None,
) -> dict[np.datetime64, PluginWeight]:
    """Plug-in LP weight for every target day with component fits.

    The window is the same one the components were fitted on, scored under
    the target day's coefficients.
    """
    settings = settings or get_settings()
    windows = _windows(
        batch, g_history, h_history, window_length, target_dates, "plug-in weight", False
    )
    weights: dict[np.datetime64, PluginWeight] = {}
    for window in windows:
        day = window.target_date
        weights[day] = plugin_weight(g_history[day], h_history[day], window, settings)
        logger.info(f"Plug-in weight for {day}: omega={weights[day].omega:.3f}")
    return weights
