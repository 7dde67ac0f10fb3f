"""Diebold-Mariano tests and moving-block bootstrap of score differences."""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pandas as pd
from scipy import stats

from src.config.settings import Settings, get_settings
from src.distributions.kernels import FloatArray
from src.errors import BlockLengthError, DegenerateVarianceError
from src.verification.models import BootstrapResult, DmResult, PairwiseEntry, ScoreSeries

logger = logging.getLogger(__name__)

# Repetitions per independently seeded bootstrap stream
BOOTSTRAP_CHUNK = 1_000


def autocovariances(d: ScoreSeries, max_lag: int) -> FloatArray:
    """gamma_0 .. gamma_max_lag of the differences, station by station.

    Lags count calendar days along each station: the series is laid out on
    the full date range, so a missing day leaves a gap instead of pairing
    its neighbours. The sum of lagged products over all stations is divided
    by the total number of cases.
    """
    frame = d.to_frame()
    table = frame.pivot(index="date", columns="station", values="value")
    table.index = pd.DatetimeIndex(table.index).as_unit("ns")
    days = pd.date_range(table.index.min(), table.index.max(), freq="D")
    centred = table.reindex(days) - d.mean
    values = centred.to_numpy(dtype=np.float64)
    n = len(d)
    gammas = np.empty(max_lag + 1)
    for j in range(max_lag + 1):
        lagged = values[j:] * values[: len(values) - j]
        gammas[j] = np.nansum(lagged) / n
    return gammas


def dm_test(d: ScoreSeries, horizon: int = 1) -> DmResult:
    """Two-sided Diebold-Mariano test on a score-difference series.

    The variance estimate is gamma_0 + 2 sum_{j=1}^{horizon-1} gamma_j; when it
    is not positive the test falls back to gamma_0 and flags it.

    Args:
        d: Score differences S(F1) - S(F2) per case
        horizon: Forecast horizon in days, at least 1

    Returns:
        DmResult with t_n = sqrt(n) mean(d) / sigma_d

    Raises:
        ValueError: If fewer than two differences or horizon < 1
        DegenerateVarianceError: If the differences have zero variance
    """
    if horizon < 1:
        raise ValueError(f"horizon must be at least 1, got {horizon}")
    n = len(d)
    if n < 2:
        raise ValueError(f"DM test needs at least two differences, got {n}")
    gammas = autocovariances(d, horizon - 1)
    if gammas[0] <= 0.0:
        raise DegenerateVarianceError(
            f"score differences {d.label!r} have zero variance; forecasts coincide"
        )
    variance = gammas[0] + 2.0 * gammas[1:].sum()
    fallback = bool(variance <= 0.0)
    if fallback:
        logger.warning(
            f"DM variance for {d.label!r} is not positive at horizon {horizon}; "
            f"using lag-0 autocovariance"
        )
        variance = gammas[0]
    statistic = math.sqrt(n) * d.mean / math.sqrt(variance)
    p_value = float(min(1.0, 2.0 * stats.norm.sf(abs(statistic))))
    return DmResult(
        statistic=statistic,
        p_value=p_value,
        n=n,
        horizon=horizon,
        variance_fallback=fallback,
        label=d.label,
    )


def _block_means(
    day_sums: FloatArray,
    day_counts: FloatArray,
    block_length: int,
    repetitions: int,
    seed: np.random.SeedSequence,
) -> FloatArray:
    rng = np.random.Generator(np.random.Philox(seed))
    n_days = len(day_sums)
    cum_sums = np.concatenate([[0.0], np.cumsum(day_sums)])
    cum_counts = np.concatenate([[0.0], np.cumsum(day_counts)])
    starts = rng.integers(0, n_days - block_length + 1, size=repetitions)
    ends = starts + block_length
    return (cum_sums[ends] - cum_sums[starts]) / (cum_counts[ends] - cum_counts[starts])


def block_bootstrap(
    d: ScoreSeries,
    block_length: int,
    repetitions: int,
    seed: int = 0,
    settings: Settings | None = None,
) -> BootstrapResult:
    """Moving-block bootstrap of the mean score difference.

    Each repetition draws a start among the T - b + 1 possible days and
    averages every difference of the b consecutive available days, all
    stations included. Repetitions run in chunks, each with its own Philox
    stream spawned from ``seed``, so results do not depend on scheduling.

    Args:
        d: Score differences S(F1) - S(F2) per case
        block_length: Block length b in days
        repetitions: Number of repetitions M
        seed: Master seed
        settings: Worker settings

    Raises:
        ValueError: If ``repetitions`` < 1 or ``block_length`` < 1
        BlockLengthError: If the series covers fewer than b days
    """
    if repetitions < 1 or block_length < 1:
        raise ValueError("block length and repetitions must be positive")
    settings = settings or get_settings()
    per_day = d.to_frame().groupby("date")["value"].agg(["sum", "count"])
    n_days = len(per_day)
    if n_days < block_length:
        raise BlockLengthError(
            f"block of {block_length} days exceeds the {n_days} days of {d.label!r}"
        )
    day_sums = per_day["sum"].to_numpy(dtype=np.float64)
    day_counts = per_day["count"].to_numpy(dtype=np.float64)
    sizes = [
        min(BOOTSTRAP_CHUNK, repetitions - start)
        for start in range(0, repetitions, BOOTSTRAP_CHUNK)
    ]
    streams = np.random.SeedSequence(seed).spawn(len(sizes))
    with ThreadPoolExecutor(max_workers=settings.max_workers) as pool:
        chunks = pool.map(
            lambda args: _block_means(day_sums, day_counts, block_length, *args),
            zip(sizes, streams, strict=True),
        )
        means = np.concatenate(list(chunks))
    proportion = float(np.mean(means < 0.0))
    logger.debug(
        f"Bootstrap {d.label!r}: b={block_length} M={repetitions} "
        f"negative share {proportion:.3f}"
    )
    return BootstrapResult(
        proportion_negative=proportion,
        repetitions=repetitions,
        block_length=block_length,
        mean_differences=means.tolist(),
        label=d.label,
    )


def pairwise_matrices(
    series: Mapping[str, ScoreSeries],
    horizon: int = 1,
    block_length: int | None = None,
    repetitions: int = 0,
    seed: int = 0,
    settings: Settings | None = None,
) -> list[PairwiseEntry]:
    """DM and bootstrap comparisons for every ordered pair of systems.

    Differences are row minus column on the cases both cover. The bootstrap
    is skipped when ``block_length`` is None or ``repetitions`` is 0; a pair
    whose differences have zero variance gets no DM result.
    """
    entries: list[PairwiseEntry] = []
    for pair_index, (row, first) in enumerate(series.items()):
        for col_index, (column, second) in enumerate(series.items()):
            if row == column:
                continue
            d = first.difference(second)
            try:
                dm = dm_test(d, horizon)
            except DegenerateVarianceError as exc:
                logger.warning(f"No DM test for {row} vs {column}: {exc}")
                dm = None
            bootstrap = None
            if block_length is not None and repetitions > 0:
                bootstrap = block_bootstrap(
                    d,
                    block_length,
                    repetitions,
                    seed + pair_index * len(series) + col_index,
                    settings,
                )
            entries.append(PairwiseEntry(row=row, column=column, dm=dm, bootstrap=bootstrap))
    return entries
