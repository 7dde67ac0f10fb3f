"""Verification rank and PIT histograms with uniformity checks."""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike
from scipy import stats

from src.distributions.kernels import FloatArray
from src.errors import DegenerateEnsembleError
from src.scoring.rules import CdfLike, as_cdf_function
from src.verification.models import HistogramKind, HistogramResult, UniformityResult

logger = logging.getLogger(__name__)

DEFAULT_PIT_BINS = 20

# Vectorized CDF over cases: x of shape (n,) -> F_i(x_i)
BatchCdf = Callable[[FloatArray], FloatArray]


def observation_ranks(
    members: ArrayLike, observations: ArrayLike, rng: np.random.Generator
) -> np.ndarray:
    """Rank of each observation within its ensemble, 1 to M + 1.

    Ties between the observation and members, most often joint zeros for
    precipitation, are broken uniformly at random.
    """
    members = np.asarray(members, dtype=np.float64)
    obs = np.asarray(observations, dtype=np.float64)[:, None]
    below = np.sum(members < obs, axis=1)
    ties = np.sum(members == obs, axis=1)
    return below + 1 + rng.integers(0, ties + 1)


def rank_histogram(
    members: ArrayLike,
    observations: ArrayLike,
    rng: np.random.Generator | None = None,
    label: str = "",
) -> HistogramResult:
    """Verification rank histogram with M + 1 bins.

    Args:
        members: Raw ensemble values, shape (n, M)
        observations: Verifying observations, shape (n,)
        rng: Stream used for tie-breaking
        label: System name stored on the result

    Raises:
        DegenerateEnsembleError: If the ensemble has fewer than two members
    """
    members = np.asarray(members, dtype=np.float64)
    n_members = members.shape[1]
    if n_members < 2:
        raise DegenerateEnsembleError(f"rank histogram needs M >= 2, got {n_members}")
    ranks = observation_ranks(members, observations, rng or np.random.default_rng())
    counts = np.bincount(ranks - 1, minlength=n_members + 1)
    edges = np.arange(n_members + 2, dtype=np.float64) + 0.5
    return HistogramResult(
        kind=HistogramKind.RANK,
        edges=edges.tolist(),
        counts=[int(c) for c in counts],
        n=len(ranks),
        label=label,
    )


def randomized_pit_values(
    cdf_at_obs: ArrayLike,
    cdf_at_zero: ArrayLike,
    observations: ArrayLike,
    rng: np.random.Generator,
) -> FloatArray:
    """PIT values, drawn uniformly on [0, F(0)] where the observation is zero."""
    obs = np.asarray(observations, dtype=np.float64)
    u = rng.uniform(size=obs.shape)
    pits = np.where(
        obs == 0.0,
        u * np.asarray(cdf_at_zero, dtype=np.float64),
        np.asarray(cdf_at_obs, dtype=np.float64),
    )
    return np.clip(pits, 0.0, 1.0)


def pit_values(
    forecasts: BatchCdf | Sequence[CdfLike],
    observations: ArrayLike,
    rng: np.random.Generator | None = None,
) -> FloatArray:
    """Randomized PIT of each observation under its forecast.

    ``forecasts`` is either one vectorized CDF over the cases or a
    sequence of single-case predictive laws.
    """
    rng = rng or np.random.default_rng()
    obs = np.asarray(observations, dtype=np.float64)
    if callable(forecasts):
        at_obs, at_zero = forecasts(obs), forecasts(np.zeros_like(obs))
    else:
        cdfs = [as_cdf_function(F) for F in forecasts]
        if len(cdfs) != len(obs):
            raise ValueError("one forecast per observation is required")
        at_obs = np.array([float(F(x)) for F, x in zip(cdfs, obs, strict=True)])
        at_zero = np.array([float(F(0.0)) for F in cdfs])
    return randomized_pit_values(at_obs, at_zero, obs, rng)


def histogram_from_pit(
    pits: ArrayLike, bins: int = DEFAULT_PIT_BINS, label: str = ""
) -> HistogramResult:
    """Bin PIT values into ``bins`` equal-width bins on [0, 1]."""
    if bins < 1:
        raise ValueError(f"bins must be positive, got {bins}")
    pits = np.asarray(pits, dtype=np.float64)
    counts, edges = np.histogram(pits, bins=bins, range=(0.0, 1.0))
    return HistogramResult(
        kind=HistogramKind.PIT,
        edges=edges.tolist(),
        counts=[int(c) for c in counts],
        n=len(pits),
        label=label,
    )


def pit_histogram(
    forecasts: BatchCdf | Sequence[CdfLike],
    observations: ArrayLike,
    bins: int = DEFAULT_PIT_BINS,
    rng: np.random.Generator | None = None,
    label: str = "",
) -> HistogramResult:
    """PIT histogram, randomized over the atom at zero for censored forecasts."""
    return histogram_from_pit(pit_values(forecasts, observations, rng), bins, label)


def uniformity_tests(
    histogram: HistogramResult, pits: ArrayLike | None = None
) -> UniformityResult:
    """Chi-square test of the bin counts and, given raw PITs, a KS test."""
    counts = np.asarray(histogram.counts, dtype=np.float64)
    if histogram.n == 0:
        return UniformityResult(chi2_pvalue=1.0)
    chi2 = float(stats.chisquare(counts).pvalue)
    ks = None
    if pits is not None:
        ks = float(stats.kstest(np.asarray(pits, dtype=np.float64), "uniform").pvalue)
    logger.debug(f"Uniformity of {histogram.label or histogram.kind.value}: chi2 p={chi2:.3g}")
    return UniformityResult(chi2_pvalue=chi2, ks_pvalue=ks)
