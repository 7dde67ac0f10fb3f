"""Proper scoring rules and probability integral transforms.

CRPS closed forms cover the four EMOS families; every other predictive law
(pools, mixtures) is scored by the split trapezoidal rule on a stretched grid
starting at zero.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable

import numpy as np
from numpy.typing import ArrayLike

from src.config.settings import get_settings
from src.distributions.kernels import FloatArray
from src.distributions.models import (
    CensoredGevParams,
    CsgParams,
    DistributionSpec,
    LogNormalParams,
    TruncatedNormalParams,
)
from src.errors import GridError, ParameterDomainError
from src.scoring import kernels
from src.scoring.kernels import MIN_BULK_FRACTION
from src.scoring.models import IntegrationGrid, PredictiveCdf, ScoreKind, ScoreValue

logger = logging.getLogger(__name__)

CdfFunction = Callable[[ArrayLike], FloatArray]
CdfLike = CdfFunction | PredictiveCdf


def as_cdf_function(F: CdfLike) -> CdfFunction:
    """The CDF callable of a predictive law, or ``F`` itself if already callable."""
    if isinstance(F, PredictiveCdf):
        return F.cdf
    return F


def crps_closed(d: DistributionSpec, x: float) -> ScoreValue:
    """Closed-form CRPS of a single EMOS predictive law.

    Args:
        d: Truncated normal, log-normal, CSG or censored GEV law
        x: Verifying observation, x >= 0

    Returns:
        ScoreValue of kind CRPS

    Raises:
        NotImplementedError: For families without a closed form (pools, mixtures)

    Examples:
        >>> crps_closed(TruncatedNormalParams(mu=10.0, sigma=1.0), 10.0).value
        0.23369...
    """
    if isinstance(d, TruncatedNormalParams):
        value = kernels.tn_crps(x, d.mu, d.sigma)
    elif isinstance(d, LogNormalParams):
        value = kernels.ln_crps(x, d.mu, d.sigma)
    elif isinstance(d, CsgParams):
        value = kernels.csg_crps(x, d.kappa, d.theta, d.delta)
    elif isinstance(d, CensoredGevParams):
        if not d.has_mean:
            raise ParameterDomainError(f"CRPS is infinite for GEV shape xi={d.xi}")
        value = kernels.cgev_crps(x, d.mu, d.sigma, d.xi)
    else:
        raise NotImplementedError(
            f"no closed-form CRPS for family {d.family.value}; use crps_numeric"
        )
    return ScoreValue(value=max(float(value), 0.0), kind=ScoreKind.CRPS)


def default_grid(
    d: PredictiveCdf, x: float, n_points: int | None = None
) -> IntegrationGrid:
    """Stretched integration grid from 0 to ceil(max(q, x)).

    ``q`` leaves ``grid_tail_probability`` mass above; the nodes are uniform
    up to the ``grid_bulk_probability`` quantile and geometric beyond it.

    Args:
        d: Predictive law to integrate
        x: Observation that must lie on the grid
        n_points: Grid size, defaults to ``Settings.grid_points``
    """
    settings = get_settings()
    upper = float(
        max(math.ceil(max(d.support_upper(settings.grid_tail_probability), x)), 1)
    )
    bulk = d.support_upper(1.0 - settings.grid_bulk_probability)
    bulk = min(max(bulk, MIN_BULK_FRACTION * upper), upper)
    return IntegrationGrid(
        lower=0.0,
        upper=upper,
        n_points=n_points or settings.grid_points,
        bulk_upper=bulk,
    )


def _check_on_grid(x: float, grid: IntegrationGrid) -> None:
    if not grid.contains(x):
        raise GridError(
            f"observation {x} lies outside the grid [{grid.lower}, {grid.upper}]"
        )


def crps_numeric(F: CdfLike, x: float, grid: IntegrationGrid) -> ScoreValue:
    """CRPS by the trapezoidal rule on the split-integral form.

    Computes int_{lower}^{x} F^2 + int_{x}^{upper} (1 - F)^2, splitting the
    grid cell that contains x exactly at x.

    Raises:
        GridError: If x lies outside [grid.lower, grid.upper]
    """
    _check_on_grid(x, grid)
    cdf = as_cdf_function(F)
    nodes = grid.nodes()
    value = kernels.crps_from_cdf_values(
        nodes, cdf(nodes), np.asarray(x, dtype=np.float64), cdf(x)
    )
    return ScoreValue(value=max(float(value), 0.0), kind=ScoreKind.CRPS)


def crps_cross_term(G: CdfLike, H: CdfLike, x: float, grid: IntegrationGrid) -> float:
    """Cross term int G*H below x plus int (1 - G)(1 - H) above x.

    This is the per-case summand of the mixed term in the quadratic
    expansion of the linear-pool CRPS.

    Raises:
        GridError: If x lies outside [grid.lower, grid.upper]
    """
    _check_on_grid(x, grid)
    g, h = as_cdf_function(G), as_cdf_function(H)
    nodes = grid.nodes()
    return float(
        kernels.cross_from_cdf_values(
            nodes, g(nodes), h(nodes), np.asarray(x, dtype=np.float64), g(x), h(x)
        )
    )


def logs(d: DistributionSpec, x: float) -> ScoreValue:
    """Logarithmic score -log f(x); the atom replaces f at x == 0 if censored.

    A zero density yields an explicit ``+inf`` score rather than an error.
    """
    density = float(d.generalized_density(x))
    if density <= 0.0:
        logger.debug(f"Zero predictive density at x={x} for {d.family.value}")
        return ScoreValue(value=math.inf, kind=ScoreKind.LOGS)
    return ScoreValue(value=-math.log(density), kind=ScoreKind.LOGS)


def pit(F: CdfLike, x: float) -> float:
    """Probability integral transform F(x)."""
    return float(np.clip(as_cdf_function(F)(x), 0.0, 1.0))


def randomized_pit(F: CdfLike, x: float, u: float) -> float:
    """PIT randomized over the atom at zero: u * F(0) if x == 0, else F(x).

    Args:
        F: Predictive CDF with a possible point mass at zero
        x: Observation
        u: Uniform draw on [0, 1] supplied by the caller

    Raises:
        ParameterDomainError: If u lies outside [0, 1]
    """
    if not 0.0 <= u <= 1.0:
        raise ParameterDomainError(f"uniform draw must lie in [0, 1], got {u}")
    if x == 0.0:
        return u * pit(F, 0.0)
    return pit(F, x)


def ensemble_crps(members: ArrayLike, x: float) -> float:
    """CRPS of the raw ensemble via the E|X - x| - E|X - X'| / 2 form."""
    return float(kernels.ensemble_crps(np.asarray(members, dtype=np.float64), x))
