"""Parametric predictive families and their moment transforms."""

from numpy.typing import ArrayLike

from src.distributions.kernels import EULER_GAMMA, GUMBEL_SWITCH
from src.distributions.models import (
    GEV_SHAPE_MAX,
    GEV_SHAPE_MIN,
    BetaParams,
    CensoredGevParams,
    CsgParams,
    DistributionSpec,
    Family,
    LogNormalParams,
    MixtureSpec,
    TruncatedNormalParams,
)
from src.distributions.transforms import (
    gev_location_from_mean,
    moments_to_gamma,
    moments_to_lognormal,
)


def cdf(d: DistributionSpec, x: float) -> float:
    """Predictive CDF of ``d`` at ``x``; equals the atom at x == 0 if censored."""
    return float(d.cdf(x))


def pdf(d: DistributionSpec, x: float) -> float:
    """Density of the continuous part of ``d`` at ``x``."""
    return float(d.pdf(x))


def generalized_density(d: DistributionSpec, x: float) -> float:
    """Density at ``x``, with the atom in its place at x == 0 for censored laws."""
    return float(d.generalized_density(x))


def quantile(d: DistributionSpec, p: ArrayLike) -> float:
    """Quantile of ``d`` at level ``p`` in (0, 1).

    Raises:
        ParameterDomainError: If p lies outside (0, 1)
    """
    return float(d.quantile(p))


def mean(d: DistributionSpec) -> float:
    """Expected value of ``d``, atom at zero included."""
    return d.mean()


def point_mass_at_zero(d: DistributionSpec) -> float:
    """Probability of an exact zero; 0 for continuous laws."""
    return d.point_mass_at_zero()


__all__ = [
    "EULER_GAMMA",
    "GEV_SHAPE_MAX",
    "GEV_SHAPE_MIN",
    "GUMBEL_SWITCH",
    "BetaParams",
    "CensoredGevParams",
    "CsgParams",
    "DistributionSpec",
    "Family",
    "LogNormalParams",
    "MixtureSpec",
    "TruncatedNormalParams",
    "cdf",
    "generalized_density",
    "gev_location_from_mean",
    "mean",
    "moments_to_gamma",
    "moments_to_lognormal",
    "pdf",
    "point_mass_at_zero",
    "quantile",
]
