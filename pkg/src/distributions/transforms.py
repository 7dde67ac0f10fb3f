"""Moment-to-parameter transforms required by the EMOS link functions."""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike
from scipy import special

from src.distributions.kernels import EULER_GAMMA, GUMBEL_SWITCH, FloatArray
from src.distributions.models import LogNormalParams
from src.errors import ParameterDomainError


def lognormal_from_moments(
    m: ArrayLike, v: ArrayLike
) -> tuple[FloatArray, FloatArray]:
    """Array version of ``moments_to_lognormal`` without validation."""
    m, v = np.asarray(m, dtype=np.float64), np.asarray(v, dtype=np.float64)
    ratio = np.log1p(v / (m * m))
    return np.log(m) - 0.5 * ratio, np.sqrt(ratio)


def gamma_from_moments(
    m: ArrayLike, s2: ArrayLike
) -> tuple[FloatArray, FloatArray]:
    """Array version of ``moments_to_gamma`` without validation."""
    m, s2 = np.asarray(m, dtype=np.float64), np.asarray(s2, dtype=np.float64)
    return m * m / s2, s2 / m


def gev_location(m: ArrayLike, sigma: ArrayLike, xi: ArrayLike) -> FloatArray:
    """Array version of ``gev_location_from_mean`` without validation."""
    m, sigma, xi = (np.asarray(a, dtype=np.float64) for a in (m, sigma, xi))
    gumbel = np.abs(xi) < GUMBEL_SWITCH
    safe_xi = np.where(gumbel, 0.5, xi)
    offset = np.expm1(special.gammaln(1.0 - safe_xi)) / safe_xi
    return m - sigma * np.where(gumbel, EULER_GAMMA, offset)


def moments_to_lognormal(m: float, v: float) -> LogNormalParams:
    """Log-normal parameters with mean ``m`` and variance ``v``.

    mu = log(m^2 / sqrt(v + m^2)) and sigma = sqrt(log(1 + v / m^2)),
    evaluated through log1p so that small variances keep full precision.

    Args:
        m: Mean, strictly positive
        v: Variance, strictly positive

    Returns:
        LogNormalParams with the requested first two moments

    Raises:
        ParameterDomainError: If m <= 0 or v <= 0

    Examples:
        >>> params = moments_to_lognormal(math.exp(0.5), (math.e - 1) * math.e)
        >>> round(params.mu, 12), round(params.sigma, 12)
        (0.0, 1.0)
    """
    if not (m > 0.0 and v > 0.0):
        raise ParameterDomainError(
            f"log-normal moments need m > 0 and v > 0, got m={m}, v={v}"
        )
    mu, sigma = lognormal_from_moments(m, v)
    return LogNormalParams(mu=float(mu), sigma=float(sigma))


def moments_to_gamma(m: float, s2: float) -> tuple[float, float]:
    """Gamma shape and scale with mean ``m`` and variance ``s2``.

    Raises:
        ParameterDomainError: If either moment is not strictly positive
    """
    if not (m > 0.0 and s2 > 0.0):
        raise ParameterDomainError(
            f"gamma moments need m > 0 and s2 > 0, got m={m}, s2={s2}"
        )
    kappa, theta = gamma_from_moments(m, s2)
    return float(kappa), float(theta)


def gev_location_from_mean(m: float, sigma: float, xi: float) -> float:
    """GEV location giving mean ``m`` at scale ``sigma`` and shape ``xi``.

    Uses the Gumbel branch m - sigma * gamma when |xi| < 1e-8.

    Raises:
        ParameterDomainError: If sigma <= 0 or xi >= 1 (the mean does not exist)
    """
    if not sigma > 0.0:
        raise ParameterDomainError(f"GEV scale must be positive, got {sigma}")
    if not xi < 1.0:
        raise ParameterDomainError(f"GEV mean is undefined for xi >= 1, got {xi}")
    return float(gev_location(m, sigma, xi))
