"""Vectorized CDF/PDF/quantile kernels for the predictive families.

Every function broadcasts over numpy arrays so that the same code serves
single-case evaluation and whole training windows inside the optimizers.
Parameter validation happens in the pydantic models, not here.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import special

FloatArray = NDArray[np.float64]

EULER_GAMMA = float(np.euler_gamma)

# Below this |xi| the Gumbel expressions replace the general GEV ones.
GUMBEL_SWITCH = 1e-8

_TINY = np.finfo(np.float64).tiny


def _arr(x: ArrayLike) -> FloatArray:
    return np.asarray(x, dtype=np.float64)


# ---------------------------------------------------------------------------
# Truncated normal, cut off at zero
# ---------------------------------------------------------------------------


def tn_cdf(x: ArrayLike, mu: ArrayLike, sigma: ArrayLike) -> FloatArray:
    """CDF of N0(mu, sigma^2), written as a ratio of survival functions.

    The ratio is taken in log space so that it survives mu / sigma far below
    zero, where both survival functions underflow.
    """
    x, mu, sigma = _arr(x), _arr(mu), _arr(sigma)
    z = (x - mu) / sigma
    survival = np.exp(
        np.minimum(special.log_ndtr(-z) - special.log_ndtr(mu / sigma), 0.0)
    )
    return np.where(x < 0.0, 0.0, np.clip(1.0 - survival, 0.0, 1.0))


def tn_pdf(x: ArrayLike, mu: ArrayLike, sigma: ArrayLike) -> FloatArray:
    return np.exp(tn_logpdf(x, mu, sigma))


def tn_logpdf(x: ArrayLike, mu: ArrayLike, sigma: ArrayLike) -> FloatArray:
    x, mu, sigma = _arr(x), _arr(mu), _arr(sigma)
    z = (x - mu) / sigma
    logd = (
        -0.5 * z * z
        - 0.5 * np.log(2.0 * np.pi)
        - np.log(sigma)
        - special.log_ndtr(mu / sigma)
    )
    return np.where(x < 0.0, -np.inf, logd)


def tn_quantile(p: ArrayLike, mu: ArrayLike, sigma: ArrayLike) -> FloatArray:
    p, mu, sigma = _arr(p), _arr(mu), _arr(sigma)
    r = mu / sigma
    with np.errstate(divide="ignore"):
        log_tail = np.log1p(-np.minimum(p, 1.0)) + special.log_ndtr(r)
    lower = special.ndtri(special.ndtr(-r) + p * special.ndtr(r))
    upper = -special.ndtri_exp(log_tail)
    z = np.where((p < 0.5) & (r >= 0.0), lower, upper)
    return np.maximum(mu + sigma * z, 0.0)


def tn_mean(mu: ArrayLike, sigma: ArrayLike) -> FloatArray:
    mu, sigma = _arr(mu), _arr(sigma)
    r = mu / sigma
    mills = np.exp(-0.5 * r * r - 0.5 * np.log(2.0 * np.pi) - special.log_ndtr(r))
    return mu + sigma * mills


# ---------------------------------------------------------------------------
# Log-normal
# ---------------------------------------------------------------------------


def ln_cdf(x: ArrayLike, mu: ArrayLike, sigma: ArrayLike) -> FloatArray:
    x, mu, sigma = _arr(x), _arr(mu), _arr(sigma)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = (np.log(np.where(x > 0.0, x, 1.0)) - mu) / sigma
    return np.where(x > 0.0, special.ndtr(z), 0.0)


def ln_logpdf(x: ArrayLike, mu: ArrayLike, sigma: ArrayLike) -> FloatArray:
    x, mu, sigma = _arr(x), _arr(mu), _arr(sigma)
    safe_x = np.where(x > 0.0, x, 1.0)
    logx = np.log(safe_x)
    z = (logx - mu) / sigma
    logd = -0.5 * z * z - 0.5 * np.log(2.0 * np.pi) - np.log(sigma) - logx
    return np.where(x > 0.0, logd, -np.inf)


def ln_pdf(x: ArrayLike, mu: ArrayLike, sigma: ArrayLike) -> FloatArray:
    return np.exp(ln_logpdf(x, mu, sigma))


def ln_quantile(p: ArrayLike, mu: ArrayLike, sigma: ArrayLike) -> FloatArray:
    p, mu, sigma = _arr(p), _arr(mu), _arr(sigma)
    return np.exp(mu + sigma * special.ndtri(p))


def ln_mean(mu: ArrayLike, sigma: ArrayLike) -> FloatArray:
    mu, sigma = _arr(mu), _arr(sigma)
    return np.exp(mu + 0.5 * sigma * sigma)


# ---------------------------------------------------------------------------
# Censored and shifted gamma
# ---------------------------------------------------------------------------


def csg_cdf(
    x: ArrayLike, kappa: ArrayLike, theta: ArrayLike, delta: ArrayLike
) -> FloatArray:
    x, kappa, theta, delta = _arr(x), _arr(kappa), _arr(theta), _arr(delta)
    shifted = np.maximum(x + delta, 0.0) / theta
    return np.where(x < 0.0, 0.0, special.gammainc(kappa, shifted))


def csg_point_mass(kappa: ArrayLike, theta: ArrayLike, delta: ArrayLike) -> FloatArray:
    return special.gammainc(_arr(kappa), _arr(delta) / _arr(theta))


def csg_logpdf(
    x: ArrayLike, kappa: ArrayLike, theta: ArrayLike, delta: ArrayLike
) -> FloatArray:
    """Log density of the continuous part on (0, inf)."""
    x, kappa, theta, delta = _arr(x), _arr(kappa), _arr(theta), _arr(delta)
    z = np.maximum(x + delta, _TINY) / theta
    logd = (kappa - 1.0) * np.log(z) - z - special.gammaln(kappa) - np.log(theta)
    return np.where(x > 0.0, logd, -np.inf)


def csg_pdf(
    x: ArrayLike, kappa: ArrayLike, theta: ArrayLike, delta: ArrayLike
) -> FloatArray:
    return np.exp(csg_logpdf(x, kappa, theta, delta))


def csg_quantile(
    p: ArrayLike, kappa: ArrayLike, theta: ArrayLike, delta: ArrayLike
) -> FloatArray:
    p, kappa, theta, delta = _arr(p), _arr(kappa), _arr(theta), _arr(delta)
    mass = csg_point_mass(kappa, theta, delta)
    q = special.gammaincinv(kappa, p) * theta - delta
    return np.where(p <= mass, 0.0, np.maximum(q, 0.0))


def csg_mean(kappa: ArrayLike, theta: ArrayLike, delta: ArrayLike) -> FloatArray:
    """Mean of max(0, Z - delta) with Z ~ Gamma(kappa, theta)."""
    kappa, theta, delta = _arr(kappa), _arr(theta), _arr(delta)
    c = delta / theta
    return kappa * theta * special.gammaincc(kappa + 1.0, c) - delta * special.gammaincc(
        kappa, c
    )


# ---------------------------------------------------------------------------
# Generalized extreme value, left censored at zero
# ---------------------------------------------------------------------------


def gev_t(x: ArrayLike, mu: ArrayLike, sigma: ArrayLike, xi: ArrayLike) -> FloatArray:
    """The map t(x) with H(x) = exp(-t(x)); inf below, 0 above the support."""
    x, mu, sigma, xi = _arr(x), _arr(mu), _arr(sigma), _arr(xi)
    z = (x - mu) / sigma
    gumbel = np.abs(xi) < GUMBEL_SWITCH
    safe_xi = np.where(gumbel, 1.0, xi)
    arg = 1.0 + safe_xi * z
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        inside = np.power(np.maximum(arg, _TINY), -1.0 / safe_xi)
        outside = np.where(safe_xi > 0.0, np.inf, 0.0)
        general = np.where(arg > 0.0, inside, outside)
        return np.where(gumbel, np.exp(-z), general)


def gev_cdf(x: ArrayLike, mu: ArrayLike, sigma: ArrayLike, xi: ArrayLike) -> FloatArray:
    """Uncensored GEV CDF."""
    return np.exp(-gev_t(x, mu, sigma, xi))


def cgev_cdf(x: ArrayLike, mu: ArrayLike, sigma: ArrayLike, xi: ArrayLike) -> FloatArray:
    x = _arr(x)
    return np.where(x < 0.0, 0.0, gev_cdf(x, mu, sigma, xi))


def cgev_point_mass(mu: ArrayLike, sigma: ArrayLike, xi: ArrayLike) -> FloatArray:
    return gev_cdf(0.0, mu, sigma, xi)


def cgev_logpdf(
    x: ArrayLike, mu: ArrayLike, sigma: ArrayLike, xi: ArrayLike
) -> FloatArray:
    """Log density of the continuous part on (0, inf)."""
    x, sigma, xi = _arr(x), _arr(sigma), _arr(xi)
    t = gev_t(x, mu, sigma, xi)
    valid = np.isfinite(t) & (t > 0.0) & (x > 0.0)
    safe_t = np.where(valid, t, 1.0)
    logd = (xi + 1.0) * np.log(safe_t) - safe_t - np.log(sigma)
    return np.where(valid, logd, -np.inf)


def cgev_pdf(x: ArrayLike, mu: ArrayLike, sigma: ArrayLike, xi: ArrayLike) -> FloatArray:
    return np.exp(cgev_logpdf(x, mu, sigma, xi))


def gev_quantile(p: ArrayLike, mu: ArrayLike, sigma: ArrayLike, xi: ArrayLike) -> FloatArray:
    """Uncensored GEV quantile; expm1 keeps the xi -> 0 limit smooth."""
    p, mu, sigma, xi = _arr(p), _arr(mu), _arr(sigma), _arr(xi)
    log_t = np.log(-np.log(p))
    gumbel = np.abs(xi) < GUMBEL_SWITCH
    safe_xi = np.where(gumbel, 1.0, xi)
    general = np.expm1(-safe_xi * log_t) / safe_xi
    return mu + sigma * np.where(gumbel, -log_t, general)


def cgev_quantile(
    p: ArrayLike, mu: ArrayLike, sigma: ArrayLike, xi: ArrayLike
) -> FloatArray:
    p = _arr(p)
    mass = cgev_point_mass(mu, sigma, xi)
    q = gev_quantile(p, mu, sigma, xi)
    return np.where(p <= mass, 0.0, np.maximum(q, 0.0))


def gev_mean(mu: ArrayLike, sigma: ArrayLike, xi: ArrayLike) -> FloatArray:
    """Mean of the uncensored GEV; requires xi < 1."""
    mu, sigma, xi = _arr(mu), _arr(sigma), _arr(xi)
    gumbel = np.abs(xi) < GUMBEL_SWITCH
    safe_xi = np.where(gumbel, 0.5, xi)
    general = np.expm1(special.gammaln(1.0 - safe_xi)) / safe_xi
    return mu + sigma * np.where(gumbel, EULER_GAMMA, general)


def gev_negative_part(mu: ArrayLike, sigma: ArrayLike, xi: ArrayLike) -> FloatArray:
    """E[max(0, -X)] for X ~ GEV(mu, sigma, xi), i.e. the integral of H below 0."""
    mu, sigma, xi = _arr(mu), _arr(sigma), _arr(xi)
    t0 = gev_t(0.0, mu, sigma, xi)
    mass = np.exp(-t0)
    gumbel = np.abs(xi) < GUMBEL_SWITCH
    safe_xi = np.where(gumbel, 0.5, xi)
    a = 1.0 - safe_xi
    upper_gamma = special.gamma(a) * special.gammaincc(a, t0)
    general = -(mu - sigma / safe_xi) * mass - sigma / safe_xi * upper_gamma
    with np.errstate(divide="ignore", invalid="ignore"):
        safe_t0 = np.where((t0 > 0.0) & np.isfinite(t0), t0, 1.0)
        gumbel_value = -mu * mass + sigma * (
            np.log(safe_t0) * mass + special.exp1(safe_t0)
        )
    value = np.where(gumbel, gumbel_value, general)
    return np.where(mass > 0.0, np.maximum(value, 0.0), 0.0)


def cgev_mean(mu: ArrayLike, sigma: ArrayLike, xi: ArrayLike) -> FloatArray:
    """Mean of the censored law, E[max(0, X)] = E[X] + E[max(0, -X)]."""
    return gev_mean(mu, sigma, xi) + gev_negative_part(mu, sigma, xi)


# ---------------------------------------------------------------------------
# Beta
# ---------------------------------------------------------------------------


def beta_cdf(x: ArrayLike, alpha: ArrayLike, beta: ArrayLike) -> FloatArray:
    return special.betainc(_arr(alpha), _arr(beta), np.clip(_arr(x), 0.0, 1.0))


def beta_pdf(x: ArrayLike, alpha: ArrayLike, beta: ArrayLike) -> FloatArray:
    x, alpha, beta = _arr(x), _arr(alpha), _arr(beta)
    inside = (x > 0.0) & (x < 1.0)
    safe_x = np.where(inside, x, 0.5)
    logd = (
        (alpha - 1.0) * np.log(safe_x)
        + (beta - 1.0) * np.log1p(-safe_x)
        - special.betaln(alpha, beta)
    )
    return np.where(inside, np.exp(logd), 0.0)


def beta_quantile(p: ArrayLike, alpha: ArrayLike, beta: ArrayLike) -> FloatArray:
    return special.betaincinv(_arr(alpha), _arr(beta), _arr(p))
