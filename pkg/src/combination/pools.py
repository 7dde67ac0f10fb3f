"""Pooled predictive CDFs built from two component laws.

All pools share the same skeleton: the linear pool P = omega*G + (1-omega)*H
is evaluated, optionally at a rescaled argument (SLP), and then passed
through a beta transform (BLP) or a beta mixture (BM_L).
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike
from scipy import special

from src.combination.models import BetaComponent, CombinationMethod, CombinationParams
from src.distributions.kernels import FloatArray
from src.distributions.models import (
    CensoredGevParams,
    CsgParams,
    LogNormalParams,
    TruncatedNormalParams,
)
from src.errors import ParameterDomainError
from src.scoring.models import IntegrationGrid, PredictiveCdf, ScoreKind, ScoreValue
from src.scoring.rules import (
    CdfLike,
    as_cdf_function,
    crps_closed,
    crps_cross_term,
    crps_numeric,
    default_grid,
)

CLOSED_FORM_LAWS = (TruncatedNormalParams, LogNormalParams, CsgParams, CensoredGevParams)

# Quantile levels beyond 1 - 1e-12 are not representable in double precision
MIN_COMPONENT_TAIL = 1e-12


def _check_weight(omega: float) -> None:
    if not 0.0 <= omega <= 1.0:
        raise ParameterDomainError(f"pool weight must lie in [0, 1], got {omega}")


def _check_positive(**values: float) -> None:
    for name, value in values.items():
        if not value > 0.0:
            raise ParameterDomainError(f"{name} must be positive, got {value}")


def beta_transform(
    p: ArrayLike,
    components: Sequence[BetaComponent] | None = None,
    alpha: float = 1.0,
    beta: float = 1.0,
) -> FloatArray:
    """B_{alpha,beta}(p), or sum_l w_l B_{alpha_l,beta_l}(p) for a mixture."""
    p = np.clip(np.asarray(p, dtype=np.float64), 0.0, 1.0)
    if components:
        return sum(
            (comp.weight * special.betainc(comp.alpha, comp.beta, p) for comp in components),
            np.zeros_like(p),
        )
    if alpha == 1.0 and beta == 1.0:
        return p
    return special.betainc(alpha, beta, p)


def transform_pool(params: CombinationParams, lp_values: ArrayLike) -> FloatArray:
    """Apply the method's outer transform to linear-pool values."""
    match params.method:
        case CombinationMethod.BLP:
            return beta_transform(lp_values, alpha=params.alpha, beta=params.beta)
        case CombinationMethod.BML:
            return beta_transform(lp_values, params.components)
    return np.asarray(lp_values, dtype=np.float64)


def component_tail(params: CombinationParams, tail: float) -> float:
    """Tail mass each component may leave so the pool leaves at most ``tail``.

    A beta transform with beta < 1 thickens the upper tail: the pooled law
    keeps 1 - B(1 - u) above a point where the linear pool keeps u, so u
    solves I_u(beta, alpha) = tail. A mixture takes the smallest u over its
    components. Floored at ``MIN_COMPONENT_TAIL``.
    """
    match params.method:
        case CombinationMethod.BLP:
            shapes = [(params.alpha, params.beta)]
        case CombinationMethod.BML:
            shapes = [(comp.alpha, comp.beta) for comp in params.components]
        case _:
            return tail
    u = min(float(special.betaincinv(b, a, tail)) for a, b in shapes)
    return min(tail, max(u, MIN_COMPONENT_TAIL))


def lp_cdf(G: CdfLike, H: CdfLike, omega: float, x: ArrayLike) -> FloatArray:
    """Linear pool omega*G(x) + (1 - omega)*H(x).

    Raises:
        ParameterDomainError: If omega lies outside [0, 1]
    """
    _check_weight(omega)
    g, h = as_cdf_function(G), as_cdf_function(H)
    return omega * g(x) + (1.0 - omega) * h(x)


def slp_cdf(G: CdfLike, H: CdfLike, omega: float, c: float, x: ArrayLike) -> FloatArray:
    """Spread-adjusted linear pool omega*G(x/c) + (1 - omega)*H(x/c).

    Raises:
        ParameterDomainError: If omega lies outside [0, 1] or c <= 0
    """
    _check_positive(c=c)
    return lp_cdf(G, H, omega, np.asarray(x, dtype=np.float64) / c)


def blp_cdf(
    G: CdfLike, H: CdfLike, omega: float, alpha: float, beta: float, x: ArrayLike
) -> FloatArray:
    """Beta-transformed linear pool B_{alpha,beta}(omega*G(x) + (1 - omega)*H(x))."""
    _check_positive(alpha=alpha, beta=beta)
    return beta_transform(lp_cdf(G, H, omega, x), alpha=alpha, beta=beta)


def bml_cdf(
    G: CdfLike,
    H: CdfLike,
    omega: float,
    components: Sequence[BetaComponent],
    x: ArrayLike,
) -> FloatArray:
    """Beta mixture sum_l w_l B_{alpha_l,beta_l} of the linear pool.

    Raises:
        ParameterDomainError: If the mixture weights do not sum to one
    """
    if not components:
        raise ParameterDomainError("beta mixture needs at least one component")
    total = sum(comp.weight for comp in components)
    if abs(total - 1.0) > 1e-9:
        raise ParameterDomainError(f"beta mixture weights must sum to 1, got {total}")
    return beta_transform(lp_cdf(G, H, omega, x), components)


def pool_cdf(params: CombinationParams, G: CdfLike, H: CdfLike, x: ArrayLike) -> FloatArray:
    """Dispatch on ``params.method``; LP and LP-PI share the linear pool."""
    match params.method:
        case CombinationMethod.LP | CombinationMethod.LP_PI:
            return lp_cdf(G, H, params.omega, x)
        case CombinationMethod.SLP:
            return slp_cdf(G, H, params.omega, params.c, x)
        case CombinationMethod.BLP:
            return blp_cdf(G, H, params.omega, params.alpha, params.beta, x)
        case CombinationMethod.BML:
            return bml_cdf(G, H, params.omega, params.components, x)
    raise ValueError(f"unknown method {params.method}")


def weighted_pool_cdf(
    components: Sequence[CdfLike], weights: Sequence[float], x: ArrayLike
) -> FloatArray:
    """r-component linear pool sum_i w_i F_i(x).

    Raises:
        ParameterDomainError: If the weights are not a simplex vector of
            matching length
    """
    if len(components) != len(weights):
        raise ParameterDomainError("one weight per pooled component is required")
    w = np.asarray(weights, dtype=np.float64)
    if np.any(w < 0.0) or abs(w.sum() - 1.0) > 1e-9:
        raise ParameterDomainError(f"pool weights must lie on the simplex, got {weights}")
    x = np.asarray(x, dtype=np.float64)
    return sum(
        (wi * as_cdf_function(F)(x) for wi, F in zip(w, components, strict=True)),
        np.zeros_like(x),
    )


@dataclass(frozen=True)
class PooledCdf:
    """A pooled predictive law; satisfies the ``PredictiveCdf`` protocol.

    Attributes:
        params: Pooling method and parameters
        g: First component law
        h: Second component law
    """

    params: CombinationParams
    g: PredictiveCdf
    h: PredictiveCdf

    @property
    def method(self) -> CombinationMethod:
        return self.params.method

    def cdf(self, x: ArrayLike) -> FloatArray:
        return pool_cdf(self.params, self.g, self.h, x)

    def point_mass_at_zero(self) -> float:
        """Pooled atom, computed directly from the component atoms."""
        return float(self.cdf(0.0))

    def support_upper(self, tail: float) -> float:
        """Covers the component tails, stretched by the beta transform if any."""
        tail = component_tail(self.params, tail)
        upper = max(self.g.support_upper(tail), self.h.support_upper(tail))
        return upper * self.params.c if self.method == CombinationMethod.SLP else upper


def _component_crps(d: PredictiveCdf, x: float, grid: IntegrationGrid) -> float:
    if isinstance(d, CLOSED_FORM_LAWS):
        return crps_closed(d, x).value
    return crps_numeric(d, x, grid).value


def pooled_crps(
    pool: PooledCdf, x: float, grid: IntegrationGrid | None = None
) -> ScoreValue:
    """CRPS of a pooled CDF.

    Linear pools use the exact quadratic expansion
    omega^2 CRPS(G) + (1-omega)^2 CRPS(H) + 2 omega (1-omega) M(G, H)
    with closed-form component scores and a quadrature cross term M; all
    other pools are integrated numerically on the split form.

    Raises:
        GridError: If x lies outside the integration grid
    """
    grid = grid or default_grid(pool, x)
    if not pool.method.is_linear:
        return crps_numeric(pool, x, grid)
    w = pool.params.omega
    value = w * w * _component_crps(pool.g, x, grid) + (1.0 - w) ** 2 * _component_crps(
        pool.h, x, grid
    )
    if 0.0 < w < 1.0:
        value += 2.0 * w * (1.0 - w) * crps_cross_term(pool.g, pool.h, x, grid)
    return ScoreValue(value=max(value, 0.0), kind=ScoreKind.CRPS)
