"""Parametric predictive laws used by the EMOS models and their pools."""

from __future__ import annotations

from enum import Enum
from typing import Annotated, Literal, Union

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import optimize

from src.distributions import kernels
from src.distributions.kernels import FloatArray
from src.errors import ParameterDomainError

# Admissible GEV shape interval for a positive skewness and an existing mean
GEV_SHAPE_MIN = -0.278
GEV_SHAPE_MAX = 1.0


class Family(str, Enum):
    """Parametric family tags.

    Attributes:
        TRUNCATED_NORMAL: Normal law truncated to [0, inf)
        LOG_NORMAL: Log-normal law
        CENSORED_SHIFTED_GAMMA: Shifted gamma law left censored at zero
        CENSORED_GEV: Generalized extreme value law left censored at zero
        BETA: Beta law on [0, 1], used by the beta-transformed pools
        MIXTURE: Finite mixture of the families above
    """

    TRUNCATED_NORMAL = "tn"
    LOG_NORMAL = "ln"
    CENSORED_SHIFTED_GAMMA = "csg"
    CENSORED_GEV = "gev"
    BETA = "beta"
    MIXTURE = "mixture"


def _check_probability(p: ArrayLike) -> FloatArray:
    arr = np.asarray(p, dtype=np.float64)
    if np.any((arr <= 0.0) | (arr >= 1.0)) or np.any(np.isnan(arr)):
        raise ParameterDomainError("quantile levels must lie strictly inside (0, 1)")
    return arr


class _Distribution(BaseModel):
    """Shared behaviour of all predictive laws.

    Subclasses implement ``cdf``, ``pdf``, ``_quantile``, ``mean`` and
    ``point_mass_at_zero``; everything else is derived here.
    """

    model_config = ConfigDict(frozen=True)

    def cdf(self, x: ArrayLike) -> FloatArray:
        raise NotImplementedError

    def pdf(self, x: ArrayLike) -> FloatArray:
        """Density of the absolutely continuous part; zero at the atom."""
        raise NotImplementedError

    def _quantile(self, p: FloatArray) -> FloatArray:
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def point_mass_at_zero(self) -> float:
        return 0.0

    def quantile(self, p: ArrayLike) -> FloatArray:
        """Generalized inverse of the CDF.

        Raises:
            ParameterDomainError: If any level lies outside (0, 1)
        """
        return self._quantile(_check_probability(p))

    def generalized_density(self, x: ArrayLike) -> FloatArray:
        """Point mass at x == 0 for censored laws, continuous density elsewhere."""
        arr = np.asarray(x, dtype=np.float64)
        mass = self.point_mass_at_zero()
        if mass == 0.0:
            return self.pdf(arr)
        return np.where(arr == 0.0, mass, self.pdf(arr))

    def support_upper(self, tail: float) -> float:
        """Quantile at level 1 - tail, used as the upper integration bound."""
        return float(self.quantile(1.0 - tail))


class TruncatedNormalParams(_Distribution):
    """Normal law N(mu, sigma^2) truncated to [0, inf).

    Attributes:
        mu: Location in the units of the variable
        sigma: Scale, strictly positive
    """

    family: Literal[Family.TRUNCATED_NORMAL] = Family.TRUNCATED_NORMAL
    mu: float = Field(allow_inf_nan=False)
    sigma: float = Field(gt=0.0, allow_inf_nan=False)

    def cdf(self, x: ArrayLike) -> FloatArray:
        return kernels.tn_cdf(x, self.mu, self.sigma)

    def pdf(self, x: ArrayLike) -> FloatArray:
        return kernels.tn_pdf(x, self.mu, self.sigma)

    def _quantile(self, p: FloatArray) -> FloatArray:
        return kernels.tn_quantile(p, self.mu, self.sigma)

    def mean(self) -> float:
        return float(kernels.tn_mean(self.mu, self.sigma))


class LogNormalParams(_Distribution):
    """Log-normal law with log-location mu and shape sigma; median exp(mu)."""

    family: Literal[Family.LOG_NORMAL] = Family.LOG_NORMAL
    mu: float = Field(allow_inf_nan=False)
    sigma: float = Field(gt=0.0, allow_inf_nan=False)

    def cdf(self, x: ArrayLike) -> FloatArray:
        return kernels.ln_cdf(x, self.mu, self.sigma)

    def pdf(self, x: ArrayLike) -> FloatArray:
        return kernels.ln_pdf(x, self.mu, self.sigma)

    def _quantile(self, p: FloatArray) -> FloatArray:
        return kernels.ln_quantile(p, self.mu, self.sigma)

    def mean(self) -> float:
        return float(kernels.ln_mean(self.mu, self.sigma))


class CsgParams(_Distribution):
    """Gamma(kappa, theta) shifted left by delta and censored at zero.

    The atom at zero carries mass G(delta | kappa, theta).
    """

    family: Literal[Family.CENSORED_SHIFTED_GAMMA] = Family.CENSORED_SHIFTED_GAMMA
    kappa: float = Field(gt=0.0, allow_inf_nan=False)
    theta: float = Field(gt=0.0, allow_inf_nan=False)
    delta: float = Field(gt=0.0, allow_inf_nan=False)

    def cdf(self, x: ArrayLike) -> FloatArray:
        return kernels.csg_cdf(x, self.kappa, self.theta, self.delta)

    def pdf(self, x: ArrayLike) -> FloatArray:
        return kernels.csg_pdf(x, self.kappa, self.theta, self.delta)

    def _quantile(self, p: FloatArray) -> FloatArray:
        return kernels.csg_quantile(p, self.kappa, self.theta, self.delta)

    def mean(self) -> float:
        return float(kernels.csg_mean(self.kappa, self.theta, self.delta))

    def point_mass_at_zero(self) -> float:
        return float(kernels.csg_point_mass(self.kappa, self.theta, self.delta))


class CensoredGevParams(_Distribution):
    """GEV(mu, sigma, xi) left censored at zero."""

    family: Literal[Family.CENSORED_GEV] = Family.CENSORED_GEV
    mu: float = Field(allow_inf_nan=False)
    sigma: float = Field(gt=0.0, allow_inf_nan=False)
    xi: float = Field(allow_inf_nan=False)

    @property
    def has_mean(self) -> bool:
        return self.xi < GEV_SHAPE_MAX

    def cdf(self, x: ArrayLike) -> FloatArray:
        return kernels.cgev_cdf(x, self.mu, self.sigma, self.xi)

    def pdf(self, x: ArrayLike) -> FloatArray:
        return kernels.cgev_pdf(x, self.mu, self.sigma, self.xi)

    def _quantile(self, p: FloatArray) -> FloatArray:
        return kernels.cgev_quantile(p, self.mu, self.sigma, self.xi)

    def mean(self) -> float:
        if not self.has_mean:
            raise ParameterDomainError(f"GEV mean is undefined for xi={self.xi}")
        return float(kernels.cgev_mean(self.mu, self.sigma, self.xi))

    def point_mass_at_zero(self) -> float:
        return float(kernels.cgev_point_mass(self.mu, self.sigma, self.xi))


class BetaParams(_Distribution):
    """Beta law on [0, 1]; B(1, 1) is the identity map on the unit interval."""

    family: Literal[Family.BETA] = Family.BETA
    alpha: float = Field(gt=0.0, allow_inf_nan=False)
    beta: float = Field(gt=0.0, allow_inf_nan=False)

    def cdf(self, x: ArrayLike) -> FloatArray:
        return kernels.beta_cdf(x, self.alpha, self.beta)

    def pdf(self, x: ArrayLike) -> FloatArray:
        return kernels.beta_pdf(x, self.alpha, self.beta)

    def _quantile(self, p: FloatArray) -> FloatArray:
        return kernels.beta_quantile(p, self.alpha, self.beta)

    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)


ComponentSpec = Annotated[
    Union[
        TruncatedNormalParams,
        LogNormalParams,
        CsgParams,
        CensoredGevParams,
        BetaParams,
    ],
    Field(discriminator="family"),
]


class MixtureSpec(_Distribution):
    """Finite mixture sum_i w_i F_i of component laws.

    Used for the jointly estimated TN-LN mixture and for the CSG-GEV
    generalized density evaluator.

    Attributes:
        components: Component laws (at least one)
        weights: Simplex weights, one per component
    """

    family: Literal[Family.MIXTURE] = Family.MIXTURE
    components: list[ComponentSpec] = Field(min_length=1)
    weights: list[float] = Field(min_length=1)

    @model_validator(mode="after")
    def _check_weights(self) -> MixtureSpec:
        if len(self.weights) != len(self.components):
            raise ValueError("one weight per mixture component is required")
        if any(w < 0.0 or w > 1.0 for w in self.weights):
            raise ValueError("mixture weights must lie in [0, 1]")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError("mixture weights must sum to 1")
        return self

    def cdf(self, x: ArrayLike) -> FloatArray:
        return sum(
            (w * c.cdf(x) for w, c in zip(self.weights, self.components, strict=True)),
            np.zeros_like(np.asarray(x, dtype=np.float64)),
        )

    def pdf(self, x: ArrayLike) -> FloatArray:
        return sum(
            (w * c.pdf(x) for w, c in zip(self.weights, self.components, strict=True)),
            np.zeros_like(np.asarray(x, dtype=np.float64)),
        )

    def mean(self) -> float:
        return sum(
            w * c.mean() for w, c in zip(self.weights, self.components, strict=True)
        )

    def point_mass_at_zero(self) -> float:
        return sum(
            w * c.point_mass_at_zero()
            for w, c in zip(self.weights, self.components, strict=True)
        )

    def _quantile(self, p: FloatArray) -> FloatArray:
        mass = self.point_mass_at_zero()
        flat = np.atleast_1d(p).ravel()
        out = np.empty_like(flat)
        for i, level in enumerate(flat):
            if level <= mass:
                out[i] = 0.0
                continue
            upper = max(float(c.quantile(level)) for c in self.components)
            lower = min(float(c.quantile(level)) for c in self.components)
            if upper == lower:
                out[i] = upper
                continue
            out[i] = optimize.brentq(
                lambda y, q=level: float(self.cdf(y)) - q, lower, upper, xtol=1e-13
            )
        return out.reshape(np.shape(p))


DistributionSpec = Annotated[
    Union[
        TruncatedNormalParams,
        LogNormalParams,
        CsgParams,
        CensoredGevParams,
        BetaParams,
        MixtureSpec,
    ],
    Field(discriminator="family"),
]
