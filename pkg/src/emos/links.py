"""EMOS link functions mapping ensemble statistics to predictive laws.

Each family has a vectorized link working on whole batches, used inside the
optimizers, and a single-case wrapper returning a validated distribution.
Location equations use per-group member sums, so a group of exchangeable
members shares one coefficient.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from src.distributions import kernels as dk
from src.distributions.models import (
    GEV_SHAPE_MAX,
    GEV_SHAPE_MIN,
    CensoredGevParams,
    CsgParams,
    DistributionSpec,
    LogNormalParams,
    MixtureSpec,
    TruncatedNormalParams,
)
from src.distributions.transforms import (
    gamma_from_moments,
    gev_location,
    lognormal_from_moments,
)
from src.emos.models import (
    EmosCoefficients,
    EmosFamily,
    EnsembleForecast,
    EnsembleStats,
    ForecastBatch,
)
from src.errors import (
    DegenerateEnsembleError,
    MissingCoefficientsError,
    ParameterDomainError,
)
from src.scoring import kernels as sk

logger = logging.getLogger(__name__)

FloatArray = dk.FloatArray


@dataclass(frozen=True)
class EnsembleDesign:
    """Regressors of a batch, computed once per training window.

    Attributes:
        group_sums: Per-group member sums, shape (n, K)
        mean: Ensemble mean, shape (n,)
        variance: Ensemble variance S^2 over all members, shape (n,)
        zero_fraction: Share of zero members p0, shape (n,)
        mean_abs_diff: Mean absolute difference MD, shape (n,)
    """

    group_sums: FloatArray
    mean: FloatArray
    variance: FloatArray
    zero_fraction: FloatArray
    mean_abs_diff: FloatArray

    @classmethod
    def from_batch(cls, batch: ForecastBatch) -> EnsembleDesign:
        mean, variance, zero_fraction, mad = member_stats(batch.members)
        return cls(
            group_sums=batch.layout.group_sums(batch.members),
            mean=mean,
            variance=variance,
            zero_fraction=zero_fraction,
            mean_abs_diff=mad,
        )


def member_stats(
    members: ArrayLike,
) -> tuple[FloatArray, FloatArray, FloatArray, FloatArray]:
    """Mean, variance, zero fraction and mean absolute difference per row.

    Raises:
        DegenerateEnsembleError: If rows have fewer than two members
    """
    members = np.sort(np.asarray(members, dtype=np.float64), axis=-1)
    m = members.shape[-1]
    if m < 2:
        raise DegenerateEnsembleError(f"ensemble needs at least two members, got {m}")
    ranks = 2.0 * np.arange(1, m + 1) - m - 1.0
    mad = 2.0 * np.sum(members * ranks, axis=-1) / (m * m)
    return (
        members.mean(axis=-1),
        members.var(axis=-1, ddof=1),
        np.mean(members == 0.0, axis=-1),
        mad,
    )


def ensemble_stats(e: EnsembleForecast) -> EnsembleStats:
    """Summary statistics of one ensemble.

    The mean absolute difference runs over all M^2 ordered pairs including
    self-pairs, so members (0, 2) give MD = (0 + 2 + 2 + 0) / 4 = 1.

    Raises:
        DegenerateEnsembleError: If the ensemble has fewer than two members
    """
    mean, variance, p0, mad = member_stats(e.values)
    return EnsembleStats(
        mean=float(mean),
        variance=float(variance),
        zero_fraction=float(p0),
        mean_abs_diff=float(mad),
    )


def _location(location: ArrayLike, group_sums: FloatArray) -> FloatArray:
    coef = np.asarray(location, dtype=np.float64)
    if coef.shape[-1] != group_sums.shape[-1] + 1:
        raise ParameterDomainError(
            f"expected {group_sums.shape[-1] + 1} location coefficients, "
            f"got {coef.shape[-1]}"
        )
    return coef[..., 0] + group_sums @ coef[1:]


# Vectorized links; these return raw arrays and may produce values outside the
# parameter domain, which the optimizers turn into penalties.


def tn_link(
    location: ArrayLike, spread: ArrayLike, design: EnsembleDesign
) -> tuple[FloatArray, FloatArray]:
    """Location mu and variance sigma^2 = b0 + b1 S^2."""
    b0, b1 = spread
    return _location(location, design.group_sums), b0 + b1 * design.variance


def ln_link(
    location: ArrayLike, spread: ArrayLike, design: EnsembleDesign
) -> tuple[FloatArray, FloatArray]:
    """Mean m and variance v = b0 + b1 S^2 of the log-normal law."""
    b0, b1 = spread
    return _location(location, design.group_sums), b0 + b1 * design.variance


def csg_link(
    location: ArrayLike, spread: ArrayLike, design: EnsembleDesign
) -> tuple[FloatArray, FloatArray]:
    """Mean m and variance s^2 = b0 + b1 * ensemble mean of the gamma law."""
    b0, b1 = spread
    return _location(location, design.group_sums), b0 + b1 * design.mean


def gev_link(
    location: ArrayLike, spread: ArrayLike, nu: float, design: EnsembleDesign
) -> tuple[FloatArray, FloatArray]:
    """Mean m = a0 + sum a_k f_k + nu p0 and scale sigma = b0 + b1 MD."""
    b0, b1 = spread
    mean = _location(location, design.group_sums) + nu * design.zero_fraction
    return mean, b0 + b1 * design.mean_abs_diff


@dataclass(frozen=True)
class PredictiveBatch:
    """Predictive laws of one family for a whole batch, as parameter arrays.

    ``params`` maps parameter names to arrays of shape (n,). Evaluation
    methods accept ``x`` of shape (n,) or (n, g) and broadcast row-wise.
    """

    family: EmosFamily
    params: dict[str, FloatArray]

    def __len__(self) -> int:
        return len(next(iter(self.params.values())))

    def _p(self, name: str, x: FloatArray) -> FloatArray:
        value = self.params[name]
        return value[:, None] if x.ndim == 2 else value

    def cdf(self, x: ArrayLike) -> FloatArray:
        x = np.asarray(x, dtype=np.float64)
        p = self._p
        match self.family:
            case EmosFamily.TN:
                return dk.tn_cdf(x, p("mu", x), p("sigma", x))
            case EmosFamily.LN:
                return dk.ln_cdf(x, p("mu", x), p("sigma", x))
            case EmosFamily.CSG:
                return dk.csg_cdf(x, p("kappa", x), p("theta", x), p("delta", x))
            case EmosFamily.GEV:
                return dk.cgev_cdf(x, p("mu", x), p("sigma", x), p("xi", x))
            case EmosFamily.TNLN:
                w = p("weight", x)
                return w * dk.tn_cdf(x, p("mu", x), p("sigma", x)) + (1.0 - w) * dk.ln_cdf(
                    x, p("ln_mu", x), p("ln_sigma", x)
                )
        raise ValueError(f"unknown family {self.family}")

    def generalized_density(self, x: ArrayLike) -> FloatArray:
        x = np.asarray(x, dtype=np.float64)
        p = self._p
        match self.family:
            case EmosFamily.TN:
                return dk.tn_pdf(x, p("mu", x), p("sigma", x))
            case EmosFamily.LN:
                return dk.ln_pdf(x, p("mu", x), p("sigma", x))
            case EmosFamily.CSG:
                args = (p("kappa", x), p("theta", x), p("delta", x))
                return np.where(x == 0.0, dk.csg_point_mass(*args), dk.csg_pdf(x, *args))
            case EmosFamily.GEV:
                args = (p("mu", x), p("sigma", x), p("xi", x))
                return np.where(x == 0.0, dk.cgev_point_mass(*args), dk.cgev_pdf(x, *args))
            case EmosFamily.TNLN:
                w = p("weight", x)
                return w * dk.tn_pdf(x, p("mu", x), p("sigma", x)) + (1.0 - w) * dk.ln_pdf(
                    x, p("ln_mu", x), p("ln_sigma", x)
                )
        raise ValueError(f"unknown family {self.family}")

    def logs(self, y: ArrayLike) -> FloatArray:
        """LogS per case; zero density gives +inf."""
        with np.errstate(divide="ignore"):
            return -np.log(self.generalized_density(y))

    def crps(self, y: ArrayLike) -> FloatArray:
        """Closed-form CRPS per case (not available for the TN-LN mixture)."""
        q = self.params
        match self.family:
            case EmosFamily.TN:
                return sk.tn_crps(y, q["mu"], q["sigma"])
            case EmosFamily.LN:
                return sk.ln_crps(y, q["mu"], q["sigma"])
            case EmosFamily.CSG:
                return sk.csg_crps(y, q["kappa"], q["theta"], q["delta"])
            case EmosFamily.GEV:
                return sk.cgev_crps(y, q["mu"], q["sigma"], q["xi"])
        raise NotImplementedError(f"no closed-form CRPS for {self.family.value}")

    def upper_quantile(self, tail: float) -> FloatArray:
        """Quantile at level 1 - tail per case; an upper bound for mixtures."""
        level = 1.0 - tail
        q = self.params
        match self.family:
            case EmosFamily.TN:
                return dk.tn_quantile(level, q["mu"], q["sigma"])
            case EmosFamily.LN:
                return dk.ln_quantile(level, q["mu"], q["sigma"])
            case EmosFamily.CSG:
                return dk.csg_quantile(level, q["kappa"], q["theta"], q["delta"])
            case EmosFamily.GEV:
                return dk.cgev_quantile(level, q["mu"], q["sigma"], q["xi"])
            case EmosFamily.TNLN:
                return np.maximum(
                    dk.tn_quantile(level, q["mu"], q["sigma"]),
                    dk.ln_quantile(level, q["ln_mu"], q["ln_sigma"]),
                )
        raise ValueError(f"unknown family {self.family}")

    def point_mass_at_zero(self) -> FloatArray:
        return self.cdf(np.zeros(len(self)))

    def take(self, rows: slice | NDArray[np.intp]) -> PredictiveBatch:
        return PredictiveBatch(self.family, {k: v[rows] for k, v in self.params.items()})

    def is_valid(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.params.values()) and all(
            np.all(self.params[k] > 0.0)
            for k in ("sigma", "kappa", "theta", "delta", "ln_sigma")
            if k in self.params
        )

    def spec(self, i: int) -> DistributionSpec:
        """Validated distribution of case ``i``."""
        q = {k: float(v[i]) for k, v in self.params.items()}
        match self.family:
            case EmosFamily.TN:
                return TruncatedNormalParams(mu=q["mu"], sigma=q["sigma"])
            case EmosFamily.LN:
                return LogNormalParams(mu=q["mu"], sigma=q["sigma"])
            case EmosFamily.CSG:
                return CsgParams(kappa=q["kappa"], theta=q["theta"], delta=q["delta"])
            case EmosFamily.GEV:
                return CensoredGevParams(mu=q["mu"], sigma=q["sigma"], xi=q["xi"])
            case EmosFamily.TNLN:
                return MixtureSpec(
                    components=[
                        TruncatedNormalParams(mu=q["mu"], sigma=q["sigma"]),
                        LogNormalParams(mu=q["ln_mu"], sigma=q["ln_sigma"]),
                    ],
                    weights=[q["weight"], 1.0 - q["weight"]],
                )
        raise ValueError(f"unknown family {self.family}")


def predictive_arrays(c: EmosCoefficients, design: EnsembleDesign) -> PredictiveBatch:
    """Apply the link of ``c.family`` to a whole design without validation.

    Entries outside the parameter domain come back as NaN; callers check
    ``PredictiveBatch.is_valid``.
    """
    with np.errstate(invalid="ignore", divide="ignore"):
        match c.family:
            case EmosFamily.TN:
                mu, var = tn_link(c.location, c.spread, design)
                return PredictiveBatch(
                    c.family, {"mu": mu, "sigma": np.sqrt(np.where(var > 0, var, np.nan))}
                )
            case EmosFamily.LN:
                return PredictiveBatch(c.family, _ln_params(c, design))
            case EmosFamily.CSG:
                m, s2 = csg_link(c.location, c.spread, design)
                ok = (m > 0.0) & (s2 > 0.0)
                kappa, theta = gamma_from_moments(
                    np.where(ok, m, np.nan), np.where(ok, s2, np.nan)
                )
                delta = np.full_like(m, c.shift if c.shift is not None else np.nan)
                return PredictiveBatch(
                    c.family, {"kappa": kappa, "theta": theta, "delta": delta}
                )
            case EmosFamily.GEV:
                xi = float(c.shape) if c.shape is not None else np.nan
                m, sigma = gev_link(c.location, c.spread, c.nu or 0.0, design)
                sigma = np.where(sigma > 0.0, sigma, np.nan)
                return PredictiveBatch(
                    c.family,
                    {
                        "mu": gev_location(m, sigma, xi),
                        "sigma": sigma,
                        "xi": np.full_like(m, xi),
                    },
                )
            case EmosFamily.TNLN:
                if c.secondary is None or c.weight is None:
                    raise ParameterDomainError("TN-LN coefficients are incomplete")
                mu, var = tn_link(c.location, c.spread, design)
                ln = _ln_params(c.secondary, design)
                return PredictiveBatch(
                    c.family,
                    {
                        "mu": mu,
                        "sigma": np.sqrt(np.where(var > 0, var, np.nan)),
                        "ln_mu": ln["mu"],
                        "ln_sigma": ln["sigma"],
                        "weight": np.full_like(mu, c.weight),
                    },
                )
    raise ValueError(f"unknown family {c.family}")


def _ln_params(c: EmosCoefficients, design: EnsembleDesign) -> dict[str, FloatArray]:
    m, v = ln_link(c.location, c.spread, design)
    ok = (m > 0.0) & (v > 0.0)
    mu, sigma = lognormal_from_moments(np.where(ok, m, np.nan), np.where(ok, v, np.nan))
    return {"mu": mu, "sigma": sigma}


def batch_predictive(c: EmosCoefficients, batch: ForecastBatch) -> PredictiveBatch:
    """Predictive laws for every case of ``batch``.

    Raises:
        ParameterDomainError: If the link leaves the parameter domain for any case
    """
    predictive = predictive_arrays(c, EnsembleDesign.from_batch(batch))
    if not predictive.is_valid():
        raise ParameterDomainError(
            f"{c.family.value} link leaves the parameter domain on this batch"
        )
    return predictive


def history_predictive(
    coefficients: Mapping[np.datetime64, EmosCoefficients], batch: ForecastBatch
) -> PredictiveBatch:
    """Predictive laws where each case uses the coefficients of its own day.

    Raises:
        MissingCoefficientsError: If some day of ``batch`` has no coefficients
        ParameterDomainError: If a link leaves the parameter domain
    """
    days = batch.unique_dates
    missing = [str(day) for day in days if day not in coefficients]
    if missing:
        raise MissingCoefficientsError(
            f"no component coefficients for {len(missing)} day(s): {', '.join(missing[:5])}"
        )
    params: dict[str, FloatArray] = {}
    family: EmosFamily | None = None
    for day in days:
        mask = batch.dates == day
        part = predictive_arrays(
            coefficients[day], EnsembleDesign.from_batch(batch.select(mask))
        )
        if family is None:
            family = part.family
            params = {k: np.full(len(batch), np.nan) for k in part.params}
        elif part.family != family:
            raise ParameterDomainError("coefficient history mixes families")
        for name, values in part.params.items():
            params[name][mask] = values
    assert family is not None
    predictive = PredictiveBatch(family, params)
    if not predictive.is_valid():
        raise ParameterDomainError(
            f"{family.value} link leaves the parameter domain on this batch"
        )
    return predictive


def _require(c: EmosCoefficients, family: EmosFamily) -> None:
    if c.family != family:
        raise ParameterDomainError(
            f"expected {family.value} coefficients, got {c.family.value}"
        )


def tn_predictive(c: EmosCoefficients, e: EnsembleForecast) -> TruncatedNormalParams:
    """Truncated normal N0(a0 + sum_k a_k F_k, b0 + b1 S^2).

    F_k is the sum of the members in group k.

    Raises:
        ParameterDomainError: If b0 + b1 S^2 <= 0
    """
    _require(c, EmosFamily.TN)
    mu, var = tn_link(c.location, c.spread, _design_of(e))
    if not var[0] > 0.0:
        raise ParameterDomainError(f"TN variance must be positive, got {var[0]}")
    return TruncatedNormalParams(mu=float(mu[0]), sigma=float(np.sqrt(var[0])))


def ln_predictive(c: EmosCoefficients, e: EnsembleForecast) -> LogNormalParams:
    """Log-normal law whose mean and variance follow the linear links.

    Raises:
        ParameterDomainError: If the linked mean or variance is not positive
    """
    _require(c, EmosFamily.LN)
    m, v = ln_link(c.location, c.spread, _design_of(e))
    if not (m[0] > 0.0 and v[0] > 0.0):
        raise ParameterDomainError(
            f"LN link needs m > 0 and v > 0, got m={m[0]}, v={v[0]}"
        )
    mu, sigma = lognormal_from_moments(m[0], v[0])
    return LogNormalParams(mu=float(mu), sigma=float(sigma))


def csg_predictive(c: EmosCoefficients, e: EnsembleForecast) -> CsgParams:
    """Censored shifted gamma law with mean a0 + sum a_k F_k and variance b0 + b1 f̄.

    Raises:
        ParameterDomainError: If the linked mean or variance is not positive
    """
    _require(c, EmosFamily.CSG)
    m, s2 = csg_link(c.location, c.spread, _design_of(e))
    if not (m[0] > 0.0 and s2[0] > 0.0):
        raise ParameterDomainError(
            f"CSG link needs m > 0 and s2 > 0, got m={m[0]}, s2={s2[0]}"
        )
    kappa, theta = gamma_from_moments(m[0], s2[0])
    assert c.shift is not None
    return CsgParams(kappa=float(kappa), theta=float(theta), delta=c.shift)


def gev_predictive(c: EmosCoefficients, e: EnsembleForecast) -> CensoredGevParams:
    """Censored GEV law with mean a0 + sum a_k F_k + nu p0 and scale b0 + b1 MD.

    Raises:
        ParameterDomainError: If the scale is not positive or the shape lies
            outside the interval where the mean exists with positive skewness
    """
    _require(c, EmosFamily.GEV)
    assert c.shape is not None and c.nu is not None
    if not GEV_SHAPE_MIN < c.shape < GEV_SHAPE_MAX:
        raise ParameterDomainError(
            f"GEV shape must lie in ({GEV_SHAPE_MIN}, {GEV_SHAPE_MAX}), got {c.shape}"
        )
    m, sigma = gev_link(c.location, c.spread, c.nu, _design_of(e))
    if not sigma[0] > 0.0:
        raise ParameterDomainError(f"GEV scale must be positive, got {sigma[0]}")
    mu = gev_location(m[0], sigma[0], c.shape)
    return CensoredGevParams(mu=float(mu), sigma=float(sigma[0]), xi=c.shape)


def tnln_predictive(c: EmosCoefficients, e: EnsembleForecast) -> MixtureSpec:
    """TN-LN mixture with TN weight ``c.weight``."""
    _require(c, EmosFamily.TNLN)
    assert c.secondary is not None and c.weight is not None
    tn_part = c.model_copy(
        update={"family": EmosFamily.TN, "weight": None, "secondary": None}
    )
    return MixtureSpec(
        components=[tn_predictive(tn_part, e), ln_predictive(c.secondary, e)],
        weights=[c.weight, 1.0 - c.weight],
    )


def predictive(c: EmosCoefficients, e: EnsembleForecast) -> DistributionSpec:
    """Dispatch on ``c.family`` to the matching link."""
    match c.family:
        case EmosFamily.TN:
            return tn_predictive(c, e)
        case EmosFamily.LN:
            return ln_predictive(c, e)
        case EmosFamily.CSG:
            return csg_predictive(c, e)
        case EmosFamily.GEV:
            return gev_predictive(c, e)
        case EmosFamily.TNLN:
            return tnln_predictive(c, e)
    raise ValueError(f"unknown family {c.family}")


def csg_gev_mixture_density(
    csg: CsgParams, gev: CensoredGevParams, omega: float, x: float
) -> float:
    """Generalized density of the CSG-GEV mixture, atom included at x == 0.

    Evaluator only; the mixture is never fitted.
    """
    if not 0.0 <= omega <= 1.0:
        raise ParameterDomainError(f"mixture weight must lie in [0, 1], got {omega}")
    mixture = MixtureSpec(components=[csg, gev], weights=[omega, 1.0 - omega])
    return float(mixture.generalized_density(x))


def _design_of(e: EnsembleForecast) -> EnsembleDesign:
    members = e.values[None, :]
    mean, variance, p0, mad = member_stats(members)
    return EnsembleDesign(
        group_sums=e.layout.group_sums(members),
        mean=mean,
        variance=variance,
        zero_fraction=p0,
        mean_abs_diff=mad,
    )
