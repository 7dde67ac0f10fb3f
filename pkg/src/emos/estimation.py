"""Optimum-score estimation of EMOS coefficients.

Coefficients are mapped to an unconstrained vector so that BFGS with
numerical gradients can be used throughout:

- TN/LN: spread slope b1 = exp(u), everything else free
- CSG: all link coefficients and the shift via softplus
- GEV: link coefficients via softplus, nu free, xi via a scaled logistic
- TN-LN mixture: TN and LN parts as above, TN weight via logit
"""

from __future__ import annotations

import logging
import warnings
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from pydantic import ValidationError
from scipy import optimize, special

from src.config.settings import Settings, get_settings
from src.distributions.kernels import FloatArray
from src.emos.links import EnsembleDesign, predictive_arrays
from src.emos.models import (
    EmosCoefficients,
    EmosFamily,
    ForecastBatch,
    GroupLayout,
    Objective,
    TrainingWindow,
)
from src.errors import ConvergenceError, ConvergenceWarning, DegenerateWindowError

logger = logging.getLogger(__name__)

# Fitted GEV shape interval, narrower than the existence interval (-0.278, 1)
SHAPE_LOWER = -0.25
SHAPE_UPPER = 0.7

PENALTY = 1e10
# Per-case CRPS below this is a numerical failure of the candidate, not a score
NEGATIVE_CRPS_TOLERANCE = 1e-9
_SOFTPLUS_FLOOR = 1e-2
_EXP_FLOOR = 1e-6
_WEIGHT_CLIP = 1e-6


def _softplus(u: FloatArray) -> FloatArray:
    return np.logaddexp(0.0, u)


def _inv_softplus(v: FloatArray) -> FloatArray:
    v = np.maximum(np.asarray(v, dtype=np.float64), _SOFTPLUS_FLOOR)
    return v + np.log(-np.expm1(-v))


def _shape_from(u: float) -> float:
    return SHAPE_LOWER + (SHAPE_UPPER - SHAPE_LOWER) * float(special.expit(u))


def _shape_to(xi: float) -> float:
    frac = (xi - SHAPE_LOWER) / (SHAPE_UPPER - SHAPE_LOWER)
    return float(special.logit(np.clip(frac, _WEIGHT_CLIP, 1.0 - _WEIGHT_CLIP)))


@dataclass(frozen=True)
class _Codec:
    """Maps coefficients of one family to an unconstrained vector and back."""

    family: EmosFamily
    n_groups: int

    @property
    def _n_link(self) -> int:
        return self.n_groups + 3

    def encode(self, c: EmosCoefficients) -> FloatArray:
        match self.family:
            case EmosFamily.TN | EmosFamily.LN:
                return self._encode_normal(c)
            case EmosFamily.CSG:
                assert c.shift is not None
                return _inv_softplus([*c.location, *c.spread, c.shift])
            case EmosFamily.GEV:
                assert c.shape is not None and c.nu is not None
                link = _inv_softplus([*c.location, *c.spread])
                return np.concatenate([link, [c.nu, _shape_to(c.shape)]])
            case EmosFamily.TNLN:
                assert c.secondary is not None and c.weight is not None
                weight = np.clip(c.weight, _WEIGHT_CLIP, 1.0 - _WEIGHT_CLIP)
                return np.concatenate(
                    [
                        self._encode_normal(c),
                        self._encode_normal(c.secondary),
                        [special.logit(weight)],
                    ]
                )
        raise ValueError(f"unknown family {self.family}")

    def decode(self, u: FloatArray) -> EmosCoefficients:
        """Unvalidated coefficients; validate with ``EmosCoefficients.model_validate``."""
        k = self.n_groups + 1
        match self.family:
            case EmosFamily.TN | EmosFamily.LN:
                return self._decode_normal(self.family, u)
            case EmosFamily.CSG:
                v = _softplus(u)
                return EmosCoefficients.model_construct(
                    family=self.family,
                    location=list(v[:k]),
                    spread=list(v[k : k + 2]),
                    shift=float(v[k + 2]),
                    shape=None,
                    nu=None,
                    weight=None,
                    secondary=None,
                )
            case EmosFamily.GEV:
                v = _softplus(u[: k + 2])
                return EmosCoefficients.model_construct(
                    family=self.family,
                    location=list(v[:k]),
                    spread=list(v[k : k + 2]),
                    nu=float(u[k + 2]),
                    shape=_shape_from(u[k + 3]),
                    shift=None,
                    weight=None,
                    secondary=None,
                )
            case EmosFamily.TNLN:
                n = self._n_link
                tn_part = self._decode_normal(EmosFamily.TN, u[:n])
                ln_part = self._decode_normal(EmosFamily.LN, u[n : 2 * n])
                return EmosCoefficients.model_construct(
                    family=self.family,
                    location=tn_part.location,
                    spread=tn_part.spread,
                    weight=float(special.expit(u[2 * n])),
                    secondary=ln_part,
                    shape=None,
                    shift=None,
                    nu=None,
                )
        raise ValueError(f"unknown family {self.family}")

    def _encode_normal(self, c: EmosCoefficients) -> FloatArray:
        b1 = np.log(max(c.spread[1], _EXP_FLOOR))
        return np.array([*c.location, c.spread[0], b1], dtype=np.float64)

    def _decode_normal(self, family: EmosFamily, u: FloatArray) -> EmosCoefficients:
        k = self.n_groups + 1
        with np.errstate(over="ignore"):
            b1 = float(np.exp(u[k + 1]))
        return EmosCoefficients.model_construct(
            family=family,
            location=[float(v) for v in u[:k]],
            spread=[float(u[k]), b1],
            shape=None,
            shift=None,
            nu=None,
            weight=None,
            secondary=None,
        )


def report_nonconvergence(message: str, settings: Settings) -> None:
    """Warn about an unconverged optimizer, or raise in strict mode.

    Raises:
        ConvergenceError: If ``settings.fail_on_nonconvergence`` is set
    """
    if settings.fail_on_nonconvergence:
        raise ConvergenceError(message)
    logger.warning(message)
    warnings.warn(message, ConvergenceWarning, stacklevel=3)


def default_coefficients(family: EmosFamily, layout: GroupLayout) -> EmosCoefficients:
    """First-day initial values.

    a0 = 0 and a_k = 1/M on the group sums, so the location starts at the
    ensemble mean; b0 = b1 = 1. CSG starts with delta = 0.1, GEV with
    xi = 0.1 and nu = 0, the TN-LN mixture with weight 0.5.
    """
    location = [0.0] + [1.0 / layout.n_members] * layout.n_groups
    spread = [1.0, 1.0]
    match family:
        case EmosFamily.TN | EmosFamily.LN:
            return EmosCoefficients(family=family, location=location, spread=spread)
        case EmosFamily.CSG:
            return EmosCoefficients(
                family=family, location=location, spread=spread, shift=0.1
            )
        case EmosFamily.GEV:
            return EmosCoefficients(
                family=family, location=location, spread=spread, shape=0.1, nu=0.0
            )
        case EmosFamily.TNLN:
            return EmosCoefficients(
                family=family,
                location=location,
                spread=spread,
                weight=0.5,
                secondary=default_coefficients(EmosFamily.LN, layout),
            )
    raise ValueError(f"unknown family {family}")


def _window_batch(window: TrainingWindow | ForecastBatch) -> ForecastBatch:
    return window.batch if isinstance(window, TrainingWindow) else window


def _score_function(
    objective: Objective, family: EmosFamily
) -> Callable[[EmosCoefficients, EnsembleDesign, FloatArray], float]:
    if objective == Objective.MIN_CRPS and family == EmosFamily.TNLN:
        raise ValueError("the TN-LN mixture is fitted by maximum likelihood only")

    def score(c: EmosCoefficients, design: EnsembleDesign, obs: FloatArray) -> float:
        predictive = predictive_arrays(c, design)
        if not predictive.is_valid():
            return np.inf
        with np.errstate(all="ignore"):
            if objective == Objective.ML:
                return float(np.mean(predictive.logs(obs)))
            values = predictive.crps(obs)
        if np.any(values < -NEGATIVE_CRPS_TOLERANCE):
            logger.debug(
                f"rejecting {c.family.value} candidate with per-case CRPS "
                f"{np.min(values):.3g}"
            )
            return np.inf
        return float(np.mean(values))

    return score


def mean_objective(
    c: EmosCoefficients,
    window: TrainingWindow | ForecastBatch,
    objective: Objective = Objective.MIN_CRPS,
) -> float:
    """Mean CRPS or mean LogS of ``c`` over the window.

    Returns ``inf`` when the link leaves the parameter domain on some case or
    when a per-case CRPS comes out negative.
    """
    batch = _window_batch(window)
    score = _score_function(objective, c.family)
    value = score(c, EnsembleDesign.from_batch(batch), batch.observations)
    return value if np.isfinite(value) else np.inf


def fit_emos(
    family: EmosFamily,
    window: TrainingWindow | ForecastBatch,
    objective: Objective = Objective.MIN_CRPS,
    init: EmosCoefficients | None = None,
    settings: Settings | None = None,
) -> EmosCoefficients:
    """Fit link coefficients by minimizing the mean score over a window.

    The returned coefficients never score worse than ``init`` on the window.

    Args:
        family: EMOS family to fit
        window: Regional training sample
        objective: Minimum CRPS or maximum likelihood
        init: Starting coefficients, defaults to ``default_coefficients``
        settings: Optimizer settings, defaults to ``get_settings()``

    Returns:
        Fitted EmosCoefficients satisfying the family constraints

    Raises:
        DegenerateWindowError: If the window is empty or all observations are equal
        ConvergenceError: If BFGS hits its iteration limit and
            ``fail_on_nonconvergence`` is set
    """
    settings = settings or get_settings()
    batch = _window_batch(window)
    if len(batch) == 0:
        raise DegenerateWindowError("training window is empty")
    obs = batch.observations
    if np.ptp(obs) == 0.0:
        raise DegenerateWindowError(
            f"all {len(obs)} training observations equal {obs[0]}"
        )
    if init is None:
        init = default_coefficients(family, batch.layout)
    elif init.family != family:
        raise ValueError(f"init is for {init.family.value}, not {family.value}")

    design = EnsembleDesign.from_batch(batch)
    score = _score_function(objective, family)
    codec = _Codec(family=family, n_groups=batch.layout.n_groups)

    def fun(u: FloatArray) -> float:
        value = score(codec.decode(u), design, obs)
        return value if np.isfinite(value) else PENALTY

    start_value = score(init, design, obs)
    result = optimize.minimize(
        fun,
        codec.encode(init),
        method="BFGS",
        options={"maxiter": settings.optimizer_max_iter, "gtol": settings.optimizer_gtol},
    )
    logger.debug(
        f"{family.value} BFGS on {len(obs)} cases: status={result.status} "
        f"nit={result.nit} value={result.fun:.6g} start={start_value:.6g}"
    )
    if not result.success:
        report_nonconvergence(
            f"{family.value} fit did not converge after {result.nit} iterations "
            f"(status {result.status}: {result.message})",
            settings,
        )

    try:
        fitted = EmosCoefficients.model_validate(codec.decode(result.x).model_dump())
    except ValidationError as exc:
        logger.warning(f"{family.value} optimum is not representable, keeping init: {exc}")
        return init
    if not score(fitted, design, obs) <= start_value:
        logger.debug(f"{family.value} optimizer did not improve on init; keeping init")
        return init
    return fitted


def fit_tnln_mixture(
    window: TrainingWindow | ForecastBatch,
    init: EmosCoefficients | None = None,
    settings: Settings | None = None,
) -> EmosCoefficients:
    """Jointly fit the TN-LN mixture by maximum likelihood.

    The TN weight is logit-parametrized internally, so initial weights of
    exactly 0 or 1 are accepted.
    """
    return fit_emos(EmosFamily.TNLN, window, Objective.ML, init, settings)
