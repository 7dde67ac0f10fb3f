"""Minimum-CRPS estimation of pooling parameters.

The LP weight minimizes the exact quadratic expansion of the mean CRPS with a
bounded scalar search. SLP, BLP and BM_L are fitted by BFGS on an
unconstrained vector:

- omega via logit
- c via a scaled logistic on (C_MIN, C_MAX)
- alpha, beta and the beta-mixture shapes via log
- beta-mixture weights via softmax
"""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np
from pydantic import ValidationError
from scipy import optimize, special

from src.combination.components import CaseGrid, ComponentPair, case_grid, quadratic_terms
from src.combination.models import BetaComponent, CombinationMethod, CombinationParams
from src.combination.pools import MIN_COMPONENT_TAIL, transform_pool
from src.config.settings import Settings, get_settings
from src.distributions.kernels import FloatArray
from src.emos.estimation import PENALTY, report_nonconvergence
from src.emos.models import EmosCoefficients, ForecastBatch, TrainingWindow
from src.scoring.kernels import crps_from_cdf_values

logger = logging.getLogger(__name__)

# Admissible SLP spread adjustment during fitting
C_MIN = 0.2
C_MAX = 5.0

# Candidate grids of the grid-search alternative
OMEGA_GRID = np.round(np.arange(0.0, 1.0 + 1e-9, 0.05), 10)
C_GRID = np.round(np.arange(0.7, 1.3 + 1e-9, 0.05), 10)

_CLIP = 1e-6


def _logit(p: float) -> float:
    return float(special.logit(np.clip(p, _CLIP, 1.0 - _CLIP)))


@dataclass(frozen=True)
class _Codec:
    method: CombinationMethod
    n_components: int

    def encode(self, params: CombinationParams) -> FloatArray:
        head = [_logit(params.omega)]
        match self.method:
            case CombinationMethod.SLP:
                return np.array(head + [_logit((params.c - C_MIN) / (C_MAX - C_MIN))])
            case CombinationMethod.BLP:
                return np.array(head + [np.log(params.alpha), np.log(params.beta)])
            case CombinationMethod.BML:
                comps = params.components
                weights = np.maximum([comp.weight for comp in comps], _CLIP)
                return np.concatenate(
                    [
                        head,
                        np.log([comp.alpha for comp in comps]),
                        np.log([comp.beta for comp in comps]),
                        np.log(weights) - np.log(weights).mean(),
                    ]
                )
        raise ValueError(f"{self.method.value} is not fitted by BFGS")

    def decode(self, u: FloatArray) -> CombinationParams:
        """Unvalidated parameters; validate with ``model_validate``."""
        omega = float(special.expit(u[0]))
        fields: dict[str, object] = {
            "method": self.method,
            "omega": omega,
            "c": 1.0,
            "alpha": 1.0,
            "beta": 1.0,
            "components": [],
        }
        with np.errstate(over="ignore"):
            match self.method:
                case CombinationMethod.SLP:
                    fields["c"] = C_MIN + (C_MAX - C_MIN) * float(special.expit(u[1]))
                case CombinationMethod.BLP:
                    fields["alpha"], fields["beta"] = (float(v) for v in np.exp(u[1:3]))
                case CombinationMethod.BML:
                    n = self.n_components
                    alphas, betas = np.exp(u[1 : 1 + n]), np.exp(u[1 + n : 1 + 2 * n])
                    weights = special.softmax(u[1 + 2 * n : 1 + 3 * n])
                    fields["components"] = [
                        BetaComponent.model_construct(
                            weight=float(w), alpha=float(a), beta=float(b)
                        )
                        for w, a, b in zip(weights, alphas, betas, strict=True)
                    ]
        return CombinationParams.model_construct(**fields)


def _admissible(params: CombinationParams) -> bool:
    values = [params.omega, params.c, params.alpha, params.beta]
    values += [v for comp in params.components for v in (comp.alpha, comp.beta)]
    return bool(np.all(np.isfinite(values))) and all(
        v > 0.0 for v in values[1:]
    )


def mean_pool_crps(params: CombinationParams, pair: ComponentPair, grid: CaseGrid) -> float:
    """Mean CRPS of a non-linear pool on precomputed per-case grids.

    For SLP the grid lives in the rescaled variable z = x / c and must cover
    every observation divided by ``params.c``.
    """
    if not _admissible(params):
        return np.inf
    c = params.c if params.method == CombinationMethod.SLP else 1.0
    z = pair.observations / c
    lp_nodes = params.omega * grid.g_nodes + (1.0 - params.omega) * grid.h_nodes
    lp_x = params.omega * pair.g.cdf(z) + (1.0 - params.omega) * pair.h.cdf(z)
    with np.errstate(all="ignore"):
        values = c * crps_from_cdf_values(
            grid.nodes, transform_pool(params, lp_nodes), z, transform_pool(params, lp_x)
        )
    return float(np.mean(values))


def _fit_linear(
    pair: ComponentPair, init: CombinationParams, settings: Settings
) -> CombinationParams:
    terms = quadratic_terms(pair, settings.fit_grid_points, settings.grid_tail_probability)
    result = optimize.minimize_scalar(
        terms.mean_lp_crps,
        bounds=(0.0, 1.0),
        method="bounded",
        options={"maxiter": settings.optimizer_max_iter, "xatol": 1e-8},
    )
    if not result.success:
        report_nonconvergence(
            f"lp weight search stopped after {result.nfev} evaluations", settings
        )
    candidates = [float(result.x), 0.0, 1.0, init.omega]
    omega = min(candidates, key=terms.mean_lp_crps)
    logger.debug(
        f"lp weight {omega:.4f} on {len(pair)} cases, "
        f"mean CRPS {terms.mean_lp_crps(omega):.6g}"
    )
    return CombinationParams(method=CombinationMethod.LP, omega=omega)


def _fit_nonlinear(
    method: CombinationMethod,
    pair: ComponentPair,
    init: CombinationParams,
    settings: Settings,
) -> CombinationParams:
    # beta pools are fitted on a grid that reaches the component tail floor
    if method == CombinationMethod.SLP:
        min_scale, tail = C_MIN, settings.grid_tail_probability
    else:
        min_scale, tail = 1.0, MIN_COMPONENT_TAIL
    grid = case_grid(pair, settings.fit_grid_points, tail, min_scale)
    codec = _Codec(method=method, n_components=len(init.components))

    def fun(u: FloatArray) -> float:
        value = mean_pool_crps(codec.decode(u), pair, grid)
        return value if np.isfinite(value) else PENALTY

    start_value = mean_pool_crps(init, pair, grid)
    result = optimize.minimize(
        fun,
        codec.encode(init),
        method="BFGS",
        options={"maxiter": settings.optimizer_max_iter, "gtol": settings.optimizer_gtol},
    )
    logger.debug(
        f"{method.value} BFGS on {len(pair)} cases: status={result.status} "
        f"nit={result.nit} value={result.fun:.6g} start={start_value:.6g}"
    )
    if not result.success:
        report_nonconvergence(
            f"{method.value} fit did not converge after {result.nit} iterations "
            f"(status {result.status}: {result.message})",
            settings,
        )
    try:
        fitted = CombinationParams.model_validate(codec.decode(result.x).model_dump())
    except ValidationError as exc:
        logger.warning(f"{method.value} optimum is not representable, keeping init: {exc}")
        return init
    if not mean_pool_crps(fitted, pair, grid) <= start_value:
        logger.debug(f"{method.value} optimizer did not improve on init; keeping init")
        return init
    return fitted


def fit_pool(
    method: CombinationMethod,
    pair: ComponentPair,
    init: CombinationParams | None = None,
    n_components: int = 3,
    settings: Settings | None = None,
) -> CombinationParams:
    """Fit pooling parameters by minimum mean CRPS over the cases of ``pair``.

    The result never scores worse than ``init`` on the fitting grid; for LP
    it also never scores worse than either pure component.

    Args:
        method: LP, SLP, BLP or BM_L
        pair: Component laws and observations of the training window
        init: Starting values, defaults to ``CombinationParams.initial``
        n_components: Beta-mixture size L when ``init`` is not given
        settings: Optimizer and grid settings

    Raises:
        ValueError: For LP-PI, which has a closed-form weight
        ConvergenceError: If the optimizer stops early in strict mode
    """
    settings = settings or get_settings()
    if method == CombinationMethod.LP_PI:
        raise ValueError("the plug-in weight is computed by plugin_weight, not fitted")
    if init is None:
        init = CombinationParams.initial(method, n_components)
    elif init.method != method:
        raise ValueError(f"init is for {init.method.value}, not {method.value}")
    if method == CombinationMethod.LP:
        return _fit_linear(pair, init, settings)
    return _fit_nonlinear(method, pair, init, settings)


def fit_combination(
    method: CombinationMethod,
    g_coefficients: Mapping[np.datetime64, EmosCoefficients],
    h_coefficients: Mapping[np.datetime64, EmosCoefficients],
    window: TrainingWindow | ForecastBatch,
    n_components: int = 3,
    init: CombinationParams | None = None,
    settings: Settings | None = None,
) -> CombinationParams:
    """Fit a pool on a window, each case under its own day's component fits.

    Args:
        method: LP, SLP, BLP or BM_L
        g_coefficients: Fitted G coefficients per day
        h_coefficients: Fitted H coefficients per day
        window: Training cases; every day needs coefficients in both histories
        n_components: Beta-mixture size L
        init: Starting values
        settings: Optimizer and grid settings

    Raises:
        MissingCoefficientsError: If a window day lacks component coefficients
        DegenerateWindowError: If the window is empty
    """
    batch = window.batch if isinstance(window, TrainingWindow) else window
    pair = ComponentPair.from_history(g_coefficients, h_coefficients, batch)
    return fit_pool(method, pair, init, n_components, settings)


def grid_search_combination(
    method: CombinationMethod,
    pair: ComponentPair,
    omegas: Sequence[float] | None = None,
    spreads: Sequence[float] | None = None,
    settings: Settings | None = None,
) -> CombinationParams:
    """Pick the candidate with the lowest training mean CRPS.

    LP searches omega in {0, 0.05, ..., 1}; SLP additionally searches
    c in {0.7, 0.75, ..., 1.3}. Ties keep the first candidate.

    Raises:
        ValueError: For methods other than LP and SLP
    """
    settings = settings or get_settings()
    omega_grid = np.asarray(OMEGA_GRID if omegas is None else omegas, dtype=np.float64)
    if method == CombinationMethod.LP:
        terms = quadratic_terms(
            pair, settings.fit_grid_points, settings.grid_tail_probability
        )
        scores = [terms.mean_lp_crps(w) for w in omega_grid]
        return CombinationParams(method=method, omega=float(omega_grid[np.argmin(scores)]))
    if method != CombinationMethod.SLP:
        raise ValueError(f"grid search covers lp and slp, not {method.value}")
    c_grid = np.asarray(C_GRID if spreads is None else spreads, dtype=np.float64)
    grid = case_grid(
        pair, settings.fit_grid_points, settings.grid_tail_probability, float(c_grid.min())
    )
    best: tuple[float, CombinationParams] | None = None
    for c in c_grid:
        for w in omega_grid:
            params = CombinationParams(method=method, omega=float(w), c=float(c))
            value = mean_pool_crps(params, pair, grid)
            if best is None or value < best[0]:
                best = (value, params)
    assert best is not None
    return best[1]
