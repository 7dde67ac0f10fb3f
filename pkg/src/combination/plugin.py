"""Closed-form plug-in weights for linear pools.

The component coefficients fitted for the target day are applied to every
case of the training window. The mean LP CRPS over the window is then a
quadratic in the weights, so its minimizer is available in closed form
instead of by numerical optimization.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Sequence

import numpy as np

from src.combination.components import ComponentPair, pool_terms, quadratic_terms
from src.combination.models import MultiPluginWeights, PluginWeight
from src.config.settings import Settings, get_settings
from src.distributions.kernels import FloatArray
from src.emos.links import batch_predictive
from src.emos.models import EmosCoefficients, ForecastBatch, TrainingWindow
from src.errors import DegenerateWindowError

logger = logging.getLogger(__name__)

# Relative size below which the components count as identical on the window
DEGENERACY_TOLERANCE = 1e-12
# Subsets whose quadratic form is worse conditioned than this are skipped
MAX_CONDITION = 1e12

_FALLBACK_MESSAGE = (
    "No support set of the {r}-component quadratic form is solvable; using uniform weights"
)


def _batch_of(window: TrainingWindow | ForecastBatch) -> ForecastBatch:
    return window.batch if isinstance(window, TrainingWindow) else window


def plugin_weight_from_pair(
    pair: ComponentPair, settings: Settings | None = None
) -> PluginWeight:
    """Plug-in weight for precomputed component laws.

    With A, B the mean component CRPS values and M the mean cross term, the
    mean LP CRPS is w^2 A + (1 - w)^2 B + 2 w (1 - w) M, minimized at
    w* = (B - M) / (A + B - 2M) and clamped to [0, 1]. The clamped weight
    never scores worse than either component on the window.
    """
    settings = settings or get_settings()
    terms = quadratic_terms(pair, settings.grid_points, settings.grid_tail_probability)
    a, b, m = terms.mean_crps_g, terms.mean_crps_h, terms.mean_cross
    curvature = a + b - 2.0 * m
    scale = DEGENERACY_TOLERANCE * max(a + b, np.finfo(float).tiny)
    degenerate = terms.mean_divergence <= scale
    if degenerate:
        logger.warning(f"Components coincide on {len(pair)} window cases; using omega=0.5")
        unclamped = omega = 0.5
    elif curvature <= 0.0:
        # quadrature noise on nearly identical components; take the better end
        unclamped = omega = 1.0 if a <= b else 0.0
    else:
        unclamped = (b - m) / curvature
        omega = float(np.clip(unclamped, 0.0, 1.0))
    pooled = terms.mean_lp_crps(omega)
    logger.debug(
        f"plug-in omega={omega:.4f} (unclamped {unclamped:.4f}); "
        f"mean CRPS G={a:.6g} H={b:.6g} pool={pooled:.6g}"
    )
    return PluginWeight(
        omega=omega,
        omega_unclamped=float(unclamped),
        mean_crps_g=a,
        mean_crps_h=b,
        mean_cross=m,
        mean_crps_pool=pooled,
        degenerate=bool(degenerate),
    )


def plugin_weight(
    g: EmosCoefficients,
    h: EmosCoefficients,
    window: TrainingWindow | ForecastBatch,
    settings: Settings | None = None,
) -> PluginWeight:
    """Plug-in LP weight of G for the target day's component coefficients.

    Args:
        g: Coefficients of the first component fitted for the target day
        h: Coefficients of the second component fitted for the target day
        window: Training cases, all scored under ``g`` and ``h``
        settings: Grid settings

    Raises:
        DegenerateWindowError: If the window is empty
        ParameterDomainError: If a component link leaves its domain on the window
    """
    pair = ComponentPair.from_fixed(g, h, _batch_of(window))
    return plugin_weight_from_pair(pair, settings)


def _subset_weights(q: FloatArray, subset: tuple[int, ...]) -> FloatArray | None:
    sub = q[np.ix_(subset, subset)]
    if np.linalg.cond(sub) > MAX_CONDITION:
        return None
    solved = np.linalg.solve(sub, np.ones(len(subset)))
    total = solved.sum()
    if total == 0.0 or not np.isfinite(total):
        return None
    return solved / total


def _active_set_minimizer(q: FloatArray) -> FloatArray | None:
    r = q.shape[0]
    best: tuple[float, FloatArray] | None = None
    for size in range(1, r + 1):
        for subset in itertools.combinations(range(r), size):
            w_sub = _subset_weights(q, subset)
            if w_sub is None or np.any(w_sub < 0.0):
                continue
            w = np.zeros(r)
            w[list(subset)] = w_sub
            value = float(w @ q @ w)
            if best is None or value < best[0]:
                best = (value, w)
    return None if best is None else best[1]


def simplex_minimizer(q: FloatArray) -> FloatArray:
    """Minimize w' Q w over the probability simplex by active-set enumeration.

    Every support set S yields the equality-constrained minimizer
    Q_S^{-1} 1 / (1' Q_S^{-1} 1); the best feasible one is the global
    minimizer of the convex quadratic. Ties keep the first support found,
    smallest supports first. When no support set is solvable the weights
    are uniform and a warning is logged.
    """
    weights = _active_set_minimizer(q)
    if weights is None:
        logger.warning(_FALLBACK_MESSAGE.format(r=q.shape[0]))
        return np.full(q.shape[0], 1.0 / q.shape[0])
    return weights


def plugin_weight_multi(
    coefficients: Sequence[EmosCoefficients],
    window: TrainingWindow | ForecastBatch,
    settings: Settings | None = None,
) -> MultiPluginWeights:
    """Plug-in weights of an r-component linear pool.

    The mean pool CRPS over the window is w' Q w with Q_ii the mean CRPS of
    component i and Q_ij the mean cross term of components i and j; the
    weights minimize it over the simplex.

    Raises:
        ValueError: If fewer than two components are given
        DegenerateWindowError: If the window is empty
    """
    if len(coefficients) < 2:
        raise ValueError(f"a pool needs at least two components, got {len(coefficients)}")
    settings = settings or get_settings()
    batch = _batch_of(window)
    if len(batch) == 0:
        raise DegenerateWindowError("combination window holds no cases")
    components = [batch_predictive(c, batch) for c in coefficients]
    terms = pool_terms(
        components, batch.observations, settings.grid_points, settings.grid_tail_probability
    )
    q = terms.matrix()
    r = len(coefficients)
    scale = DEGENERACY_TOLERANCE * max(float(np.mean(np.diag(q))), np.finfo(float).tiny)
    divergence = terms.mean_divergence()
    distinct: list[int] = []
    for i in range(r):
        if all(divergence[i, j] > scale for j in distinct):
            distinct.append(i)
    non_identified = len(distinct) < r
    degenerate = len(distinct) == 1
    fallback = False
    if degenerate:
        logger.warning(f"All {r} components coincide on the window; using uniform weights")
        weights = np.full(r, 1.0 / r)
    else:
        if non_identified:
            logger.info(
                f"{r - len(distinct)} component(s) duplicate others on the window; "
                f"their weight goes to the first copy"
            )
        weights = np.zeros(r)
        solved = _active_set_minimizer(q[np.ix_(distinct, distinct)])
        fallback = solved is None
        if solved is None:
            logger.warning(_FALLBACK_MESSAGE.format(r=len(distinct)))
            solved = np.full(len(distinct), 1.0 / len(distinct))
        weights[distinct] = solved
    return MultiPluginWeights(
        weights=[float(w) for w in weights],
        mean_crps_pool=float(weights @ q @ weights),
        support=[i for i, w in enumerate(weights) if w > 0.0],
        degenerate=degenerate,
        non_identified=non_identified,
        fallback=fallback,
    )
