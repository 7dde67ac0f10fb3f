"""Component predictive laws over a training window and their CRPS terms.

A ``ComponentPair`` holds the two EMOS predictive batches (G and H) for the
same cases. The linear-pool CRPS of every case expands into

    omega^2 CRPS(G) + (1 - omega)^2 CRPS(H) + 2 omega (1 - omega) M(G, H)

so fitting and the plug-in weight only need the three per-case terms, which
``quadratic_terms`` computes once per window.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate

from src.combination.models import CombinationMethod, CombinationParams
from src.combination.pools import component_tail, pool_cdf, transform_pool
from src.config.settings import get_settings
from src.distributions.kernels import FloatArray
from src.emos.links import PredictiveBatch, batch_predictive, history_predictive
from src.emos.models import EmosCoefficients, ForecastBatch
from src.errors import DegenerateWindowError, GridError
from src.scoring.kernels import (
    crps_from_cdf_values,
    cross_from_cdf_values,
    stretched_nodes,
)

logger = logging.getLogger(__name__)

# Upper bound on rows x grid points evaluated at once
MAX_GRID_ELEMENTS = 2_000_000


@dataclass(frozen=True)
class ComponentPair:
    """Predictive laws G and H evaluated on the same cases.

    Attributes:
        g: First component, one law per case
        h: Second component, one law per case
        observations: Verifying observations, shape (n,)
    """

    g: PredictiveBatch
    h: PredictiveBatch
    observations: FloatArray

    def __post_init__(self) -> None:
        n = len(self.observations)
        if len(self.g) != n or len(self.h) != n:
            raise ValueError(
                f"component sizes {len(self.g)}, {len(self.h)} do not match {n} observations"
            )

    def __len__(self) -> int:
        return len(self.observations)

    @classmethod
    def from_history(
        cls,
        g_coefficients: Mapping[np.datetime64, EmosCoefficients],
        h_coefficients: Mapping[np.datetime64, EmosCoefficients],
        batch: ForecastBatch,
    ) -> ComponentPair:
        """Each case scored under the component coefficients of its own day.

        Raises:
            DegenerateWindowError: If ``batch`` is empty
            MissingCoefficientsError: If a day of ``batch`` lacks coefficients
        """
        if len(batch) == 0:
            raise DegenerateWindowError("combination window holds no cases")
        return cls(
            g=history_predictive(g_coefficients, batch),
            h=history_predictive(h_coefficients, batch),
            observations=batch.observations,
        )

    @classmethod
    def from_fixed(
        cls, g: EmosCoefficients, h: EmosCoefficients, batch: ForecastBatch
    ) -> ComponentPair:
        """All cases scored under one pair of coefficient vectors."""
        if len(batch) == 0:
            raise DegenerateWindowError("combination window holds no cases")
        return cls(
            g=batch_predictive(g, batch),
            h=batch_predictive(h, batch),
            observations=batch.observations,
        )

    def take(self, rows: slice | NDArray[np.intp]) -> ComponentPair:
        return ComponentPair(self.g.take(rows), self.h.take(rows), self.observations[rows])


@dataclass(frozen=True)
class CaseGrid:
    """Per-case integration grids with both component CDFs on the nodes.

    ``nodes`` has shape (n, m); row k runs from 0 to an integer upper
    bound that covers the predictive tails and the observation of case k,
    uniformly over the bulk of both laws and geometrically beyond it.
    """

    nodes: FloatArray
    g_nodes: FloatArray
    h_nodes: FloatArray

    @property
    def n_points(self) -> int:
        return self.nodes.shape[-1]


def case_grid(
    pair: ComponentPair, n_points: int, tail: float, min_scale: float = 1.0
) -> CaseGrid:
    """Build one grid per case of ``pair``.

    Args:
        pair: Component laws and observations
        n_points: Nodes per case, at least 2
        tail: Upper tail probability left beyond the grid by each component
        min_scale: Smallest spread factor c the grid must serve; the grid
            then also covers x / c for every c >= min_scale

    Raises:
        GridError: If n_points < 2 or a component quantile is not finite
    """
    nodes = _grid_nodes([pair.g, pair.h], pair.observations, n_points, tail, min_scale)
    return CaseGrid(nodes=nodes, g_nodes=pair.g.cdf(nodes), h_nodes=pair.h.cdf(nodes))


def row_chunks(n_rows: int, n_points: int) -> Iterator[slice]:
    """Row slices keeping each evaluated block under ``MAX_GRID_ELEMENTS``."""
    step = max(1, MAX_GRID_ELEMENTS // max(n_points, 1))
    for start in range(0, n_rows, step):
        yield slice(start, min(start + step, n_rows))


def closed_form_crps(batch: PredictiveBatch, x: FloatArray) -> FloatArray | None:
    """Per-case closed-form CRPS, or None for families without one."""
    try:
        return np.maximum(batch.crps(x), 0.0)
    except NotImplementedError:
        return None


@dataclass(frozen=True)
class PoolTerms:
    """Per-case CRPS terms of an r-component linear pool.

    Attributes:
        cross: Shape (r, r, n); the diagonal holds each component's CRPS and
            entry (i, j) the cross term M(F_i, F_j)
        divergence: Shape (r, r, n); int (F_i - F_j)^2 over the case grid
    """

    cross: FloatArray
    divergence: FloatArray

    @property
    def n_components(self) -> int:
        return self.cross.shape[0]

    def matrix(self) -> FloatArray:
        """Mean quadratic form Q with Q_ii = mean CRPS_i, Q_ij = mean M_ij."""
        return self.cross.mean(axis=-1)

    def mean_divergence(self) -> FloatArray:
        return self.divergence.mean(axis=-1)

    def pool_crps(self, weights: ArrayLike) -> FloatArray:
        """Per-case CRPS of the linear pool with ``weights``."""
        w = np.asarray(weights, dtype=np.float64)
        return np.maximum(np.einsum("i,ijn,j->n", w, self.cross, w), 0.0)


def pool_terms(
    components: Sequence[PredictiveBatch],
    observations: FloatArray,
    n_points: int | None = None,
    tail: float | None = None,
) -> PoolTerms:
    """CRPS terms of the linear-pool expansion for every case.

    Component CRPS values use the closed forms where a family has one and
    the split trapezoidal rule otherwise; cross terms are always computed
    by quadrature on a per-case grid covering every component.

    Args:
        components: Predictive laws, one batch per component
        observations: Verifying observations, shape (n,)
        n_points: Grid size, defaults to ``Settings.grid_points``
        tail: Grid tail probability, defaults to ``Settings.grid_tail_probability``
    """
    settings = get_settings()
    n_points = n_points or settings.grid_points
    tail = tail or settings.grid_tail_probability
    r, n = len(components), len(observations)
    cross = np.empty((r, r, n))
    divergence = np.zeros((r, r, n))
    closed = [closed_form_crps(d, observations) for d in components]
    for rows in row_chunks(n, n_points):
        parts = [d.take(rows) for d in components]
        xs = observations[rows]
        nodes = _grid_nodes(parts, xs, n_points, tail)
        on_nodes = [d.cdf(nodes) for d in parts]
        at_x = [d.cdf(xs) for d in parts]
        for i in range(r):
            if closed[i] is None:
                cross[i, i, rows] = crps_from_cdf_values(nodes, on_nodes[i], xs, at_x[i])
            for j in range(i + 1, r):
                cross[i, j, rows] = cross[j, i, rows] = cross_from_cdf_values(
                    nodes, on_nodes[i], on_nodes[j], xs, at_x[i], at_x[j]
                )
                gap = integrate.trapezoid((on_nodes[i] - on_nodes[j]) ** 2, nodes, axis=-1)
                divergence[i, j, rows] = divergence[j, i, rows] = gap
    for i, values in enumerate(closed):
        if values is not None:
            cross[i, i] = values
    return PoolTerms(cross=cross, divergence=divergence)


def _grid_nodes(
    parts: Sequence[PredictiveBatch],
    xs: FloatArray,
    n_points: int,
    tail: float,
    min_scale: float = 1.0,
) -> FloatArray:
    if n_points < 2:
        raise GridError(f"a grid needs at least 2 points, got {n_points}")
    quantiles = np.max([d.upper_quantile(tail) for d in parts], axis=0)
    if not np.all(np.isfinite(quantiles)):
        raise GridError("component upper quantile is not finite")
    upper = np.maximum(np.ceil(np.maximum(quantiles, xs / min_scale)), 1.0)
    bulk_tail = 1.0 - get_settings().grid_bulk_probability
    bulk = np.max([d.upper_quantile(bulk_tail) for d in parts], axis=0)
    return stretched_nodes(0.0, np.nan_to_num(bulk, nan=0.0), upper, n_points)


@dataclass(frozen=True)
class QuadraticTerms:
    """Per-case CRPS of G, CRPS of H, the cross term M(G, H) and int (G - H)^2."""

    crps_g: FloatArray
    crps_h: FloatArray
    cross: FloatArray
    divergence: FloatArray

    @property
    def mean_crps_g(self) -> float:
        return float(np.mean(self.crps_g))

    @property
    def mean_crps_h(self) -> float:
        return float(np.mean(self.crps_h))

    @property
    def mean_cross(self) -> float:
        return float(np.mean(self.cross))

    @property
    def mean_divergence(self) -> float:
        return float(np.mean(self.divergence))

    def lp_crps(self, omega: float) -> FloatArray:
        """Per-case linear-pool CRPS from the quadratic expansion."""
        value = (
            omega * omega * self.crps_g
            + (1.0 - omega) ** 2 * self.crps_h
            + 2.0 * omega * (1.0 - omega) * self.cross
        )
        return np.maximum(value, 0.0)

    def mean_lp_crps(self, omega: float) -> float:
        return float(np.mean(self.lp_crps(omega)))


def quadratic_terms(
    pair: ComponentPair, n_points: int | None = None, tail: float | None = None
) -> QuadraticTerms:
    """Two-component ``pool_terms`` in named form."""
    terms = pool_terms([pair.g, pair.h], pair.observations, n_points, tail)
    return QuadraticTerms(
        crps_g=terms.cross[0, 0],
        crps_h=terms.cross[1, 1],
        cross=terms.cross[0, 1],
        divergence=terms.divergence[0, 1],
    )


def pooled_cdf_values(
    params: CombinationParams, pair: ComponentPair, x: ArrayLike
) -> FloatArray:
    """Pooled CDF per case at ``x`` of shape (n,) or (n, m)."""
    return pool_cdf(params, pair.g.cdf, pair.h.cdf, x)


def _numeric_pool_crps(
    params: CombinationParams, pair: ComponentPair, n_points: int, tail: float
) -> FloatArray:
    c = params.c if params.method == CombinationMethod.SLP else 1.0
    values = np.empty(len(pair))
    for rows in row_chunks(len(pair), n_points):
        part = pair.take(rows)
        grid = case_grid(part, n_points, component_tail(params, tail), min_scale=c)
        z = part.observations / c
        lp_nodes = params.omega * grid.g_nodes + (1.0 - params.omega) * grid.h_nodes
        lp_x = params.omega * part.g.cdf(z) + (1.0 - params.omega) * part.h.cdf(z)
        values[rows] = c * crps_from_cdf_values(
            grid.nodes, transform_pool(params, lp_nodes), z, transform_pool(params, lp_x)
        )
    return np.maximum(values, 0.0)


def pooled_crps_values(
    params: CombinationParams,
    pair: ComponentPair,
    n_points: int | None = None,
    tail: float | None = None,
) -> FloatArray:
    """CRPS of the pooled predictive law for every case of ``pair``.

    LP and LP-PI use the quadratic expansion; SLP is integrated in the
    rescaled variable z = x / c, where its CDF is the linear pool, and the
    result multiplied by c; BLP and BM_L are integrated directly on a grid
    reaching far enough into the component tails to cover the tail the beta
    transform adds.
    """
    settings = get_settings()
    n_points = n_points or settings.grid_points
    tail = tail or settings.grid_tail_probability
    if params.method.is_linear:
        return quadratic_terms(pair, n_points, tail).lp_crps(params.omega)
    return _numeric_pool_crps(params, pair, n_points, tail)
