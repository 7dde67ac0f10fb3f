"""Score values, integration grids and the predictive CDF protocol."""

from __future__ import annotations

import math
from enum import Enum
from typing import Protocol, runtime_checkable

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.distributions.kernels import FloatArray
from src.scoring.kernels import stretched_nodes


class ScoreKind(str, Enum):
    """Proper scoring rules supported by the package.

    Attributes:
        CRPS: Continuous ranked probability score, in the units of the variable
        LOGS: Logarithmic score, unitless
    """

    CRPS = "crps"
    LOGS = "logs"


class ScoreValue(BaseModel):
    """A single score of one forecast case.

    LogS may be ``+inf`` when the forecast puts zero density on the
    observation; score tables keep such values instead of aborting.
    """

    model_config = ConfigDict(frozen=True)

    value: float
    kind: ScoreKind

    @model_validator(mode="after")
    def _check_value(self) -> ScoreValue:
        if math.isnan(self.value):
            raise ValueError("score value must not be NaN")
        if self.kind == ScoreKind.CRPS and not (
            self.value >= 0.0 and math.isfinite(self.value)
        ):
            raise ValueError(f"CRPS must be finite and nonnegative, got {self.value}")
        return self

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.value)


class IntegrationGrid(BaseModel):
    """Quadrature grid on [lower, upper].

    Nodes are uniform up to ``bulk_upper`` and geometric beyond it, so that
    heavy upper tails cost few nodes. Without ``bulk_upper`` the grid is
    uniform.

    Attributes:
        lower: Left end, 0 for nonnegative variables
        upper: Right end, strictly above ``lower``
        n_points: Number of grid nodes including both ends
        bulk_upper: End of the uniform part, in (lower, upper]
    """

    model_config = ConfigDict(frozen=True)

    lower: float = Field(default=0.0, allow_inf_nan=False)
    upper: float = Field(allow_inf_nan=False)
    n_points: int = Field(default=20_001, ge=2)
    bulk_upper: float | None = Field(default=None, allow_inf_nan=False)

    @model_validator(mode="after")
    def _check_bounds(self) -> IntegrationGrid:
        if not self.lower < self.upper:
            raise ValueError(
                f"grid needs lower < upper, got [{self.lower}, {self.upper}]"
            )
        if self.bulk_upper is not None and not self.lower < self.bulk_upper <= self.upper:
            raise ValueError(
                f"bulk end {self.bulk_upper} must lie in ({self.lower}, {self.upper}]"
            )
        return self

    def nodes(self) -> FloatArray:
        if self.bulk_upper is None:
            return np.linspace(self.lower, self.upper, self.n_points)
        return stretched_nodes(self.lower, self.bulk_upper, self.upper, self.n_points)

    def contains(self, x: float) -> bool:
        return self.lower <= x <= self.upper


@runtime_checkable
class PredictiveCdf(Protocol):
    """Anything that can be scored as a predictive law on [0, inf).

    Parametric distributions and pooled CDFs both satisfy this protocol.
    """

    def cdf(self, x: ArrayLike) -> FloatArray:
        """Evaluate the CDF, vectorized over ``x``."""
        ...

    def point_mass_at_zero(self) -> float:
        """Probability of an exact zero (0 for continuous laws)."""
        ...

    def support_upper(self, tail: float) -> float:
        """A point above which at most ``tail`` probability remains."""
        ...
