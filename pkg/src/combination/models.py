"""Pooling methods and their parameters."""

from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator

# Default beta-mixture lattice used to initialize BM_L fits
DEFAULT_BETA_LATTICE: tuple[tuple[float, float], ...] = ((0.5, 0.5), (1.0, 1.0), (2.0, 2.0))


class CombinationMethod(str, Enum):
    """Two-step pooling methods.

    Attributes:
        LP: Linear pool with optimized weight
        LP_PI: Linear pool with the closed-form plug-in weight
        SLP: Spread-adjusted linear pool
        BLP: Beta-transformed linear pool
        BML: Finite beta mixture of a linear pool
    """

    LP = "lp"
    LP_PI = "lp-pi"
    SLP = "slp"
    BLP = "blp"
    BML = "bml"

    @property
    def is_linear(self) -> bool:
        return self in (CombinationMethod.LP, CombinationMethod.LP_PI)


class BetaComponent(BaseModel):
    """One component w_l * B_{alpha_l, beta_l} of a beta mixture."""

    model_config = ConfigDict(frozen=True)

    weight: float = Field(ge=0.0, le=1.0)
    alpha: float = Field(gt=0.0, allow_inf_nan=False)
    beta: float = Field(gt=0.0, allow_inf_nan=False)


class CombinationParams(BaseModel):
    """Parameters of a pooled predictive CDF.

    Attributes:
        method: Pooling method
        omega: Weight of the first component G
        c: Spread adjustment (SLP only; 1 elsewhere)
        alpha: Beta transform shape (BLP only; 1 elsewhere)
        beta: Beta transform shape (BLP only; 1 elsewhere)
        components: Beta mixture components (BM_L only)
    """

    model_config = ConfigDict(frozen=True)

    method: CombinationMethod
    omega: float = Field(default=0.5, ge=0.0, le=1.0)
    c: float = Field(default=1.0, gt=0.0, allow_inf_nan=False)
    alpha: float = Field(default=1.0, gt=0.0, allow_inf_nan=False)
    beta: float = Field(default=1.0, gt=0.0, allow_inf_nan=False)
    components: list[BetaComponent] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_method_fields(self) -> CombinationParams:
        if self.method == CombinationMethod.BML:
            if not self.components:
                raise ValueError("BM_L needs at least one beta component")
            total = sum(comp.weight for comp in self.components)
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"beta mixture weights must sum to 1, got {total}")
        elif self.components:
            raise ValueError(f"{self.method.value} takes no beta mixture components")
        return self

    @classmethod
    def initial(cls, method: CombinationMethod, n_components: int = 3) -> CombinationParams:
        """Starting values: omega 0.5, c 1, alpha = beta = 1, uniform BM_L weights.

        BM_L components are spread over a lattice of (alpha, beta) pairs,
        cycling through ``DEFAULT_BETA_LATTICE`` when more are requested.
        """
        if method != CombinationMethod.BML:
            return cls(method=method)
        lattice = [
            DEFAULT_BETA_LATTICE[i % len(DEFAULT_BETA_LATTICE)] for i in range(n_components)
        ]
        return cls(
            method=method,
            components=[
                BetaComponent(weight=1.0 / n_components, alpha=a, beta=b) for a, b in lattice
            ],
        )

    def to_named(self) -> dict[str, float]:
        """Flat name -> value mapping used by combination tables."""
        named = {"omega": self.omega}
        if self.method == CombinationMethod.SLP:
            named["c"] = self.c
        if self.method == CombinationMethod.BLP:
            named |= {"alpha": self.alpha, "beta": self.beta}
        for i, comp in enumerate(self.components, start=1):
            named |= {f"w_{i}": comp.weight, f"alpha_{i}": comp.alpha, f"beta_{i}": comp.beta}
        return named

    @classmethod
    def from_named(
        cls, method: CombinationMethod, named: dict[str, float]
    ) -> CombinationParams:
        n_components = sum(1 for k in named if k.startswith("w_"))
        components = [
            BetaComponent(
                weight=named[f"w_{i}"], alpha=named[f"alpha_{i}"], beta=named[f"beta_{i}"]
            )
            for i in range(1, n_components + 1)
        ]
        return cls(
            method=method,
            omega=named["omega"],
            c=named.get("c", 1.0),
            alpha=named.get("alpha", 1.0),
            beta=named.get("beta", 1.0),
            components=components,
        )


class PluginWeight(BaseModel):
    """Closed-form plug-in LP weight with its training-sample diagnostics.

    Attributes:
        omega: Weight clamped to [0, 1]
        omega_unclamped: Unconstrained minimizer of the quadratic
        mean_crps_g: Mean CRPS of G over the window
        mean_crps_h: Mean CRPS of H over the window
        mean_cross: Mean cross term of G and H over the window
        mean_crps_pool: Mean CRPS of the pool with weight ``omega``
        degenerate: G and H coincide on the window, so omega defaults to 0.5
    """

    model_config = ConfigDict(frozen=True)

    omega: float = Field(ge=0.0, le=1.0)
    omega_unclamped: float
    mean_crps_g: float
    mean_crps_h: float
    mean_cross: float
    mean_crps_pool: float
    degenerate: bool = False

    def as_params(self) -> CombinationParams:
        return CombinationParams(method=CombinationMethod.LP_PI, omega=self.omega)


class MultiPluginWeights(BaseModel):
    """Plug-in weights of an r-component linear pool.

    Attributes:
        weights: Simplex weights, one per component
        mean_crps_pool: Training mean CRPS at ``weights``
        support: Indices of the components with nonzero weight
        degenerate: All components coincide; weights are uniform
        non_identified: The quadratic form is singular, so the split among
            collinear components is one of several optimal splits
        fallback: No support set of the quadratic form was solvable, so the
            weights are uniform rather than a minimizer
    """

    model_config = ConfigDict(frozen=True)

    weights: list[float]
    mean_crps_pool: float
    support: list[int]
    degenerate: bool = False
    non_identified: bool = False
    fallback: bool = False
