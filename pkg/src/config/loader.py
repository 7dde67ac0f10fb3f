"""Configuration loader with Pydantic models for type safety."""

from __future__ import annotations

from datetime import date
from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, Field, model_validator

from src.combination.models import CombinationMethod
from src.emos.models import EmosFamily, GroupLayout, Objective, Variable
from src.emos.rolling import RollingMode

CONFIG_DIR = Path(__file__).parent

# Component families used when the configuration names none
DEFAULT_COMPONENTS: dict[Variable, tuple[EmosFamily, EmosFamily]] = {
    Variable.WIND_SPEED: (EmosFamily.TN, EmosFamily.LN),
    Variable.PRECIPITATION: (EmosFamily.CSG, EmosFamily.GEV),
}


class PipelineConfig(BaseModel):
    """Run-level settings of one post-processing experiment.

    Attributes:
        window_days: Rolling training window length in available days
        objective: Estimation criterion for the component fits
        components: The two component families; defaults depend on the variable
        methods: Combination methods to fit and evaluate
        mixture: Also fit the joint TN-LN mixture (wind speed only)
        bml_components: Number of beta-mixture components L
        evaluation_start: First day of the evaluation range
        evaluation_end: Last day of the evaluation range
        bootstrap_b: Bootstrap block length in days
        bootstrap_m: Bootstrap repetitions
        tau: DM forecast horizon in days
        seed: Master seed for simulation, PIT randomization and bootstrap
        pit_bins: Number of PIT histogram bins
        rolling_mode: Sequential warm starts or parallel cold starts
        grid_points: Evaluation grid size, overriding ``Settings.grid_points``
        fit_grid_points: Fitting grid size, overriding ``Settings.fit_grid_points``
    """

    window_days: int = Field(default=30, ge=1)
    objective: Objective = Objective.MIN_CRPS
    components: list[EmosFamily] = Field(default_factory=list)
    methods: list[CombinationMethod] = Field(default_factory=lambda: list(CombinationMethod))
    mixture: bool = True
    bml_components: int = Field(default=3, ge=1)
    evaluation_start: date | None = None
    evaluation_end: date | None = None
    bootstrap_b: int = Field(default=50, ge=1)
    bootstrap_m: int = Field(default=10_000, ge=1)
    tau: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0)
    pit_bins: int = Field(default=20, ge=1)
    rolling_mode: RollingMode = RollingMode.SEQUENTIAL
    grid_points: int | None = Field(default=None, ge=2)
    fit_grid_points: int | None = Field(default=None, ge=2)

    @model_validator(mode="after")
    def _check_fields(self) -> PipelineConfig:
        if self.components and len(self.components) != 2:
            raise ValueError(f"exactly two component families are pooled, got {self.components}")
        if EmosFamily.TNLN in self.components:
            raise ValueError("the TN-LN mixture is not a pooling component")
        if (
            self.evaluation_start is not None
            and self.evaluation_end is not None
            and self.evaluation_start > self.evaluation_end
        ):
            raise ValueError("evaluation_start must not be after evaluation_end")
        return self

    def component_families(self, variable: Variable) -> tuple[EmosFamily, EmosFamily]:
        """Configured components, checked against the forecast variable."""
        if not self.components:
            return DEFAULT_COMPONENTS[variable]
        g, h = self.components
        for family in (g, h):
            if family.variable != variable:
                raise ValueError(f"{family.value} does not model {variable.value}")
        return g, h


class ScenarioConfig(BaseModel):
    """Synthetic data generator for one scenario.

    Members are noisy copies of a latent gamma signal, shifted by a bias per
    exchangeable group. Observations are drawn from a truth law whose
    parameters follow the EMOS link of ``truth_family`` applied to the
    simulated ensemble, so the truth coefficients are known exactly.

    Attributes:
        name: Scenario key
        variable: Forecast variable
        group_names: Names of the exchangeable member groups
        group_sizes: Members per group
        signal_shape: Gamma shape of the latent signal
        signal_scale: Gamma scale of the latent signal
        station_spread: Log-scale standard deviation of station signal factors
        group_bias: Additive member bias per group
        member_sd: Member noise standard deviation per unit signal root
        truth_family: Law the observations are drawn from
        truth_location: (a0, a) with a applied to the ensemble mean
        truth_spread: (b0, b1) of the truth link
        truth_shift: CSG shift delta of the truth law
        zero_probability: Fixed probability of a zero observation; replaces
            the CSG shift by the per-case shift giving this atom
        mixture_weight: Weight of the TN part of a TN-LN truth
        ln_location: (a0, a) of the LN part of a TN-LN truth
        ln_spread: (b0, b1) of the LN part of a TN-LN truth
    """

    name: str
    variable: Variable
    group_names: list[str]
    group_sizes: list[int]
    signal_shape: float = Field(gt=0.0)
    signal_scale: float = Field(gt=0.0)
    station_spread: float = Field(default=0.1, ge=0.0)
    group_bias: list[float] = Field(default_factory=list)
    member_sd: float = Field(default=1.0, ge=0.0)
    truth_family: EmosFamily
    truth_location: tuple[float, float]
    truth_spread: tuple[float, float]
    truth_shift: float | None = Field(default=None, gt=0.0)
    zero_probability: float | None = Field(default=None, gt=0.0, lt=1.0)
    mixture_weight: float | None = Field(default=None, ge=0.0, le=1.0)
    ln_location: tuple[float, float] | None = None
    ln_spread: tuple[float, float] | None = None

    @model_validator(mode="after")
    def _check_truth(self) -> ScenarioConfig:
        if self.group_bias and len(self.group_bias) != len(self.group_names):
            raise ValueError("one group bias per group is required")
        if self.truth_family.variable != self.variable:
            raise ValueError(f"{self.truth_family.value} does not model {self.variable.value}")
        if self.truth_family == EmosFamily.GEV:
            raise ValueError("GEV truth is not supported by the generator")
        if self.truth_family == EmosFamily.CSG and (
            self.truth_shift is None and self.zero_probability is None
        ):
            raise ValueError("CSG truth needs truth_shift or zero_probability")
        if self.truth_family == EmosFamily.TNLN and (
            self.mixture_weight is None or self.ln_location is None or self.ln_spread is None
        ):
            raise ValueError("TN-LN truth needs mixture_weight, ln_location and ln_spread")
        return self

    @property
    def layout(self) -> GroupLayout:
        return GroupLayout(names=list(self.group_names), sizes=list(self.group_sizes))


# Config cache to avoid repeated file reads
_config_cache: dict[str, Any] = {}


def _load_yaml(path: Path) -> dict[str, Any]:
    """Load YAML file with caching."""
    key = str(path.resolve())
    if key not in _config_cache:
        with open(path) as f:
            _config_cache[key] = yaml.safe_load(f) or {}
    return _config_cache[key]


def clear_config_cache() -> None:
    """Clear the config cache. Useful for testing."""
    _config_cache.clear()


def load_pipeline_config(
    path: Path | None = None, overrides: dict[str, Any] | None = None
) -> PipelineConfig:
    """Load a pipeline configuration, shipped defaults first.

    Args:
        path: Flat key/value YAML file; keys it sets replace the defaults
        overrides: Values that win over both files, e.g. CLI flags; None
            entries are ignored

    Raises:
        pydantic.ValidationError: If a value violates the field constraints
    """
    data = dict(_load_yaml(CONFIG_DIR / "pipeline.yaml"))
    if path is not None:
        data |= _load_yaml(path)
    if overrides:
        data |= {k: v for k, v in overrides.items() if v is not None}
    return PipelineConfig(**data)


def scenario_names() -> list[str]:
    return sorted(_load_yaml(CONFIG_DIR / "scenarios.yaml"))


def load_scenario(name: str) -> ScenarioConfig:
    """Load a synthetic scenario from scenarios.yaml.

    Raises:
        ValueError: If no scenario has this name
    """
    scenarios = _load_yaml(CONFIG_DIR / "scenarios.yaml")
    if name not in scenarios:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(scenarios)}")
    return ScenarioConfig(name=name, **scenarios[name])
