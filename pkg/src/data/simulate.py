"""Synthetic forecast data sets with known truth.

Each scenario draws a latent gamma signal per (day, station), perturbs it
into ensemble members group by group, and then draws the observation from a
truth law obtained by applying EMOS link coefficients to the simulated
ensemble. The truth coefficients are returned with the data so tests can
check estimators against them.
"""

from __future__ import annotations

import logging
from datetime import date
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import stats

from src.config.loader import ScenarioConfig, load_scenario
from src.data.dataset import Dataset
from src.distributions import kernels as dk
from src.distributions.kernels import FloatArray
from src.emos.links import EnsembleDesign, PredictiveBatch, predictive_arrays
from src.emos.models import EmosCoefficients, EmosFamily, ForecastBatch, GroupLayout
from src.errors import ParameterDomainError
from src.utils.streams import named_stream

logger = logging.getLogger(__name__)

DEFAULT_START = date(2008, 1, 1)


class ShiftRule(str, Enum):
    """How the CSG shift of a truth law is set.

    Attributes:
        FIXED: The shift stored in the truth coefficients
        ZERO_PROBABILITY: Per case, the gamma quantile at the zero
            probability, so every case has exactly that atom at zero
    """

    FIXED = "fixed"
    ZERO_PROBABILITY = "zero_probability"


class TruthRecord(BaseModel):
    """Generator inputs and the truth law of a simulated data set.

    Under ``ShiftRule.ZERO_PROBABILITY`` the shift stored in
    ``coefficients`` is not used; ``observation_law`` rebuilds the law the
    observations were drawn from.

    Attributes:
        scenario: Generator configuration
        seed: Master seed
        n_days: Number of simulated days
        n_stations: Number of stations
        coefficients: Link coefficients of the truth law
        zero_fraction: Empirical share of zero observations
        zero_probability: Atom at zero of every case under the per-case shift
        shift_rule: How the CSG shift was set
    """

    model_config = ConfigDict(frozen=True)

    scenario: ScenarioConfig
    seed: int
    n_days: int = Field(ge=1)
    n_stations: int = Field(ge=1)
    coefficients: EmosCoefficients
    zero_fraction: float = Field(ge=0.0, le=1.0)
    zero_probability: float | None = Field(default=None, gt=0.0, lt=1.0)
    shift_rule: ShiftRule = ShiftRule.FIXED

    def observation_law(self, batch: ForecastBatch) -> PredictiveBatch:
        """Per-case law the observations of ``batch`` were drawn from."""
        zero_probability = (
            self.zero_probability if self.shift_rule == ShiftRule.ZERO_PROBABILITY else None
        )
        return truth_law(self.coefficients, batch, zero_probability)


def truth_coefficients(scenario: ScenarioConfig) -> EmosCoefficients:
    """Truth link coefficients; the location slope acts on the ensemble mean."""
    layout = scenario.layout

    def location(a0: float, a: float) -> list[float]:
        return [a0] + [a / layout.n_members] * layout.n_groups

    family = scenario.truth_family
    base: dict[str, object] = {
        "family": family,
        "location": location(*scenario.truth_location),
        "spread": list(scenario.truth_spread),
    }
    match family:
        case EmosFamily.CSG:
            base["shift"] = scenario.truth_shift or 1.0
        case EmosFamily.TNLN:
            assert scenario.ln_location is not None and scenario.ln_spread is not None
            base["weight"] = scenario.mixture_weight
            base["secondary"] = EmosCoefficients(
                family=EmosFamily.LN,
                location=location(*scenario.ln_location),
                spread=list(scenario.ln_spread),
            )
    return EmosCoefficients(**base)


def simulate_members(
    scenario: ScenarioConfig, n_days: int, n_stations: int, rng: np.random.Generator
) -> FloatArray:
    """Ensemble members of shape (n_days * n_stations, M), day-major."""
    layout = scenario.layout
    factors = np.exp(rng.normal(0.0, scenario.station_spread, size=n_stations))
    signal = rng.gamma(scenario.signal_shape, scenario.signal_scale, size=(n_days, n_stations))
    signal = (signal * factors).reshape(-1, 1)
    bias = np.repeat(
        scenario.group_bias or [0.0] * layout.n_groups, layout.sizes
    ).astype(np.float64)
    noise = rng.normal(size=(len(signal), layout.n_members))
    members = signal + bias + scenario.member_sd * np.sqrt(signal) * noise
    return np.maximum(members, 0.0)


def truth_law(
    truth: EmosCoefficients,
    batch: ForecastBatch,
    zero_probability: float | None = None,
) -> PredictiveBatch:
    """The truth law of every case of ``batch``.

    With ``zero_probability`` a CSG truth uses, case by case, the shift
    delta = theta * Q_kappa(zero_probability) that puts exactly this mass at
    zero.

    Raises:
        ParameterDomainError: If the truth link leaves its domain on some case
    """
    law = predictive_arrays(truth, EnsembleDesign.from_batch(batch))
    if not law.is_valid():
        raise ParameterDomainError(f"{truth.family.value} truth link is invalid on this ensemble")
    if truth.family != EmosFamily.CSG or zero_probability is None:
        return law
    q = law.params
    delta = stats.gamma.ppf(zero_probability, q["kappa"], scale=q["theta"])
    return PredictiveBatch(law.family, {**q, "delta": np.asarray(delta, dtype=np.float64)})


def draw_observations(
    truth: EmosCoefficients,
    batch: ForecastBatch,
    rng: np.random.Generator,
    zero_probability: float | None = None,
) -> FloatArray:
    """One observation per case from ``truth_law`` by inversion.

    Raises:
        ParameterDomainError: If the truth link leaves its domain on some case
    """
    law = truth_law(truth, batch, zero_probability)
    q = law.params
    u = rng.uniform(size=len(batch))
    match truth.family:
        case EmosFamily.TN:
            return dk.tn_quantile(u, q["mu"], q["sigma"])
        case EmosFamily.LN:
            return dk.ln_quantile(u, q["mu"], q["sigma"])
        case EmosFamily.CSG:
            return dk.csg_quantile(u, q["kappa"], q["theta"], q["delta"])
        case EmosFamily.GEV:
            return dk.cgev_quantile(u, q["mu"], q["sigma"], q["xi"])
        case EmosFamily.TNLN:
            from_tn = rng.uniform(size=len(batch)) < q["weight"]
            return np.where(
                from_tn,
                dk.tn_quantile(u, q["mu"], q["sigma"]),
                dk.ln_quantile(u, q["ln_mu"], q["ln_sigma"]),
            )
    raise ValueError(f"unknown family {truth.family}")


def simulate_batch(
    scenario: ScenarioConfig,
    n_days: int,
    n_stations: int,
    seed: int = 0,
    truth: EmosCoefficients | None = None,
    start: date = DEFAULT_START,
) -> tuple[ForecastBatch, EmosCoefficients]:
    """Simulated cases and the truth coefficients they were drawn from.

    Args:
        scenario: Generator configuration
        n_days: Consecutive days to simulate
        n_stations: Stations per day
        seed: Master seed; the simulation substream is derived from it
        truth: Truth coefficients overriding the scenario's truth law
        start: First simulated day
    """
    if n_days < 1 or n_stations < 1:
        raise ValueError("at least one day and one station are required")
    truth = truth or truth_coefficients(scenario)
    layout: GroupLayout = scenario.layout
    if truth.n_groups != layout.n_groups:
        raise ValueError(f"truth has {truth.n_groups} groups, layout {layout.n_groups}")
    rng = named_stream(seed, "simulation")
    members = simulate_members(scenario, n_days, n_stations, rng)
    days = np.datetime64(start, "D") + np.arange(n_days)
    stations = np.array([f"st{k:03d}" for k in range(1, n_stations + 1)], dtype=np.str_)
    batch = ForecastBatch(
        dates=np.repeat(days, n_stations),
        stations=np.tile(stations, n_days),
        observations=np.zeros(len(members)),
        members=members,
        layout=layout,
        variable=scenario.variable,
    )
    zero_probability = scenario.zero_probability if truth.family == EmosFamily.CSG else None
    observations = draw_observations(truth, batch, rng, zero_probability)
    batch = ForecastBatch(
        dates=batch.dates,
        stations=batch.stations,
        observations=np.maximum(observations, 0.0),
        members=members,
        layout=layout,
        variable=scenario.variable,
    )
    return batch, truth


def simulate_dataset(
    scenario: str | ScenarioConfig,
    n_days: int,
    n_stations: int,
    seed: int = 0,
    start: date = DEFAULT_START,
) -> tuple[Dataset, TruthRecord]:
    """Simulate a named scenario into a data set plus its truth record.

    The same seed always yields the same data set.

    Raises:
        ValueError: For an unknown scenario or non-positive dimensions
    """
    config = load_scenario(scenario) if isinstance(scenario, str) else scenario
    batch, truth = simulate_batch(config, n_days, n_stations, seed, start=start)
    zero_fraction = float(np.mean(batch.observations == 0.0))
    zero_probability = config.zero_probability if truth.family == EmosFamily.CSG else None
    logger.info(
        f"Simulated {config.name}: {n_days} days x {n_stations} stations, "
        f"{config.layout.n_members} members, zero fraction {zero_fraction:.3f}"
    )
    record = TruthRecord(
        scenario=config,
        seed=seed,
        n_days=n_days,
        n_stations=n_stations,
        coefficients=truth,
        zero_fraction=zero_fraction,
        zero_probability=zero_probability,
        shift_rule=(
            ShiftRule.FIXED if zero_probability is None else ShiftRule.ZERO_PROBABILITY
        ),
    )
    return Dataset.from_batch(batch), record
