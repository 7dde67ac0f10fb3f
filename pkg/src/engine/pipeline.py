"""Train, combine and verify stages of a post-processing run.

Each stage is callable on its own so the CLI can chain them through files;
``run_pipeline`` runs all of them on one data set and collects every result
in a ``ReportBundle``. Failures inside a stage surface as a ``PipelineError``
tagged with the stage name.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator, Mapping
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from src.combination.components import (
    ComponentPair,
    pool_terms,
    pooled_cdf_values,
    pooled_crps_values,
)
from src.combination.models import CombinationMethod, CombinationParams
from src.combination.rolling import History, rolling_combination, rolling_plugin
from src.config.loader import PipelineConfig
from src.config.settings import Settings, get_settings
from src.data.dataset import Dataset
from src.emos.links import history_predictive
from src.emos.models import EmosFamily, ForecastBatch, Objective, Variable
from src.emos.rolling import rolling_fit
from src.errors import PipelineError
from src.utils.streams import RandomStreams
from src.verification.histograms import (
    histogram_from_pit,
    randomized_pit_values,
    rank_histogram,
)
from src.verification.models import HistogramResult, PairwiseEntry, ScoreSeries, ScoreTable
from src.verification.significance import pairwise_matrices
from src.verification.tables import ensemble_score_series, score_table

logger = logging.getLogger(__name__)

ENSEMBLE = "ensemble"

ComponentFits = dict[EmosFamily, History]
CombinationFits = dict[CombinationMethod, dict[np.datetime64, CombinationParams]]


@dataclass(frozen=True)
class Verification:
    """Evaluation-range results of every forecast system.

    Attributes:
        series: Per-case CRPS by system
        table: Mean CRPS over the cases all systems cover
        histograms: Ensemble rank histogram and one PIT histogram per system
        pairwise: DM and bootstrap results for every ordered pair of systems
    """

    series: dict[str, ScoreSeries]
    table: ScoreTable
    histograms: list[HistogramResult]
    pairwise: list[PairwiseEntry]


@dataclass(frozen=True)
class ReportBundle:
    """Everything a full run produces, ready for ``write_reports``."""

    config: PipelineConfig
    coefficients: ComponentFits
    combinations: CombinationFits
    verification: Verification
    components: tuple[EmosFamily, EmosFamily]


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Tag any failure inside the block with the stage ``name``."""
    logger.info(f"Starting stage {name}")
    try:
        yield
    except PipelineError:
        raise
    except Exception as exc:
        logger.error(f"Stage {name} failed: {exc}", exc_info=True)
        raise PipelineError(name, str(exc)) from exc
    logger.info(f"Finished stage {name}")


def run_settings(config: PipelineConfig, settings: Settings | None = None) -> Settings:
    """Process settings with the run's grid overrides applied."""
    settings = settings or get_settings()
    update = {
        key: value
        for key in ("grid_points", "fit_grid_points")
        if (value := getattr(config, key)) is not None
    }
    return settings.model_copy(update=update) if update else settings


def evaluation_days(config: PipelineConfig, batch: ForecastBatch) -> NDArray[np.datetime64]:
    """Days of ``batch`` inside the configured evaluation range."""
    days = batch.unique_dates
    if config.evaluation_start is not None:
        days = days[days >= np.datetime64(config.evaluation_start, "D")]
    if config.evaluation_end is not None:
        days = days[days <= np.datetime64(config.evaluation_end, "D")]
    return days


def train_components(
    config: PipelineConfig, batch: ForecastBatch, settings: Settings | None = None
) -> ComponentFits:
    """Rolling EMOS fits of both components, plus the TN-LN mixture for wind.

    Components are fitted on every day up to the end of the evaluation range,
    since combination windows need component fits of the days before them.
    """
    settings = settings or get_settings()
    days = batch.unique_dates
    if config.evaluation_end is not None:
        days = days[days <= np.datetime64(config.evaluation_end, "D")]
    families: list[tuple[EmosFamily, Objective]] = [
        (family, config.objective) for family in config.component_families(batch.variable)
    ]
    if config.mixture and batch.variable == Variable.WIND_SPEED:
        families.append((EmosFamily.TNLN, Objective.ML))
    fits: ComponentFits = {}
    for family, objective in families:
        fits[family] = rolling_fit(
            batch,
            family,
            config.window_days,
            objective,
            target_dates=days,
            mode=config.rolling_mode,
            settings=settings,
        )
        logger.info(f"{family.value}: fitted {len(fits[family])} target days")
    return fits


def combine_components(
    config: PipelineConfig,
    batch: ForecastBatch,
    coefficients: Mapping[EmosFamily, History],
    settings: Settings | None = None,
) -> CombinationFits:
    """Rolling pool fits for every configured method on the evaluation days."""
    settings = settings or get_settings()
    g_family, h_family = config.component_families(batch.variable)
    g_history, h_history = coefficients[g_family], coefficients[h_family]
    targets = evaluation_days(config, batch)
    fits: CombinationFits = {}
    for method in config.methods:
        if method == CombinationMethod.LP_PI:
            weights = rolling_plugin(
                batch, g_history, h_history, config.window_days, targets, settings
            )
            fits[method] = {day: w.as_params() for day, w in weights.items()}
            degenerate = sum(w.degenerate for w in weights.values())
            if degenerate:
                logger.warning(f"{method.value}: {degenerate} degenerate window(s), omega=0.5")
        else:
            fits[method] = rolling_combination(
                batch,
                method,
                g_history,
                h_history,
                config.window_days,
                n_components=config.bml_components,
                target_dates=targets,
                mode=config.rolling_mode,
                settings=settings,
            )
        logger.info(f"{method.value}: fitted {len(fits[method])} target days")
    return fits


@dataclass
class _SystemScores:
    """CRPS and PIT inputs of one system, accumulated day by day."""

    label: str
    batches: list[ForecastBatch] = field(default_factory=list)
    crps: list[NDArray[np.float64]] = field(default_factory=list)
    at_obs: list[NDArray[np.float64]] = field(default_factory=list)
    at_zero: list[NDArray[np.float64]] = field(default_factory=list)

    def add(
        self,
        batch: ForecastBatch,
        crps: NDArray[np.float64],
        at_obs: NDArray[np.float64],
        at_zero: NDArray[np.float64],
    ) -> None:
        self.batches.append(batch)
        self.crps.append(crps)
        self.at_obs.append(at_obs)
        self.at_zero.append(at_zero)

    def series(self) -> ScoreSeries | None:
        if not self.batches:
            return None
        return ScoreSeries.create(
            np.concatenate([b.dates for b in self.batches]),
            np.concatenate([b.stations for b in self.batches]),
            np.concatenate(self.crps),
            self.label,
        )

    def pit_histogram(self, rng: np.random.Generator, bins: int) -> HistogramResult:
        if not self.batches:
            return histogram_from_pit(np.empty(0), bins, self.label)
        pits = randomized_pit_values(
            np.concatenate(self.at_obs),
            np.concatenate(self.at_zero),
            np.concatenate([b.observations for b in self.batches]),
            rng,
        )
        return histogram_from_pit(pits, bins, self.label)


def _component_scores(
    family: EmosFamily, history: History, batch: ForecastBatch, settings: Settings
) -> _SystemScores:
    """Scores of one EMOS family; the TN-LN mixture is integrated numerically."""
    scores = _SystemScores(family.value)
    covered = batch.on_dates(np.array(sorted(history), dtype="datetime64[D]"))
    if len(covered):
        law = history_predictive(history, covered)
        scores.add(
            covered,
            pool_terms(
                [law],
                covered.observations,
                settings.grid_points,
                settings.grid_tail_probability,
            ).cross[0, 0],
            law.cdf(covered.observations),
            law.point_mass_at_zero(),
        )
    return scores


def _combination_scores(
    method: CombinationMethod,
    fits: Mapping[np.datetime64, CombinationParams],
    g_history: History,
    h_history: History,
    batch: ForecastBatch,
    settings: Settings,
) -> _SystemScores:
    scores = _SystemScores(method.value)
    for day in batch.unique_dates:
        if day not in fits:
            continue
        part = batch.on_dates(np.array([day]))
        pair = ComponentPair.from_history(g_history, h_history, part)
        params = fits[day]
        scores.add(
            part,
            pooled_crps_values(
                params, pair, settings.grid_points, settings.grid_tail_probability
            ),
            pooled_cdf_values(params, pair, part.observations),
            pooled_cdf_values(params, pair, np.zeros(len(part))),
        )
    return scores


def verify_systems(
    config: PipelineConfig,
    batch: ForecastBatch,
    coefficients: Mapping[EmosFamily, History],
    combinations: Mapping[CombinationMethod, Mapping[np.datetime64, CombinationParams]],
    settings: Settings | None = None,
) -> Verification:
    """Score every system on the evaluation range and compare them pairwise.

    Systems are the raw ensemble, each fitted EMOS family and each pooling
    method. PIT randomization and the bootstrap draw from the substreams of
    ``config.seed``.
    """
    settings = settings or get_settings()
    streams = RandomStreams(config.seed)
    evaluation = batch.on_dates(evaluation_days(config, batch))
    if len(evaluation) == 0:
        raise ValueError("the evaluation range holds no cases")

    g_family, h_family = config.component_families(batch.variable)
    systems = [
        _component_scores(family, history, evaluation, settings)
        for family, history in coefficients.items()
    ]
    systems += [
        _combination_scores(
            method,
            fits,
            coefficients[g_family],
            coefficients[h_family],
            evaluation,
            settings,
        )
        for method, fits in combinations.items()
    ]

    series: dict[str, ScoreSeries] = {ENSEMBLE: ensemble_score_series(evaluation, ENSEMBLE)}
    for system in systems:
        scored = system.series()
        if scored is None:
            logger.warning(f"{system.label} has no fits in the evaluation range")
            continue
        series[system.label] = scored
    table = score_table(series)
    for row in table.rows:
        logger.info(f"Mean CRPS {row.system}: {row.mean:.4f} over {row.n_cases} cases")

    pit_rng = streams.pit()
    histograms = [
        rank_histogram(evaluation.members, evaluation.observations, streams.ranks(), ENSEMBLE)
    ]
    histograms += [system.pit_histogram(pit_rng, config.pit_bins) for system in systems]

    pairwise = pairwise_matrices(
        series,
        horizon=config.tau,
        block_length=config.bootstrap_b,
        repetitions=config.bootstrap_m,
        seed=streams.bootstrap_seed(),
        settings=settings,
    )
    return Verification(series=series, table=table, histograms=histograms, pairwise=pairwise)


def run_pipeline(
    config: PipelineConfig, dataset: Dataset, settings: Settings | None = None
) -> ReportBundle:
    """Run train, combine and verify on one data set.

    Args:
        config: Run configuration
        dataset: Chronological forecast cases
        settings: Process settings; the run's grid overrides are applied on top

    Returns:
        Fitted coefficients, pool parameters and verification results

    Raises:
        PipelineError: Tagged with the failing stage; the original error is
            chained as ``__cause__``
    """
    settings = run_settings(config, settings)
    batch = dataset.to_batch()
    with stage("train"):
        components = config.component_families(batch.variable)
        coefficients = train_components(config, batch, settings)
    with stage("combine"):
        combinations = combine_components(config, batch, coefficients, settings)
    with stage("verify"):
        verification = verify_systems(config, batch, coefficients, combinations, settings)
    logger.info(f"Best system: {verification.table.best()}")
    return ReportBundle(
        config=config,
        coefficients=coefficients,
        combinations=combinations,
        verification=verification,
        components=components,
    )
