"""Tests for histograms, score tables and significance tests."""

import logging
import math

import numpy as np
import pytest
from scipy import stats

from src.config.settings import Settings
from src.emos.models import ForecastBatch
from src.errors import BlockLengthError, DegenerateEnsembleError, DegenerateVarianceError
from src.verification.histograms import (
    histogram_from_pit,
    observation_ranks,
    pit_histogram,
    pit_values,
    randomized_pit_values,
    rank_histogram,
    uniformity_tests,
)
from src.verification.models import HistogramKind, ScoreSeries
from src.verification.significance import (
    autocovariances,
    block_bootstrap,
    dm_test,
    pairwise_matrices,
)
from src.verification.tables import ensemble_score_series, score_table

START = np.datetime64("2008-01-01", "D")


def make_series(
    values: np.ndarray, label: str = "", stations: tuple[str, ...] = ("a",)
) -> ScoreSeries:
    """Series over consecutive days; ``values`` has one column per station."""
    values = np.asarray(values, dtype=np.float64).reshape(-1, len(stations))
    n_days = values.shape[0]
    dates = np.repeat(START + np.arange(n_days), len(stations))
    names = np.tile(np.array(stations, dtype=np.str_), n_days)
    return ScoreSeries.create(dates, names, values.ravel(), label)


class TestScoreSeries:
    """Tests for per-case score series."""

    def test_create_sorts_cases(self) -> None:
        """Test unsorted columns are ordered by date and station."""
        series = ScoreSeries.create(
            ["2008-01-02", "2008-01-01", "2008-01-01"], ["a", "b", "a"], [3.0, 2.0, 1.0]
        )
        assert list(series.values) == [1.0, 2.0, 3.0]
        assert list(series.stations) == ["a", "b", "a"]

    def test_duplicate_case(self) -> None:
        """Test a repeated (date, station) case is rejected."""
        with pytest.raises(ValueError, match="repeats"):
            ScoreSeries.create(["2008-01-01", "2008-01-01"], ["a", "a"], [1.0, 2.0])

    def test_unsorted_dates(self) -> None:
        """Test direct construction requires sorted dates."""
        with pytest.raises(ValueError, match="sorted"):
            ScoreSeries(
                np.array(["2008-01-02", "2008-01-01"], dtype="datetime64[D]"),
                np.array(["a", "a"], dtype=np.str_),
                np.array([1.0, 2.0]),
            )

    def test_difference_on_common_cases(self) -> None:
        """Test differences cover only the cases both series have."""
        first = make_series(np.array([1.0, 2.0, 3.0]), "F1")
        second = make_series(np.array([0.5, 0.5]), "F2")
        d = first.difference(second)
        assert d.label == "F1 - F2"
        np.testing.assert_allclose(d.values, [0.5, 1.5])


class TestRankHistogram:
    """Tests for verification rank histograms."""

    def test_extreme_ranks(self, rng: np.random.Generator) -> None:
        """Test observations below and above all members get ranks 1 and M + 1."""
        members = np.array([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]])
        ranks = observation_ranks(members, np.array([0.5, 4.0]), rng)
        assert list(ranks) == [1, 4]

    def test_ties_are_randomized(self, rng: np.random.Generator) -> None:
        """Test joint zeros spread over the tied ranks."""
        members = np.zeros((2000, 3))
        ranks = observation_ranks(members, np.zeros(2000), rng)
        assert set(ranks) == {1, 2, 3, 4}

    def test_counts(self, wind_batch: ForecastBatch, rng: np.random.Generator) -> None:
        """Test the histogram has M + 1 bins holding every case."""
        hist = rank_histogram(wind_batch.members, wind_batch.observations, rng, "ensemble")
        assert hist.kind == HistogramKind.RANK
        assert hist.n_bins == 9
        assert hist.n == len(wind_batch)
        assert hist.edges[0] == 0.5
        assert hist.relative_frequencies().sum() == pytest.approx(1.0)

    def test_single_member(self) -> None:
        """Test one member is not an ensemble."""
        with pytest.raises(DegenerateEnsembleError):
            rank_histogram(np.ones((3, 1)), np.ones(3))


class TestPit:
    """Tests for PIT values and histograms."""

    def test_zero_observations_randomized(self, rng: np.random.Generator) -> None:
        """Test PIT values at zero observations fall below the atom."""
        at_zero = np.full(1000, 0.4)
        pits = randomized_pit_values(np.full(1000, 0.4), at_zero, np.zeros(1000), rng)
        assert np.all((pits >= 0.0) & (pits <= 0.4))
        assert pits.std() > 0.05

    def test_positive_observations_not_randomized(self, rng: np.random.Generator) -> None:
        """Test positive observations keep their CDF value."""
        pits = randomized_pit_values([0.3, 0.9], [0.1, 0.1], [1.0, 2.0], rng)
        np.testing.assert_allclose(pits, [0.3, 0.9])

    def test_sequence_of_laws(self) -> None:
        """Test single-case laws give the same PIT as a vectorized CDF."""
        obs = np.array([0.5, 1.0, 2.0])
        vectorized = pit_values(stats.expon.cdf, obs, np.random.default_rng(1))
        per_case = pit_values([stats.expon.cdf] * 3, obs, np.random.default_rng(1))
        np.testing.assert_allclose(vectorized, per_case)

    def test_calibrated_forecast_is_uniform(self, rng: np.random.Generator) -> None:
        """Test observations drawn from the forecast pass the uniformity tests."""
        obs = rng.exponential(size=5000)
        pits = pit_values(stats.expon.cdf, obs, rng)
        hist = histogram_from_pit(pits, 10, "calibrated")
        result = uniformity_tests(hist, pits)
        assert result.chi2_pvalue > 1e-3
        assert result.ks_pvalue is not None and result.ks_pvalue > 1e-3

    def test_underdispersed_forecast_is_not_uniform(self, rng: np.random.Generator) -> None:
        """Test a too-sharp forecast fails the chi-square test."""
        obs = rng.exponential(scale=3.0, size=5000)
        hist = pit_histogram(stats.expon.cdf, obs, bins=10, rng=rng)
        assert uniformity_tests(hist).chi2_pvalue < 1e-6

    def test_histogram_bins(self) -> None:
        """Test PIT values of one land in the last bin."""
        hist = histogram_from_pit([0.0, 0.5, 1.0], bins=4)
        assert hist.counts == [1, 0, 1, 1]
        assert hist.edges == [0.0, 0.25, 0.5, 0.75, 1.0]

    def test_histogram_needs_bins(self) -> None:
        """Test a histogram needs at least one bin."""
        with pytest.raises(ValueError):
            histogram_from_pit([0.5], bins=0)

    def test_empty_histogram_uniformity(self) -> None:
        """Test an empty histogram has nothing to reject."""
        assert uniformity_tests(histogram_from_pit([], 5)).chi2_pvalue == 1.0


class TestDieboldMariano:
    """Tests for the DM test."""

    def test_lag_zero_statistic(self) -> None:
        """Test t_n = sqrt(n) mean / sqrt(gamma_0) at horizon 1."""
        values = np.array([1.0, 2.0, 3.0, 4.0, -1.0])
        result = dm_test(make_series(values), horizon=1)
        gamma0 = np.mean((values - values.mean()) ** 2)
        expected = math.sqrt(5) * values.mean() / math.sqrt(gamma0)
        assert result.statistic == pytest.approx(expected)
        assert result.p_value == pytest.approx(2.0 * stats.norm.sf(abs(expected)))
        assert not result.variance_fallback

    def test_lags_stay_within_station(self) -> None:
        """Test lagged products never pair different stations."""
        values = np.array([[1.0, -1.0], [-1.0, 1.0], [1.0, -1.0]])
        d = make_series(values, stations=("a", "b"))
        gammas = autocovariances(d, 1)
        centred = values - values.mean()
        expected = np.sum(centred[1:] * centred[:-1]) / values.size
        assert gammas[1] == pytest.approx(expected)

    def test_lags_count_calendar_days(self) -> None:
        """Test a missing day leaves a gap instead of pairing its neighbours."""
        days = START + np.array([0, 1, 3, 4])
        d = ScoreSeries.create(days, ["a"] * 4, [1.0, -1.0, 1.0, -1.0])

        gammas = autocovariances(d, 1)

        assert gammas[0] == pytest.approx(1.0)
        assert gammas[1] == pytest.approx(-0.5)

    @pytest.mark.slow
    def test_size_under_the_null(self, rng: np.random.Generator) -> None:
        """Test equal-skill iid differences are rejected about 5% of the time."""
        rejections = [
            dm_test(make_series(rng.standard_normal(200)), horizon=1).p_value < 0.05
            for _ in range(2_000)
        ]
        assert 0.035 <= np.mean(rejections) <= 0.065

    def test_nonpositive_variance_falls_back(self, caplog: pytest.LogCaptureFixture) -> None:
        """Test an alternating series falls back to the lag-0 variance."""
        values = np.tile([1.0, -1.0], 10) + 0.1
        with caplog.at_level(logging.WARNING):
            result = dm_test(make_series(values), horizon=2)
        assert result.variance_fallback
        assert "lag-0" in caplog.text

    def test_zero_variance(self) -> None:
        """Test identical forecasts have no DM statistic."""
        with pytest.raises(DegenerateVarianceError):
            dm_test(make_series(np.zeros(10)))

    @pytest.mark.parametrize("horizon,n", [(0, 10), (1, 1)])
    def test_invalid_inputs(self, horizon: int, n: int) -> None:
        """Test the horizon and sample size bounds."""
        with pytest.raises(ValueError):
            dm_test(make_series(np.arange(n, dtype=float)), horizon=horizon)


class TestBlockBootstrap:
    """Tests for the moving-block bootstrap."""

    def test_reproducible(self, rng: np.random.Generator, fast_settings: Settings) -> None:
        """Test the same seed gives the same repetitions."""
        d = make_series(rng.normal(size=(60, 2)), stations=("a", "b"))
        first = block_bootstrap(d, 5, 200, seed=7, settings=fast_settings)
        second = block_bootstrap(d, 5, 200, seed=7, settings=fast_settings)
        assert first.mean_differences == second.mean_differences

    def test_independent_of_workers(self, rng: np.random.Generator) -> None:
        """Test chunked repetitions do not depend on the worker count."""
        d = make_series(rng.normal(size=40))
        one = block_bootstrap(d, 4, 2500, seed=3, settings=Settings(max_workers=1))
        many = block_bootstrap(d, 4, 2500, seed=3, settings=Settings(max_workers=4))
        assert one.mean_differences == many.mean_differences
        assert len(one.mean_differences) == 2500

    def test_full_length_block(self, rng: np.random.Generator, fast_settings: Settings) -> None:
        """Test b = T always resamples the whole series."""
        values = rng.normal(loc=-0.3, size=30)
        result = block_bootstrap(make_series(values), 30, 50, settings=fast_settings)
        np.testing.assert_allclose(result.mean_differences, values.mean())
        assert result.proportion_negative == float(values.mean() < 0.0)

    def test_block_longer_than_series(self, fast_settings: Settings) -> None:
        """Test a block longer than the series is rejected."""
        with pytest.raises(BlockLengthError):
            block_bootstrap(make_series(np.ones(10)), 11, 5, settings=fast_settings)

    def test_repetitions_positive(self) -> None:
        """Test zero repetitions are rejected."""
        with pytest.raises(ValueError):
            block_bootstrap(make_series(np.ones(10)), 2, 0)

    def test_clear_winner(self, rng: np.random.Generator, fast_settings: Settings) -> None:
        """Test a consistently better system wins nearly every repetition."""
        values = rng.normal(loc=-1.0, scale=0.5, size=100)
        result = block_bootstrap(make_series(values), 10, 500, settings=fast_settings)
        assert result.proportion_negative > 0.95


class TestPairwise:
    """Tests for pairwise comparison matrices."""

    def test_antisymmetric(self, rng: np.random.Generator, fast_settings: Settings) -> None:
        """Test swapping row and column negates the DM statistic."""
        series = {
            name: make_series(rng.gamma(2.0, size=30), name) for name in ("lp", "slp", "blp")
        }
        entries = pairwise_matrices(
            series, block_length=5, repetitions=100, seed=1, settings=fast_settings
        )
        assert len(entries) == 6
        by_pair = {(e.row, e.column): e for e in entries}
        forward, backward = by_pair["lp", "slp"], by_pair["slp", "lp"]
        assert forward.dm is not None and backward.dm is not None
        assert forward.dm.statistic == pytest.approx(-backward.dm.statistic)
        assert forward.dm.p_value == pytest.approx(backward.dm.p_value)
        assert forward.bootstrap is not None and forward.bootstrap.repetitions == 100

    def test_identical_systems(self, caplog: pytest.LogCaptureFixture) -> None:
        """Test identical systems get no DM result and no bootstrap by default."""
        values = np.linspace(0.5, 2.0, 12)
        series = {"tn": make_series(values, "tn"), "copy": make_series(values, "copy")}
        with caplog.at_level(logging.WARNING):
            entries = pairwise_matrices(series)
        assert all(e.dm is None and e.bootstrap is None for e in entries)
        assert "No DM test" in caplog.text


class TestScoreTable:
    """Tests for mean score tables."""

    def test_complete_cases_only(self, caplog: pytest.LogCaptureFixture) -> None:
        """Test cases missing from one system are dropped for all."""
        series = {
            "ensemble": make_series(np.array([1.0, 2.0, 3.0]), "ensemble"),
            "lp": make_series(np.array([0.5, 1.0]), "lp"),
        }
        with caplog.at_level(logging.WARNING):
            table = score_table(series)
        assert [row.system for row in table.rows] == ["ensemble", "lp"]
        assert table.rows[0].mean == pytest.approx(1.5)
        assert table.rows[1].n_cases == 2
        assert table.missing == {"lp": 1}
        assert table.best() == "lp"
        assert "2 of 3 cases" in caplog.text

    def test_empty(self) -> None:
        """Test no systems give an empty table."""
        assert score_table({}).rows == []

    def test_ensemble_series(self, small_batch: ForecastBatch) -> None:
        """Test the raw ensemble is scored once per case."""
        series = ensemble_score_series(small_batch)
        assert series.label == "ensemble"
        assert len(series) == len(small_batch)
        assert np.all(series.values >= 0.0)
