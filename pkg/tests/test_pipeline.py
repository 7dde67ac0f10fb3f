"""Tests for the train, combine and verify stages and their report files."""

from datetime import date
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from src.combination.models import CombinationMethod
from src.config.loader import PipelineConfig
from src.config.settings import Settings
from src.data.dataset import Dataset
from src.data.simulate import simulate_dataset
from src.emos.models import EmosFamily
from src.engine.pipeline import (
    ENSEMBLE,
    ReportBundle,
    evaluation_days,
    run_pipeline,
    run_settings,
    stage,
)
from src.engine.reports import (
    BOOTSTRAP_MATRIX_FILE,
    COEFFICIENTS_FILE,
    CRPS_TABLE_FILE,
    DM_MATRIX_FILE,
    HISTOGRAMS_FILE,
    PARAMETERS_FILE,
    read_coefficients,
    read_combinations,
    read_table,
    write_reports,
)
from src.errors import DatasetError, PipelineError


@pytest.fixture
def wind_dataset() -> Dataset:
    """Twenty days of the eight-member wind scenario at three stations."""
    data, _ = simulate_dataset("uwme_wind", n_days=20, n_stations=3, seed=4)
    return data


@pytest.fixture
def config() -> PipelineConfig:
    """Short windows, two pooling methods and a small bootstrap."""
    return PipelineConfig(
        window_days=5,
        methods=[CombinationMethod.LP, CombinationMethod.LP_PI],
        mixture=False,
        bootstrap_b=2,
        bootstrap_m=40,
        pit_bins=5,
        grid_points=801,
        fit_grid_points=61,
    )


@pytest.fixture
def bundle(
    config: PipelineConfig, wind_dataset: Dataset, fast_settings: Settings
) -> ReportBundle:
    """A complete run on the wind fixture."""
    return run_pipeline(config, wind_dataset, fast_settings)


class TestRunPipeline:
    """Tests for a complete run."""

    def test_systems(self, bundle: ReportBundle) -> None:
        """Test every system is scored and compared with every other."""
        systems = [ENSEMBLE, "tn", "ln", "lp", "lp-pi"]

        assert list(bundle.verification.series) == systems
        assert {row.system for row in bundle.verification.table.rows} == set(systems)
        assert len(bundle.verification.histograms) == 5
        assert len(bundle.verification.pairwise) == 20
        assert bundle.components == (EmosFamily.TN, EmosFamily.LN)

    def test_fit_coverage(self, bundle: ReportBundle) -> None:
        """Test components start after one window and pools after two."""
        tn_days = sorted(bundle.coefficients[EmosFamily.TN])
        lp_days = sorted(bundle.combinations[CombinationMethod.LP])

        assert len(tn_days) == 15
        assert tn_days[0] == np.datetime64("2008-01-06")
        assert lp_days[0] == np.datetime64("2008-01-11")
        assert set(lp_days) <= set(tn_days)

    def test_table_on_complete_cases(self, bundle: ReportBundle) -> None:
        """Test the score table only counts cases every system covers."""
        table = bundle.verification.table

        assert {row.n_cases for row in table.rows} == {30}
        assert table.best() in {row.system for row in table.rows}

    def test_histograms(self, bundle: ReportBundle) -> None:
        """Test the rank histogram covers all cases and PIT histograms their fits."""
        ranks, *pits = bundle.verification.histograms

        assert ranks.label == ENSEMBLE
        assert len(ranks.counts) == 9
        assert sum(ranks.counts) == 60
        assert [sum(h.counts) for h in pits] == [45, 45, 30, 45]

    def test_deterministic(
        self,
        bundle: ReportBundle,
        config: PipelineConfig,
        wind_dataset: Dataset,
        fast_settings: Settings,
    ) -> None:
        """Test a repeated run reproduces scores and bootstrap results."""
        again = run_pipeline(config, wind_dataset, fast_settings)

        assert again.verification.table.rows == bundle.verification.table.rows
        assert [e.bootstrap for e in again.verification.pairwise] == [
            e.bootstrap for e in bundle.verification.pairwise
        ]

    def test_train_stage_error(
        self, wind_dataset: Dataset, fast_settings: Settings
    ) -> None:
        """Test a failure while training is tagged with its stage."""
        config = PipelineConfig(components=[EmosFamily.CSG, EmosFamily.GEV])

        with pytest.raises(PipelineError, match=r"\[train\]") as excinfo:
            run_pipeline(config, wind_dataset, fast_settings)
        assert excinfo.value.stage == "train"
        assert isinstance(excinfo.value.__cause__, ValueError)


class TestPrecipitationRun:
    """Tests for a run with point-mass components."""

    def test_csg_gev_run(self, fast_settings: Settings) -> None:
        """Test precipitation runs pool CSG and GEV components."""
        data, _ = simulate_dataset("alhu_precip", n_days=14, n_stations=5, seed=6)
        config = PipelineConfig(
            window_days=4,
            methods=[CombinationMethod.LP],
            bootstrap_b=1,
            bootstrap_m=20,
            grid_points=801,
            fit_grid_points=61,
        )

        bundle = run_pipeline(config, data, fast_settings)

        assert bundle.components == (EmosFamily.CSG, EmosFamily.GEV)
        assert set(bundle.coefficients) == {EmosFamily.CSG, EmosFamily.GEV}
        assert list(bundle.verification.series) == [ENSEMBLE, "csg", "gev", "lp"]


class TestComplementaryScenario:
    """Tests for the TN-LN mixture scenario."""

    @pytest.mark.slow
    def test_components_skew_in_opposite_tails(self, fast_settings: Settings) -> None:
        """Test the TN fit misses the upper tail while the LN fit overshoots it."""
        data, _ = simulate_dataset("alhu_wind", n_days=25, n_stations=400, seed=12)
        config = PipelineConfig(
            window_days=5,
            methods=[CombinationMethod.LP_PI],
            mixture=False,
            bootstrap_b=1,
            bootstrap_m=20,
            pit_bins=10,
            grid_points=801,
            fit_grid_points=61,
        )

        bundle = run_pipeline(config, data, fast_settings)
        pits = {h.label: h.counts for h in bundle.verification.histograms[1:]}

        assert pits["tn"][-1] > pits["tn"][0]
        assert pits["ln"][-1] < pits["ln"][0]


class TestStageHelpers:
    """Tests for stage tagging, settings overrides and the evaluation range."""

    def test_stage_wraps_errors(self) -> None:
        """Test errors inside a stage become a tagged PipelineError."""
        with pytest.raises(PipelineError) as excinfo:
            with stage("verify"):
                raise KeyError("lp")

        assert excinfo.value.stage == "verify"
        assert isinstance(excinfo.value.__cause__, KeyError)

    def test_stage_keeps_pipeline_errors(self) -> None:
        """Test an already tagged error passes through unchanged."""
        error = PipelineError("train", "inner")

        with pytest.raises(PipelineError) as excinfo:
            with stage("verify"):
                raise error
        assert excinfo.value is error

    def test_run_settings(self, fast_settings: Settings) -> None:
        """Test grid overrides apply on top of the process settings."""
        config = PipelineConfig(grid_points=99)

        updated = run_settings(config, fast_settings)

        assert updated.grid_points == 99
        assert updated.fit_grid_points == fast_settings.fit_grid_points
        assert run_settings(PipelineConfig(), fast_settings) is fast_settings

    def test_evaluation_days(self, wind_dataset: Dataset) -> None:
        """Test the evaluation range keeps both ends."""
        config = PipelineConfig(
            evaluation_start=date(2008, 1, 5), evaluation_end=date(2008, 1, 7)
        )

        days = evaluation_days(config, wind_dataset.to_batch())

        assert days.tolist() == [date(2008, 1, 5), date(2008, 1, 6), date(2008, 1, 7)]


class TestReports:
    """Tests for the report files."""

    def test_write_reports(self, bundle: ReportBundle, tmp_path: Path) -> None:
        """Test every report file is written with its header."""
        paths = write_reports(bundle, tmp_path)

        assert {p.name for p in paths} == {
            COEFFICIENTS_FILE,
            PARAMETERS_FILE,
            CRPS_TABLE_FILE,
            HISTOGRAMS_FILE,
            DM_MATRIX_FILE,
            BOOTSTRAP_MATRIX_FILE,
        }
        bootstrap = pd.read_csv(tmp_path / BOOTSTRAP_MATRIX_FILE)
        assert len(bootstrap) == 20
        assert bootstrap["repetitions"].eq(40).all()

    def test_read_table(self, bundle: ReportBundle, tmp_path: Path) -> None:
        """Test the written score table parses back to the run's means."""
        write_reports(bundle, tmp_path)

        means = read_table(tmp_path / CRPS_TABLE_FILE)

        expected = {row.system: row.mean for row in bundle.verification.table.rows}
        assert means == pytest.approx(expected)

    def test_read_fits(self, bundle: ReportBundle, tmp_path: Path) -> None:
        """Test written coefficients and pool parameters parse back."""
        write_reports(bundle, tmp_path)

        coefficients = read_coefficients(tmp_path / COEFFICIENTS_FILE)
        combinations = read_combinations(tmp_path / PARAMETERS_FILE)

        day = np.datetime64("2008-01-12")
        tn = bundle.coefficients[EmosFamily.TN][day]
        assert coefficients[EmosFamily.TN][day].location == pytest.approx(tn.location)
        assert set(combinations) == {CombinationMethod.LP, CombinationMethod.LP_PI}
        assert combinations[CombinationMethod.LP][day].to_named() == pytest.approx(
            bundle.combinations[CombinationMethod.LP][day].to_named()
        )

    def test_read_wrong_header(self, tmp_path: Path) -> None:
        """Test a file with another header is rejected."""
        path = tmp_path / COEFFICIENTS_FILE
        path.write_text("system,mean_crps,n_cases\nlp,1.0,3\n")

        with pytest.raises(DatasetError, match="columns"):
            read_coefficients(path)

    def test_read_missing(self, tmp_path: Path) -> None:
        """Test a missing report file is reported."""
        with pytest.raises(DatasetError, match="does not exist"):
            read_table(tmp_path / CRPS_TABLE_FILE)
