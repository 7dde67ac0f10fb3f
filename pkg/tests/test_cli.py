"""Tests for the emos-pooling command line."""

from collections.abc import Generator
from pathlib import Path

import pandas as pd
import pytest
import yaml

from src.cli.main import EXIT_CONVERGENCE, EXIT_INVALID, EXIT_OK, TRUTH_FILE, main
from src.config.settings import get_settings
from src.data.dataset import MANIFEST_FILE
from src.engine.reports import (
    BOOTSTRAP_MATRIX_FILE,
    COEFFICIENTS_FILE,
    CRPS_TABLE_FILE,
    DM_MATRIX_FILE,
    HISTOGRAMS_FILE,
    PARAMETERS_FILE,
    read_table,
)

FAST_RUN = {
    "window_days": 4,
    "methods": ["lp", "lp-pi"],
    "mixture": False,
    "bootstrap_b": 2,
    "bootstrap_m": 20,
    "pit_bins": 5,
    "grid_points": 801,
    "fit_grid_points": 61,
}


@pytest.fixture(autouse=True)
def fresh_settings() -> Generator[None, None, None]:
    """Re-read settings from the environment around each test."""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def run_config(tmp_path: Path) -> Path:
    """Pipeline YAML with short windows and coarse grids."""
    path = tmp_path / "pipeline.yaml"
    path.write_text(yaml.safe_dump(FAST_RUN))
    return path


@pytest.fixture
def data_dir(tmp_path: Path) -> Path:
    """A small wind data set written by the simulate command."""
    out = tmp_path / "data"
    code = main(
        [
            "simulate",
            "--scenario",
            "alhu_wind",
            "--days",
            "14",
            "--stations",
            "3",
            "--seed",
            "2",
            "--window-days",
            "4",
            "--out",
            str(out),
        ]
    )
    assert code == EXIT_OK
    return out


def _run_args(command: str, data_dir: Path, out: Path, config: Path) -> list[str]:
    return [command, "--data", str(data_dir), "--out", str(out), "--config", str(config)]


class TestSimulateCommand:
    """Tests for the simulate command."""

    def test_writes_data_set(self, data_dir: Path) -> None:
        """Test simulate writes the manifest, forecasts and truth record."""
        truth = yaml.safe_load((data_dir / TRUTH_FILE).read_text())

        assert (data_dir / MANIFEST_FILE).exists()
        assert len(pd.read_csv(data_dir / "forecasts.csv")) == 42
        assert truth["coefficients"]["family"] == "tnln"
        assert truth["seed"] == 2

    def test_too_few_days(self, tmp_path: Path) -> None:
        """Test the data set must be longer than the training window."""
        code = main(
            [
                "simulate",
                "--scenario",
                "uwme_wind",
                "--days",
                "30",
                "--stations",
                "2",
                "--out",
                str(tmp_path),
            ]
        )

        assert code == EXIT_INVALID

    def test_unknown_scenario(self, tmp_path: Path) -> None:
        """Test an unknown scenario is a usage error."""
        code = main(
            ["simulate", "--scenario", "mars", "--days", "40", "--stations", "2", "--out", str(tmp_path)]
        )

        assert code == EXIT_INVALID


class TestRunCommands:
    """Tests for train, combine, verify and report."""

    def test_report(self, data_dir: Path, run_config: Path, tmp_path: Path) -> None:
        """Test report writes every file and the table lists every system."""
        out = tmp_path / "run"

        code = main(_run_args("report", data_dir, out, run_config))

        assert code == EXIT_OK
        for name in (
            COEFFICIENTS_FILE,
            PARAMETERS_FILE,
            CRPS_TABLE_FILE,
            HISTOGRAMS_FILE,
            DM_MATRIX_FILE,
            BOOTSTRAP_MATRIX_FILE,
        ):
            assert (out / name).exists()
        assert set(read_table(out / CRPS_TABLE_FILE)) == {"ensemble", "tn", "ln", "lp", "lp-pi"}

    def test_stages_match_report(
        self, data_dir: Path, run_config: Path, tmp_path: Path
    ) -> None:
        """Test chaining train, combine and verify gives the report's table."""
        staged, full = tmp_path / "staged", tmp_path / "full"

        for command in ("train", "combine", "verify"):
            assert main(_run_args(command, data_dir, staged, run_config)) == EXIT_OK
        assert main(_run_args("report", data_dir, full, run_config)) == EXIT_OK

        assert read_table(staged / CRPS_TABLE_FILE) == pytest.approx(
            read_table(full / CRPS_TABLE_FILE)
        )

    def test_flags_override_config(
        self, data_dir: Path, run_config: Path, tmp_path: Path
    ) -> None:
        """Test method and bootstrap flags win over the config file."""
        out = tmp_path / "run"
        args = _run_args("report", data_dir, out, run_config)

        code = main(args + ["--methods", "lp", "--bootstrap-m", "7"])

        assert code == EXIT_OK
        assert set(pd.read_csv(out / PARAMETERS_FILE)["method"]) == {"lp"}
        assert set(pd.read_csv(out / BOOTSTRAP_MATRIX_FILE)["repetitions"]) == {7}

    def test_combine_without_coefficients(
        self, data_dir: Path, run_config: Path, tmp_path: Path
    ) -> None:
        """Test combine needs the coefficients written by train."""
        code = main(_run_args("combine", data_dir, tmp_path / "empty", run_config))

        assert code == EXIT_INVALID

    def test_invalid_method(self, data_dir: Path, run_config: Path, tmp_path: Path) -> None:
        """Test an unknown pooling method is invalid configuration."""
        args = _run_args("report", data_dir, tmp_path / "run", run_config)

        assert main(args + ["--methods", "lp,median"]) == EXIT_INVALID

    def test_missing_data(self, run_config: Path, tmp_path: Path) -> None:
        """Test a directory without a data set is invalid input."""
        code = main(_run_args("report", tmp_path / "nowhere", tmp_path / "run", run_config))

        assert code == EXIT_INVALID

    def test_strict_nonconvergence(
        self,
        data_dir: Path,
        run_config: Path,
        tmp_path: Path,
        monkeypatch: pytest.MonkeyPatch,
    ) -> None:
        """Test a fit stopped by the iteration limit exits with the convergence code."""
        monkeypatch.setenv("POOLING_FAIL_ON_NONCONVERGENCE", "true")
        monkeypatch.setenv("POOLING_OPTIMIZER_MAX_ITER", "1")
        get_settings.cache_clear()

        code = main(_run_args("train", data_dir, tmp_path / "run", run_config))

        assert code == EXIT_CONVERGENCE
