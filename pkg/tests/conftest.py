"""Shared pytest fixtures for the EMOS pooling tests."""

import os
from collections.abc import Generator

import numpy as np
import pytest

# Set test environment before any imports that might cache settings
os.environ["POOLING_ENVIRONMENT"] = "test"

# Clear the settings cache to pick up test environment
from src.config.settings import Settings, get_settings

get_settings.cache_clear()

from src.config.loader import clear_config_cache, load_scenario  # noqa: E402
from src.data.simulate import simulate_batch  # noqa: E402
from src.emos.models import (  # noqa: E402
    EmosCoefficients,
    EmosFamily,
    ForecastBatch,
    GroupLayout,
    Variable,
)


@pytest.fixture(autouse=True)
def clear_cache() -> Generator[None, None, None]:
    """Clear the YAML config cache around each test."""
    clear_config_cache()
    yield
    clear_config_cache()


@pytest.fixture
def fast_settings() -> Settings:
    """Coarse grids and a short optimizer budget for quick fits."""
    return Settings(
        environment="test",
        grid_points=2001,
        fit_grid_points=101,
        optimizer_max_iter=100,
        max_workers=2,
    )


@pytest.fixture
def rng() -> np.random.Generator:
    """Fixed-seed generator for test inputs."""
    return np.random.default_rng(20240601)


@pytest.fixture
def wind_batch() -> ForecastBatch:
    """Forty days of the eight-member wind scenario at six stations."""
    batch, _ = simulate_batch(load_scenario("uwme_wind"), n_days=40, n_stations=6, seed=3)
    return batch


@pytest.fixture
def precip_batch() -> ForecastBatch:
    """Forty days of the grouped precipitation scenario at six stations."""
    batch, _ = simulate_batch(load_scenario("alhu_precip"), n_days=40, n_stations=6, seed=5)
    return batch


@pytest.fixture
def small_layout() -> GroupLayout:
    """Two exchangeable groups: one control and four perturbed members."""
    return GroupLayout(names=["control", "ens"], sizes=[1, 4])


@pytest.fixture
def small_batch(small_layout: GroupLayout) -> ForecastBatch:
    """Three days at two stations with hand-picked wind speeds."""
    days = np.array(["2008-01-01", "2008-01-02", "2008-01-03"], dtype="datetime64[D]")
    members = np.array(
        [
            [3.0, 2.5, 3.5, 4.0, 3.2],
            [5.0, 4.0, 6.0, 5.5, 4.5],
            [2.0, 1.5, 2.5, 2.2, 1.8],
            [6.0, 5.0, 7.0, 6.5, 5.5],
            [4.0, 3.0, 5.0, 4.5, 3.5],
            [1.0, 0.5, 1.5, 1.2, 0.8],
        ]
    )
    return ForecastBatch(
        dates=np.repeat(days, 2),
        stations=np.tile(np.array(["a", "b"], dtype=np.str_), 3),
        observations=np.array([3.1, 5.2, 2.4, 5.8, 4.1, 1.3]),
        members=members,
        layout=small_layout,
        variable=Variable.WIND_SPEED,
    )


@pytest.fixture
def tn_coefficients() -> EmosCoefficients:
    """TN link with location 0.2 plus the ensemble mean of five members."""
    return EmosCoefficients(
        family=EmosFamily.TN, location=[0.2, 0.2, 0.2], spread=[0.5, 0.3]
    )


@pytest.fixture
def ln_coefficients() -> EmosCoefficients:
    """LN link with a larger intercept and a steeper spread than the TN fixture."""
    return EmosCoefficients(
        family=EmosFamily.LN, location=[0.6, 0.18, 0.18], spread=[0.8, 0.4]
    )
