"""Forecast data sets: on-disk format and synthetic generators."""

from src.data.dataset import (
    Dataset,
    DatasetManifest,
    GroupSpec,
    load_dataset,
    load_manifest,
    write_dataset,
)
from src.data.simulate import (
    ShiftRule,
    TruthRecord,
    draw_observations,
    simulate_batch,
    simulate_dataset,
    truth_coefficients,
    truth_law,
)

__all__ = [
    "Dataset",
    "DatasetManifest",
    "GroupSpec",
    "load_dataset",
    "load_manifest",
    "write_dataset",
    "ShiftRule",
    "TruthRecord",
    "draw_observations",
    "simulate_batch",
    "simulate_dataset",
    "truth_coefficients",
    "truth_law",
]
