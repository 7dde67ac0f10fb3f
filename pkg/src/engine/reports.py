"""CSV report files and the coefficient tables that chain CLI stages.

All tables are long format so every file re-parses with ``pandas.read_csv``
under a fixed header:

    coefficients.csv      date,family,name,value
    parameters.csv        date,method,name,value
    crps_table.csv        system,mean_crps,n_cases
    histograms.csv        system,kind,bin_left,bin_right,count
    dm_matrix.csv         row,column,statistic,p_value,n,horizon,variance_fallback
    bootstrap_matrix.csv  row,column,proportion_negative,repetitions,block_length
"""

from __future__ import annotations

import logging
from collections import defaultdict
from collections.abc import Mapping, Sequence
from pathlib import Path

import numpy as np
import pandas as pd

from src.combination.models import CombinationMethod, CombinationParams
from src.emos.models import EmosCoefficients, EmosFamily
from src.engine.pipeline import CombinationFits, ComponentFits, ReportBundle, Verification
from src.errors import DatasetError
from src.verification.models import HistogramResult, PairwiseEntry, ScoreTable

logger = logging.getLogger(__name__)

COEFFICIENTS_FILE = "coefficients.csv"
PARAMETERS_FILE = "parameters.csv"
CRPS_TABLE_FILE = "crps_table.csv"
HISTOGRAMS_FILE = "histograms.csv"
DM_MATRIX_FILE = "dm_matrix.csv"
BOOTSTRAP_MATRIX_FILE = "bootstrap_matrix.csv"

COEFFICIENT_COLUMNS = ["date", "family", "name", "value"]
PARAMETER_COLUMNS = ["date", "method", "name", "value"]
CRPS_COLUMNS = ["system", "mean_crps", "n_cases"]
HISTOGRAM_COLUMNS = ["system", "kind", "bin_left", "bin_right", "count"]
DM_COLUMNS = ["row", "column", "statistic", "p_value", "n", "horizon", "variance_fallback"]
BOOTSTRAP_COLUMNS = ["row", "column", "proportion_negative", "repetitions", "block_length"]


def _write(frame: pd.DataFrame, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    logger.info(f"Wrote {path}")
    return path


def _read(path: Path, columns: list[str]) -> pd.DataFrame:
    if not path.exists():
        raise DatasetError(f"{path} does not exist")
    frame = pd.read_csv(path)
    if list(frame.columns) != columns:
        raise DatasetError(f"{path.name} has columns {list(frame.columns)}, expected {columns}")
    return frame


def coefficients_frame(coefficients: ComponentFits) -> pd.DataFrame:
    rows = [
        (str(day), family.value, name, value)
        for family, history in coefficients.items()
        for day in sorted(history)
        for name, value in history[day].to_named().items()
    ]
    return pd.DataFrame(rows, columns=COEFFICIENT_COLUMNS)


def write_coefficients(coefficients: ComponentFits, path: Path) -> Path:
    return _write(coefficients_frame(coefficients), path)


def read_coefficients(path: Path) -> ComponentFits:
    """Inverse of ``write_coefficients``.

    Raises:
        DatasetError: If the file is missing or has another header
    """
    frame = _read(path, COEFFICIENT_COLUMNS)
    grouped: dict[EmosFamily, dict[np.datetime64, dict[str, float]]] = defaultdict(
        lambda: defaultdict(dict)
    )
    for day, family, name, value in frame.itertuples(index=False):
        grouped[EmosFamily(family)][np.datetime64(day, "D")][name] = float(value)
    return {
        family: {
            day: EmosCoefficients.from_named(family, named) for day, named in days.items()
        }
        for family, days in grouped.items()
    }


def parameters_frame(combinations: CombinationFits) -> pd.DataFrame:
    """Pool parameter trajectories, one row per (day, method, parameter)."""
    rows = [
        (str(day), method.value, name, value)
        for method, fits in combinations.items()
        for day in sorted(fits)
        for name, value in fits[day].to_named().items()
    ]
    return pd.DataFrame(rows, columns=PARAMETER_COLUMNS)


def write_combinations(combinations: CombinationFits, path: Path) -> Path:
    return _write(parameters_frame(combinations), path)


def read_combinations(path: Path) -> CombinationFits:
    """Inverse of ``write_combinations``."""
    frame = _read(path, PARAMETER_COLUMNS)
    grouped: dict[CombinationMethod, dict[np.datetime64, dict[str, float]]] = defaultdict(
        lambda: defaultdict(dict)
    )
    for day, method, name, value in frame.itertuples(index=False):
        grouped[CombinationMethod(method)][np.datetime64(day, "D")][name] = float(value)
    return {
        method: {
            day: CombinationParams.from_named(method, named) for day, named in days.items()
        }
        for method, days in grouped.items()
    }


def crps_table_frame(table: ScoreTable) -> pd.DataFrame:
    return pd.DataFrame(
        [(row.system, row.mean, row.n_cases) for row in table.rows], columns=CRPS_COLUMNS
    )


def histograms_frame(histograms: Sequence[HistogramResult]) -> pd.DataFrame:
    rows = [
        (h.label, h.kind.value, left, right, count)
        for h in histograms
        for left, right, count in zip(h.edges[:-1], h.edges[1:], h.counts, strict=True)
    ]
    return pd.DataFrame(rows, columns=HISTOGRAM_COLUMNS)


def dm_frame(entries: Sequence[PairwiseEntry]) -> pd.DataFrame:
    rows = [
        (
            e.row,
            e.column,
            e.dm.statistic,
            e.dm.p_value,
            e.dm.n,
            e.dm.horizon,
            e.dm.variance_fallback,
        )
        for e in entries
        if e.dm is not None
    ]
    return pd.DataFrame(rows, columns=DM_COLUMNS)


def bootstrap_frame(entries: Sequence[PairwiseEntry]) -> pd.DataFrame:
    rows = [
        (
            e.row,
            e.column,
            e.bootstrap.proportion_negative,
            e.bootstrap.repetitions,
            e.bootstrap.block_length,
        )
        for e in entries
        if e.bootstrap is not None
    ]
    return pd.DataFrame(rows, columns=BOOTSTRAP_COLUMNS)


def write_verification(verification: Verification, directory: Path) -> list[Path]:
    """Write the score table, histograms and pairwise matrices."""
    return [
        _write(crps_table_frame(verification.table), directory / CRPS_TABLE_FILE),
        _write(histograms_frame(verification.histograms), directory / HISTOGRAMS_FILE),
        _write(dm_frame(verification.pairwise), directory / DM_MATRIX_FILE),
        _write(bootstrap_frame(verification.pairwise), directory / BOOTSTRAP_MATRIX_FILE),
    ]


def write_reports(bundle: ReportBundle, directory: Path) -> list[Path]:
    """Write every artifact of a run into ``directory``.

    Returns:
        Paths of the written files
    """
    paths = [
        write_coefficients(bundle.coefficients, directory / COEFFICIENTS_FILE),
        write_combinations(bundle.combinations, directory / PARAMETERS_FILE),
    ]
    paths += write_verification(bundle.verification, directory)
    logger.info(f"Wrote {len(paths)} report files to {directory}")
    return paths


def read_table(path: Path) -> Mapping[str, float]:
    """System -> mean CRPS from a written ``crps_table.csv``."""
    frame = _read(path, CRPS_COLUMNS)
    return dict(zip(frame["system"], frame["mean_crps"].astype(float), strict=True))
