"""Forecast data sets on disk: a CSV of cases plus a YAML manifest.

The forecast file has one row per (date, station) case with the columns
``date,station,obs,<group>_<index>,...``; the manifest declares the variable,
the stations, the date range and the exchangeable group layout.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np
import pandas as pd
import yaml
from pydantic import BaseModel, Field, model_validator

from src.emos.models import ForecastBatch, GroupLayout, Variable
from src.errors import DatasetError

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.yaml"
KEY_COLUMNS = ["date", "station", "obs"]


class GroupSpec(BaseModel):
    """One exchangeable member group."""

    name: str
    size: int = Field(ge=1)


class DatasetManifest(BaseModel):
    """Sidecar description of a forecast file.

    Attributes:
        variable: Forecast variable
        stations: Station identifiers present in the file
        start_date: First valid day
        end_date: Last valid day
        groups: Exchangeable group layout of the ensemble
        forecast_file: CSV file name, relative to the manifest
    """

    variable: Variable
    stations: list[str]
    start_date: date
    end_date: date
    groups: list[GroupSpec]
    forecast_file: str = "forecasts.csv"

    @model_validator(mode="after")
    def _check_range(self) -> DatasetManifest:
        if self.start_date > self.end_date:
            raise ValueError("start_date must not be after end_date")
        if not self.groups:
            raise ValueError("the manifest must declare at least one member group")
        return self

    @property
    def layout(self) -> GroupLayout:
        return GroupLayout(
            names=[g.name for g in self.groups],
            sizes=[g.size for g in self.groups],
        )

    @property
    def columns(self) -> list[str]:
        return KEY_COLUMNS + list(self.layout.member_columns)


@dataclass(frozen=True)
class Dataset:
    """Cases of one forecast variable, sorted by (date, station).

    Attributes:
        manifest: Layout and range description
        frame: ``date`` (datetime64), ``station`` (str), ``obs`` and one
            float column per member
    """

    manifest: DatasetManifest
    frame: pd.DataFrame

    def __len__(self) -> int:
        return len(self.frame)

    @property
    def layout(self) -> GroupLayout:
        return self.manifest.layout

    def to_batch(self) -> ForecastBatch:
        """Column arrays for fitting and scoring."""
        columns = list(self.layout.member_columns)
        return ForecastBatch(
            dates=self.frame["date"].to_numpy().astype("datetime64[D]"),
            stations=self.frame["station"].to_numpy().astype(np.str_),
            observations=self.frame["obs"].to_numpy(dtype=np.float64),
            members=self.frame[columns].to_numpy(dtype=np.float64),
            layout=self.layout,
            variable=self.manifest.variable,
        )

    @classmethod
    def from_batch(cls, batch: ForecastBatch) -> Dataset:
        frame = pd.DataFrame(
            batch.members, columns=list(batch.layout.member_columns)
        )
        frame.insert(0, "date", pd.to_datetime(batch.dates))
        frame.insert(1, "station", batch.stations.astype(str))
        frame.insert(2, "obs", batch.observations)
        frame = frame.sort_values(["date", "station"], kind="stable").reset_index(drop=True)
        days = batch.unique_dates
        manifest = DatasetManifest(
            variable=batch.variable,
            stations=sorted(set(frame["station"])),
            start_date=days[0].item(),
            end_date=days[-1].item(),
            groups=[
                GroupSpec(name=name, size=size)
                for name, size in zip(batch.layout.names, batch.layout.sizes, strict=True)
            ],
        )
        return cls(manifest=manifest, frame=frame)

    def between(self, start: date | None, end: date | None) -> Dataset:
        """Cases with start <= date <= end; None leaves that side open."""
        mask = pd.Series(True, index=self.frame.index)
        if start is not None:
            mask &= self.frame["date"] >= pd.Timestamp(start)
        if end is not None:
            mask &= self.frame["date"] <= pd.Timestamp(end)
        return Dataset(self.manifest, self.frame[mask].reset_index(drop=True))


def load_manifest(path: Path) -> tuple[DatasetManifest, Path]:
    """Read the manifest at ``path`` or ``path / manifest.yaml``.

    Returns:
        The manifest and the directory it lives in
    """
    manifest_path = path / MANIFEST_FILE if path.is_dir() else path
    if not manifest_path.exists():
        raise DatasetError(f"no manifest at {manifest_path}")
    with open(manifest_path) as f:
        data = yaml.safe_load(f) or {}
    return DatasetManifest(**data), manifest_path.parent


def _parse_column(raw: pd.Series, name: str, parsed: pd.Series) -> None:
    """Raise on the first cell that is present but could not be parsed."""
    bad = raw.notna() & (raw.astype(str).str.strip() != "") & parsed.isna()
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0]) + 1
        raise DatasetError(f"cannot parse {name}={raw[bad].iloc[0]!r}", row=row)


def load_dataset(path: Path) -> Dataset:
    """Load a data set from its manifest and forecast file.

    Rows with a missing observation or member are dropped with a warning.

    Args:
        path: Data set directory or manifest file

    Raises:
        DatasetError: On schema mismatches, unparseable or negative values and
            duplicated (date, station) cases, with the 1-based data row
    """
    manifest, directory = load_manifest(path)
    csv_path = directory / manifest.forecast_file
    if not csv_path.exists():
        raise DatasetError(f"forecast file {csv_path} does not exist")
    raw = pd.read_csv(csv_path, dtype=str, keep_default_na=False, na_values=[""])
    expected = manifest.columns
    if list(raw.columns) != expected:
        missing = [c for c in expected if c not in raw.columns]
        extra = [c for c in raw.columns if c not in expected]
        raise DatasetError(
            f"columns do not match the manifest layout (missing {missing}, unexpected {extra})"
        )

    frame = pd.DataFrame({"station": raw["station"]})
    frame.insert(0, "date", pd.to_datetime(raw["date"], format="%Y-%m-%d", errors="coerce"))
    _parse_column(raw["date"], "date", frame["date"])
    for column in expected[2:]:
        parsed = pd.to_numeric(raw[column], errors="coerce")
        _parse_column(raw[column], column, parsed)
        frame[column] = raw[column].where(parsed.notna()).astype(np.float64)

    values = frame[expected[2:]].to_numpy(dtype=np.float64)
    negative = np.any(values < 0.0, axis=1)
    if negative.any():
        raise DatasetError("negative value", row=int(np.flatnonzero(negative)[0]) + 1)
    duplicated = frame.duplicated(["date", "station"]) & frame["date"].notna()
    if duplicated.any():
        row = int(np.flatnonzero(duplicated.to_numpy())[0]) + 1
        raise DatasetError("duplicated (date, station) case", row=row)
    unknown = frame["station"].notna() & ~frame["station"].isin(manifest.stations)
    if unknown.any():
        row = int(np.flatnonzero(unknown.to_numpy())[0]) + 1
        station = frame["station"][unknown].iloc[0]
        raise DatasetError(f"station {station!r} not in manifest", row=row)

    incomplete = frame.isna().any(axis=1)
    if incomplete.any():
        rows = (np.flatnonzero(incomplete.to_numpy()) + 1).tolist()
        logger.warning(
            f"Dropping {len(rows)} incomplete row(s) from {csv_path.name}: {rows[:10]}"
        )
        frame = frame[~incomplete]
    frame = frame.sort_values(["date", "station"], kind="stable").reset_index(drop=True)
    logger.info(f"Loaded {len(frame)} cases from {csv_path}")
    return Dataset(manifest=manifest, frame=frame)


def write_dataset(dataset: Dataset, directory: Path) -> Path:
    """Write the forecast CSV and manifest; inverse of ``load_dataset``.

    Returns:
        Path of the written manifest
    """
    directory.mkdir(parents=True, exist_ok=True)
    frame = dataset.frame.copy()
    frame["date"] = frame["date"].dt.strftime("%Y-%m-%d")
    frame.to_csv(directory / dataset.manifest.forecast_file, index=False)
    manifest_path = directory / MANIFEST_FILE
    with open(manifest_path, "w") as f:
        yaml.safe_dump(dataset.manifest.model_dump(mode="json"), f, sort_keys=False)
    logger.info(f"Wrote {len(frame)} cases to {directory}")
    return manifest_path
