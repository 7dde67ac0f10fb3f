"""Verification result types: score series, histograms and test outcomes."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import pandas as pd
from numpy.typing import ArrayLike, NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.distributions.kernels import FloatArray


@dataclass(frozen=True)
class ScoreSeries:
    """Per-case scores of one forecast system, or differences of two.

    Attributes:
        dates: Valid days, ``datetime64[D]``, nondecreasing
        stations: Station identifiers; (date, station) pairs are unique
        values: Score or score difference per case
        label: System name, or ``"F1 - F2"`` for a difference series
    """

    dates: NDArray[np.datetime64]
    stations: NDArray[np.str_]
    values: FloatArray
    label: str = ""

    def __post_init__(self) -> None:
        n = len(self.values)
        if len(self.dates) != n or len(self.stations) != n:
            raise ValueError("dates, stations and values must align")
        if n and np.any(np.diff(self.dates.astype("int64")) < 0):
            raise ValueError("score series must be sorted by date")
        keys = pd.MultiIndex.from_arrays([self.dates, self.stations])
        if keys.has_duplicates:
            raise ValueError(f"score series {self.label!r} repeats a (date, station) case")

    def __len__(self) -> int:
        return len(self.values)

    @classmethod
    def create(
        cls, dates: ArrayLike, stations: ArrayLike, values: ArrayLike, label: str = ""
    ) -> ScoreSeries:
        """Build a series from unsorted columns, sorting by (date, station)."""
        dates = np.asarray(dates, dtype="datetime64[D]")
        stations = np.asarray(stations, dtype=np.str_)
        values = np.asarray(values, dtype=np.float64)
        order = np.lexsort((stations, dates))
        return cls(dates[order], stations[order], values[order], label)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"date": self.dates, "station": self.stations, "value": self.values}
        )

    @property
    def unique_dates(self) -> NDArray[np.datetime64]:
        return np.unique(self.dates)

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    def difference(self, other: ScoreSeries) -> ScoreSeries:
        """Case-wise ``self - other`` on the cases both series cover."""
        merged = self.to_frame().merge(
            other.to_frame(), on=["date", "station"], suffixes=("_1", "_2")
        )
        return ScoreSeries.create(
            merged["date"].to_numpy(),
            merged["station"].to_numpy(),
            (merged["value_1"] - merged["value_2"]).to_numpy(),
            label=f"{self.label} - {other.label}",
        )


class HistogramKind(str, Enum):
    """Calibration histogram types.

    Attributes:
        RANK: Verification rank histogram of a raw ensemble
        PIT: Probability integral transform histogram of a predictive CDF
    """

    RANK = "rank"
    PIT = "pit"


class HistogramResult(BaseModel):
    """Binned calibration diagnostic.

    Attributes:
        kind: Rank or PIT histogram
        edges: Bin edges, one more than counts; ranks use half-integer edges
        counts: Cases per bin
        n: Number of cases
        label: Forecast system the histogram belongs to
    """

    model_config = ConfigDict(frozen=True)

    kind: HistogramKind
    edges: list[float]
    counts: list[int]
    n: int = Field(ge=0)
    label: str = ""

    @model_validator(mode="after")
    def _check_counts(self) -> HistogramResult:
        if len(self.edges) != len(self.counts) + 1:
            raise ValueError("a histogram needs one more edge than bins")
        if any(c < 0 for c in self.counts):
            raise ValueError("bin counts must be nonnegative")
        if sum(self.counts) != self.n:
            raise ValueError(f"counts sum to {sum(self.counts)}, expected {self.n}")
        return self

    @property
    def n_bins(self) -> int:
        return len(self.counts)

    def relative_frequencies(self) -> FloatArray:
        counts = np.asarray(self.counts, dtype=np.float64)
        return counts / self.n if self.n else counts


class UniformityResult(BaseModel):
    """p-values of uniformity tests for a calibration histogram.

    Attributes:
        chi2_pvalue: Chi-square goodness of fit of the bin counts
        ks_pvalue: Kolmogorov-Smirnov test of the raw PIT values, when given
    """

    model_config = ConfigDict(frozen=True)

    chi2_pvalue: float = Field(ge=0.0, le=1.0)
    ks_pvalue: float | None = Field(default=None, ge=0.0, le=1.0)


class DmResult(BaseModel):
    """Diebold-Mariano test of equal predictive performance.

    Attributes:
        statistic: t_n; negative values favour the first system
        p_value: Two-sided p-value 2 (1 - Phi(|t_n|))
        n: Number of score differences
        horizon: Forecast horizon tau; autocovariances up to lag tau - 1
        variance_fallback: The lagged variance estimate was not positive and
            the lag-0 autocovariance was used instead
        label: Difference series label
    """

    model_config = ConfigDict(frozen=True)

    statistic: float
    p_value: float = Field(ge=0.0, le=1.0)
    n: int = Field(ge=2)
    horizon: int = Field(ge=1)
    variance_fallback: bool = False
    label: str = ""


class BootstrapResult(BaseModel):
    """Moving-block bootstrap of mean score differences.

    Attributes:
        proportion_negative: Share of repetitions with a strictly negative mean
        repetitions: Number of repetitions M
        block_length: Block length b in days
        mean_differences: Mean difference of every repetition
        label: Difference series label
    """

    model_config = ConfigDict(frozen=True)

    proportion_negative: float = Field(ge=0.0, le=1.0)
    repetitions: int = Field(ge=1)
    block_length: int = Field(ge=1)
    mean_differences: list[float]
    label: str = ""

    @model_validator(mode="after")
    def _check_sample(self) -> BootstrapResult:
        if len(self.mean_differences) != self.repetitions:
            raise ValueError("one mean difference per repetition is required")
        return self


class PairwiseEntry(BaseModel):
    """DM and bootstrap results for the ordered pair (row, column).

    Differences are row minus column, so negative statistics and high
    proportions favour the row system.
    """

    model_config = ConfigDict(frozen=True)

    row: str
    column: str
    dm: DmResult | None = None
    bootstrap: BootstrapResult | None = None


class ScoreRow(BaseModel):
    """Mean score of one system over the complete cases."""

    model_config = ConfigDict(frozen=True)

    system: str
    mean: float
    n_cases: int = Field(ge=0)


class ScoreTable(BaseModel):
    """Mean score per forecast system on the cases all systems cover.

    Attributes:
        rows: One row per system, in input order
        missing: Cases each system lacks relative to the union of cases
    """

    model_config = ConfigDict(frozen=True)

    rows: list[ScoreRow]
    missing: dict[str, int] = Field(default_factory=dict)

    def best(self) -> str:
        """System with the lowest mean score; ties keep the first."""
        return min(self.rows, key=lambda row: row.mean).system

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([row.model_dump() for row in self.rows])
