"""Forecast cases, ensemble layouts and EMOS coefficient models."""

from __future__ import annotations

import datetime as dt
from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.distributions.kernels import FloatArray
from src.errors import DegenerateWindowError


class Variable(str, Enum):
    """Forecast variable; both are nonnegative.

    Attributes:
        WIND_SPEED: 10 m wind speed
        PRECIPITATION: Accumulated precipitation with a point mass at zero
    """

    WIND_SPEED = "wind_speed"
    PRECIPITATION = "precipitation"


class Objective(str, Enum):
    """Optimum-score criterion used to fit EMOS coefficients.

    Attributes:
        MIN_CRPS: Minimum mean CRPS estimation
        ML: Maximum likelihood, i.e. minimum mean LogS
    """

    MIN_CRPS = "crps"
    ML = "logs"


class EmosFamily(str, Enum):
    """EMOS model families.

    Attributes:
        TN: Truncated normal (wind speed)
        LN: Log-normal (wind speed)
        CSG: Censored shifted gamma (precipitation)
        GEV: Censored generalized extreme value (precipitation)
        TNLN: Jointly estimated TN-LN mixture (wind speed)
    """

    TN = "tn"
    LN = "ln"
    CSG = "csg"
    GEV = "gev"
    TNLN = "tnln"

    @property
    def variable(self) -> Variable:
        if self in (EmosFamily.CSG, EmosFamily.GEV):
            return Variable.PRECIPITATION
        return Variable.WIND_SPEED


class GroupLayout(BaseModel):
    """Partition of the ensemble into exchangeable groups.

    Members of one group share a single link coefficient. A non-exchangeable
    ensemble of M members is the layout of M singleton groups.

    Attributes:
        names: Group names, used as CSV column prefixes
        sizes: Number of members per group
    """

    model_config = ConfigDict(frozen=True)

    names: list[str] = Field(min_length=1)
    sizes: list[int] = Field(min_length=1)

    @field_validator("sizes")
    @classmethod
    def _positive_sizes(cls, v: list[int]) -> list[int]:
        if any(size < 1 for size in v):
            raise ValueError("every group needs at least one member")
        return v

    @model_validator(mode="after")
    def _check_layout(self) -> GroupLayout:
        if len(self.names) != len(self.sizes):
            raise ValueError("one size per group name is required")
        if len(set(self.names)) != len(self.names):
            raise ValueError("group names must be unique")
        return self

    @property
    def n_groups(self) -> int:
        return len(self.sizes)

    @property
    def n_members(self) -> int:
        return sum(self.sizes)

    @property
    def member_columns(self) -> list[str]:
        """Column names ``<group>_<index>`` in member order."""
        return [
            f"{name}_{i}"
            for name, size in zip(self.names, self.sizes, strict=True)
            for i in range(1, size + 1)
        ]

    def group_index(self) -> NDArray[np.intp]:
        """Group number of every member, in member order."""
        return np.repeat(np.arange(self.n_groups), self.sizes)

    def group_sums(self, members: FloatArray) -> FloatArray:
        """Per-group sums of member values; members has shape (..., M).

        Members are summed in sorted order, so permuting a group gives
        bit-identical sums.
        """
        bounds = np.cumsum([0, *self.sizes])
        return np.stack(
            [
                np.sort(members[..., lo:hi], axis=-1).sum(axis=-1)
                for lo, hi in zip(bounds[:-1], bounds[1:])
            ],
            axis=-1,
        )

    @classmethod
    def singletons(cls, names: Sequence[str]) -> GroupLayout:
        return cls(names=list(names), sizes=[1] * len(names))


class EnsembleForecast(BaseModel):
    """One forecast case: the ensemble issued for a station and valid day."""

    model_config = ConfigDict(frozen=True)

    date: dt.date
    station: str
    variable: Variable
    layout: GroupLayout
    members: tuple[float, ...]

    @model_validator(mode="after")
    def _check_members(self) -> EnsembleForecast:
        if len(self.members) != self.layout.n_members:
            raise ValueError(
                f"expected {self.layout.n_members} members, got {len(self.members)}"
            )
        if any(not m >= 0.0 for m in self.members):
            raise ValueError("ensemble members must be nonnegative")
        return self

    @property
    def values(self) -> FloatArray:
        return np.asarray(self.members, dtype=np.float64)

    def groups(self) -> list[tuple[str, FloatArray]]:
        bounds = np.cumsum([0, *self.layout.sizes])
        return [
            (name, self.values[lo:hi])
            for name, lo, hi in zip(self.layout.names, bounds[:-1], bounds[1:])
        ]


class ForecastCase(BaseModel):
    """Ensemble forecast paired with its verifying observation."""

    model_config = ConfigDict(frozen=True)

    forecast: EnsembleForecast
    observation: float = Field(ge=0.0, allow_inf_nan=False)


class EnsembleStats(BaseModel):
    """Summary statistics used as EMOS regressors.

    Attributes:
        mean: Ensemble mean
        variance: Sample variance over all members, divisor M - 1
        zero_fraction: Share of members equal to zero
        mean_abs_diff: Mean absolute difference over all ordered pairs
    """

    model_config = ConfigDict(frozen=True)

    mean: float
    variance: float = Field(ge=0.0)
    zero_fraction: float = Field(ge=0.0, le=1.0)
    mean_abs_diff: float = Field(ge=0.0)


class EmosCoefficients(BaseModel):
    """Fitted link-function coefficients for one family and training window.

    ``location`` holds a_0, a_1, ..., a_K with one coefficient per
    exchangeable group; ``spread`` holds b_0, b_1. Family specific extras
    are ``shape`` (GEV xi), ``shift`` (CSG delta) and ``nu`` (GEV weight
    of the zero fraction). The TN-LN mixture keeps the TN part in the
    top-level fields, the LN part in ``secondary`` and the TN weight in
    ``weight``.
    """

    model_config = ConfigDict(frozen=True)

    family: EmosFamily
    location: list[float] = Field(min_length=2)
    spread: list[float] = Field(min_length=2, max_length=2)
    shape: float | None = None
    shift: float | None = Field(default=None, gt=0.0)
    nu: float | None = None
    weight: float | None = Field(default=None, ge=0.0, le=1.0)
    secondary: EmosCoefficients | None = None

    @model_validator(mode="after")
    def _check_constraints(self) -> EmosCoefficients:
        values = [*self.location, *self.spread]
        if any(not np.isfinite(v) for v in values):
            raise ValueError("coefficients must be finite")
        family = self.family
        if family in (EmosFamily.TN, EmosFamily.LN, EmosFamily.TNLN):
            if self.spread[1] < 0.0:
                raise ValueError("spread slope b_1 must be nonnegative")
        if family in (EmosFamily.CSG, EmosFamily.GEV):
            if any(v < 0.0 for v in values):
                raise ValueError(
                    "precipitation coefficients must be nonnegative"
                )
        if family == EmosFamily.CSG and self.shift is None:
            raise ValueError("CSG coefficients need a shift delta")
        if family == EmosFamily.GEV and (self.shape is None or self.nu is None):
            raise ValueError("GEV coefficients need a shape xi and a weight nu")
        if family == EmosFamily.TNLN:
            if self.weight is None or self.secondary is None:
                raise ValueError("TN-LN mixture needs a weight and LN coefficients")
            if self.secondary.family != EmosFamily.LN:
                raise ValueError("secondary coefficients of TN-LN must be LN")
        return self

    @property
    def n_groups(self) -> int:
        return len(self.location) - 1

    def to_named(self) -> dict[str, float]:
        """Flat name -> value mapping used by coefficient tables."""
        named = {f"a_{i}": v for i, v in enumerate(self.location)}
        named |= {f"b_{i}": v for i, v in enumerate(self.spread)}
        for name in ("shape", "shift", "nu", "weight"):
            value = getattr(self, name)
            if value is not None:
                named[name] = value
        if self.secondary is not None:
            named |= {f"ln.{k}": v for k, v in self.secondary.to_named().items()}
        return named

    @classmethod
    def from_named(cls, family: EmosFamily, named: dict[str, float]) -> EmosCoefficients:
        """Inverse of ``to_named``."""
        secondary = None
        if family == EmosFamily.TNLN:
            sub = {k[3:]: v for k, v in named.items() if k.startswith("ln.")}
            secondary = cls.from_named(EmosFamily.LN, sub)
        n_location = sum(1 for k in named if k.startswith("a_"))
        return cls(
            family=family,
            location=[named[f"a_{i}"] for i in range(n_location)],
            spread=[named["b_0"], named["b_1"]],
            shape=named.get("shape"),
            shift=named.get("shift"),
            nu=named.get("nu"),
            weight=named.get("weight"),
            secondary=secondary,
        )


@dataclass(frozen=True)
class ForecastBatch:
    """Column-oriented forecast cases for vectorized fitting and scoring.

    Attributes:
        dates: Valid days, numpy ``datetime64[D]``, shape (n,)
        stations: Station identifiers, shape (n,)
        observations: Verifying observations, shape (n,)
        members: Member values, shape (n, M), grouped per ``layout``
        layout: Exchangeable group layout
        variable: Forecast variable
    """

    dates: NDArray[np.datetime64]
    stations: NDArray[np.str_]
    observations: FloatArray
    members: FloatArray
    layout: GroupLayout
    variable: Variable

    def __post_init__(self) -> None:
        n = len(self.observations)
        if self.members.shape != (n, self.layout.n_members):
            raise ValueError(
                f"members must have shape ({n}, {self.layout.n_members}), "
                f"got {self.members.shape}"
            )
        if len(self.dates) != n or len(self.stations) != n:
            raise ValueError("dates, stations and observations must align")

    def __len__(self) -> int:
        return len(self.observations)

    @property
    def unique_dates(self) -> NDArray[np.datetime64]:
        return np.unique(self.dates)

    def select(self, mask: NDArray[np.bool_]) -> ForecastBatch:
        return ForecastBatch(
            dates=self.dates[mask],
            stations=self.stations[mask],
            observations=self.observations[mask],
            members=self.members[mask],
            layout=self.layout,
            variable=self.variable,
        )

    def on_dates(self, days: NDArray[np.datetime64]) -> ForecastBatch:
        return self.select(np.isin(self.dates, days))

    def case(self, i: int) -> ForecastCase:
        forecast = EnsembleForecast(
            date=self.dates[i].item(),
            station=str(self.stations[i]),
            variable=self.variable,
            layout=self.layout,
            members=tuple(float(v) for v in self.members[i]),
        )
        return ForecastCase(forecast=forecast, observation=float(self.observations[i]))

    def cases(self) -> Iterator[ForecastCase]:
        for i in range(len(self)):
            yield self.case(i)

    @classmethod
    def from_cases(cls, cases: Sequence[ForecastCase]) -> ForecastBatch:
        if not cases:
            raise DegenerateWindowError("cannot build a batch from zero cases")
        layout = cases[0].forecast.layout
        variable = cases[0].forecast.variable
        if any(c.forecast.layout != layout for c in cases):
            raise ValueError("all cases must share one ensemble layout")
        return cls(
            dates=np.array([c.forecast.date for c in cases], dtype="datetime64[D]"),
            stations=np.array([c.forecast.station for c in cases], dtype=np.str_),
            observations=np.array([c.observation for c in cases], dtype=np.float64),
            members=np.array([c.forecast.members for c in cases], dtype=np.float64),
            layout=layout,
            variable=variable,
        )


@dataclass(frozen=True)
class TrainingWindow:
    """Regional training sample for one target day.

    Attributes:
        target_date: Day the fitted model will forecast
        n_days: Configured window length in available days
        batch: Cases from the ``n_days`` available days before the target,
            pooled over all stations
    """

    target_date: np.datetime64
    n_days: int
    batch: ForecastBatch

    def __post_init__(self) -> None:
        if self.n_days < 1:
            raise ValueError("window length must be at least one day")
        if len(self.batch) and np.any(self.batch.dates >= self.target_date):
            raise ValueError("training window may only contain days before the target")

    def __len__(self) -> int:
        return len(self.batch)
