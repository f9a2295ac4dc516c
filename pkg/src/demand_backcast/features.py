"""Calendar fixed effects, min-max scaling, splitting and LSTM windows."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from datetime import datetime

import numpy as np

from .errors import EmptyInput, SeriesTooShort, TooFewRecords
from .ingest import ONE_HOUR, HourlySeries


@dataclass(frozen=True)
class CalendarFeatures:
    hour: int
    day_of_week: int  # Monday = 0
    month: int
    year: int


def extract_calendar(timestamp: datetime) -> CalendarFeatures:
    return CalendarFeatures(
        timestamp.hour, timestamp.weekday(), timestamp.month, timestamp.year
    )


def calendar_arrays(timestamps: np.ndarray) -> dict[str, np.ndarray]:
    """Vectorised ``extract_calendar`` over a ``datetime64`` array."""
    ts = np.asarray(timestamps, dtype="datetime64[h]")
    days = ts.astype("datetime64[D]")
    months = ts.astype("datetime64[M]")
    years = ts.astype("datetime64[Y]")
    return {
        "hour": ((ts - days) // ONE_HOUR).astype(np.int64),
        # 1970-01-01 was a Thursday (Monday=0 -> 3)
        "dow": ((days.astype(np.int64) + 3) % 7).astype(np.int64),
        "month": (months.astype(np.int64) % 12 + 1).astype(np.int64),
        "year": (years.astype(np.int64) + 1970).astype(np.int64),
    }


@dataclass(frozen=True)
class ScalerParams:
    feature_min: float
    feature_max: float

    def __post_init__(self):
        if not self.feature_min <= self.feature_max:
            raise ValueError("feature_min must not exceed feature_max")

    def apply(self, x):
        # not clamped: back-forecast inputs may fall outside the training range
        span = self.feature_max - self.feature_min
        if np.ndim(x) == 0:
            return 0.0 if span == 0 else (float(x) - self.feature_min) / span
        arr = np.asarray(x, dtype=float)
        return np.zeros_like(arr) if span == 0 else (arr - self.feature_min) / span

    def invert(self, y):
        span = self.feature_max - self.feature_min
        if np.ndim(y) == 0:
            return float(y) * span + self.feature_min
        return np.asarray(y, dtype=float) * span + self.feature_min

    def to_dict(self) -> dict:
        return {"min": self.feature_min, "max": self.feature_max}

    @classmethod
    def from_dict(cls, d: dict) -> ScalerParams:
        return cls(float(d["min"]), float(d["max"]))


def fit_scaler(values) -> ScalerParams:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise EmptyInput("cannot fit a scaler on no values")
    return ScalerParams(float(arr.min()), float(arr.max()))


def apply_scaler(p: ScalerParams, x):
    return p.apply(x)


def invert_scaler(p: ScalerParams, y):
    return p.invert(y)


def chrono_split(series: HourlySeries, holdout_frac: float) -> tuple[HourlySeries, HourlySeries]:
    """Split off the chronologically earliest ``floor(n * holdout_frac)`` records.

    Returns ``(holdout, train)``. The hold-out comes first in time because the
    models are used to predict backwards.
    """
    if not 0.0 < holdout_frac < 1.0:
        raise ValueError("holdout_frac must lie strictly between 0 and 1")
    n = len(series)
    # guard against 0.2 * 100 landing a hair under 20
    n_hold = math.floor(n * holdout_frac + 1e-9)
    if n_hold == 0 or n_hold == n:
        raise TooFewRecords(f"{n} records cannot be split at fraction {holdout_frac}")
    return series.select(slice(0, n_hold)), series.select(slice(n_hold, n))


class Season(str, enum.Enum):
    Q1 = "q1"
    Q2 = "q2"
    SUMMER = "summer"
    WINTER = "winter"

    @property
    def months(self) -> tuple[int, ...]:
        return _SEASON_MONTHS[self]


_SEASON_MONTHS = {
    Season.Q1: (1, 2, 3),
    Season.Q2: (4, 5, 6),
    Season.SUMMER: (7, 8, 9),
    Season.WINTER: (10, 11, 12),
}
_MONTH_SEASON = {m: s for s, ms in _SEASON_MONTHS.items() for m in ms}


def season_of_month(month: int) -> Season:
    return _MONTH_SEASON[int(month)]


def season_labels(months: np.ndarray) -> np.ndarray:
    """Object array of ``Season`` members for an array of month numbers."""
    lut = np.array([None] + [_MONTH_SEASON[m] for m in range(1, 13)], dtype=object)
    return lut[np.asarray(months, dtype=np.int64)]


def season_mask(months: np.ndarray, label: Season) -> np.ndarray:
    return np.isin(np.asarray(months), label.months)


def seasonal_filter(series: HourlySeries, label: Season) -> HourlySeries:
    months = calendar_arrays(series.timestamps)["month"]
    return series.select(season_mask(months, Season(label)))


@dataclass(frozen=True)
class SequenceSample:
    temperature_window: np.ndarray
    calendar: CalendarFeatures
    target_demand_scaled: float | None
    timestamp: datetime


@dataclass(frozen=True, eq=False)
class SequenceSet:
    """A batch of fixed-length temperature windows, one per target hour.

    ``windows[i]`` holds the scaled temperatures for hours ``t-L+1 .. t`` of
    target hour ``timestamps[i]``; calendar arrays describe the target hour.
    ``temperature_c`` is the unscaled target-hour temperature (used by the
    piecewise model); ``demand_mw``/``target_scaled`` are NaN when unknown.
    """

    timestamps: np.ndarray
    windows: np.ndarray
    temperature_c: np.ndarray
    hour: np.ndarray
    dow: np.ndarray
    month: np.ndarray
    year: np.ndarray
    demand_mw: np.ndarray
    target_scaled: np.ndarray

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def seq_len(self) -> int:
        return self.windows.shape[1]

    def subset(self, idx) -> SequenceSet:
        return SequenceSet(
            *(getattr(self, f)[idx] for f in self.__dataclass_fields__)  # type: ignore[arg-type]
        )

    def __getitem__(self, i: int) -> SequenceSample:
        t = self.target_scaled[i]
        return SequenceSample(
            self.windows[i].copy(),
            CalendarFeatures(int(self.hour[i]), int(self.dow[i]), int(self.month[i]), int(self.year[i])),
            None if math.isnan(t) else float(t),
            self.timestamps[i].astype(datetime),
        )

    def season_subset(self, label: Season) -> SequenceSet:
        return self.subset(season_mask(self.month, label))

    @classmethod
    def concat(cls, parts: list[SequenceSet]) -> SequenceSet:
        fields = cls.__dataclass_fields__
        return cls(*(np.concatenate([getattr(p, f) for p in parts]) for f in fields))


def make_sequences(
    series: HourlySeries,
    seq_len: int,
    temp_scaler: ScalerParams,
    demand_scaler: ScalerParams | None = None,
    *,
    allow_empty: bool = False,
) -> SequenceSet:
    """Build one sample per record whose trailing ``seq_len`` hours are contiguous.

    Windows end at (and include) the target hour. Windows that would straddle
    a gap in the series are skipped.
    """
    if seq_len < 1:
        raise ValueError("sequence length must be >= 1")
    n = len(series)
    if n >= seq_len:
        ts = series.timestamps
        start = np.arange(seq_len - 1, n)
        span = (ts[start] - ts[start - (seq_len - 1)]) // ONE_HOUR
        targets = start[span == seq_len - 1]
    else:
        targets = np.empty(0, dtype=np.int64)
    if len(targets) == 0 and not allow_empty:
        raise SeriesTooShort(
            f"no contiguous {seq_len}-hour window in a series of {n} records"
        )

    scaled_t = temp_scaler.apply(series.temperature_c) if n else np.empty(0)
    if len(targets):
        offsets = np.arange(-(seq_len - 1), 1)
        windows = scaled_t[targets[:, None] + offsets[None, :]]
    else:
        windows = np.empty((0, seq_len))
    demand = series.demand_mw[targets].copy()
    if demand_scaler is not None:
        target_scaled = demand_scaler.apply(demand)
    else:
        target_scaled = np.full(len(targets), np.nan)
    cal = calendar_arrays(series.timestamps[targets])
    return SequenceSet(
        timestamps=series.timestamps[targets].copy(),
        windows=np.ascontiguousarray(windows, dtype=float),
        temperature_c=series.temperature_c[targets].copy(),
        hour=cal["hour"],
        dow=cal["dow"],
        month=cal["month"],
        year=cal["year"],
        demand_mw=demand,
        target_scaled=np.asarray(target_scaled, dtype=float),
    )
