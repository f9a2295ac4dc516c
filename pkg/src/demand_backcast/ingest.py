"""Reading, validating and joining raw hourly demand/temperature files."""

from __future__ import annotations

import csv
import enum
import json
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    BadTimestamp,
    DataError,
    EmptyInput,
    ImplausibleTemperature,
    MalformedHeader,
    MissingTemperature,
    NegativeKelvin,
    TooManyMissing,
)

log = logging.getLogger(__name__)

TEMP_MIN_C = -90.0
TEMP_MAX_C = 70.0
ONE_HOUR = np.timedelta64(1, "h")


class ValueUnit(str, enum.Enum):
    MW = "MW"
    KELVIN = "Kelvin"
    CELSIUS = "Celsius"


@dataclass(frozen=True, slots=True)
class RawSeriesRow:
    timestamp: datetime
    value: float | None


@dataclass(frozen=True, slots=True)
class HourlyRecord:
    timestamp: datetime
    demand_mw: float | None
    temperature_c: float


@dataclass(frozen=True)
class Gap:
    after: np.datetime64
    resume: np.datetime64

    @property
    def missing_hours(self) -> int:
        return int((self.resume - self.after) // ONE_HOUR) - 1

    def to_dict(self) -> dict:
        return {
            "after": str(self.after),
            "resume": str(self.resume),
            "missing_hours": self.missing_hours,
        }


@dataclass(frozen=True, eq=False)
class HourlySeries:
    """Time-ordered hourly observations held as parallel numpy arrays.

    ``timestamps`` is ``datetime64[h]`` in the dataset's declared fixed offset,
    ``demand_mw`` uses NaN for missing demand. Arrays are made read-only on
    construction so a series can be shared freely.
    """

    timestamps: np.ndarray
    demand_mw: np.ndarray
    temperature_c: np.ndarray
    source_labels: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype="datetime64[h]")
        demand = np.asarray(self.demand_mw, dtype=float)
        temp = np.asarray(self.temperature_c, dtype=float)
        if not (len(ts) == len(demand) == len(temp)):
            raise ValueError("timestamps, demand and temperature lengths differ")
        if len(ts) > 1 and not np.all(ts[1:] > ts[:-1]):
            raise ValueError("timestamps must be strictly increasing")
        for arr in (ts, demand, temp):
            arr.flags.writeable = False
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "demand_mw", demand)
        object.__setattr__(self, "temperature_c", temp)
        object.__setattr__(self, "source_labels", tuple(self.source_labels))

    def __len__(self) -> int:
        return len(self.timestamps)

    def __iter__(self) -> Iterator[HourlyRecord]:
        for ts, d, t in zip(self.timestamps, self.demand_mw, self.temperature_c):
            yield HourlyRecord(
                ts.astype(datetime), None if math.isnan(d) else float(d), float(t)
            )

    def select(self, mask_or_index) -> HourlySeries:
        return HourlySeries(
            self.timestamps[mask_or_index],
            self.demand_mw[mask_or_index],
            self.temperature_c[mask_or_index],
            self.source_labels,
        )

    def between(self, start, end) -> HourlySeries:
        """Records with ``start <= timestamp <= end`` (either bound may be None)."""
        mask = np.ones(len(self), dtype=bool)
        if start is not None:
            mask &= self.timestamps >= np.datetime64(start, "h")
        if end is not None:
            mask &= self.timestamps <= np.datetime64(end, "h")
        return self.select(mask)

    @property
    def has_demand(self) -> np.ndarray:
        return ~np.isnan(self.demand_mw)

    def gaps(self) -> list[Gap]:
        if len(self) < 2:
            return []
        step = np.diff(self.timestamps) // ONE_HOUR
        idx = np.flatnonzero(step > 1)
        return [Gap(self.timestamps[i], self.timestamps[i + 1]) for i in idx]


def _parse_timestamp(text: str, line: int, tz: timezone) -> datetime:
    s = text.strip()
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(s)
    except ValueError:
        raise BadTimestamp(line, text) from None
    if ts.tzinfo is not None:
        ts = ts.astimezone(tz).replace(tzinfo=None)
    return ts


def _parse_value(text: str) -> float | None:
    try:
        v = float(text)
    except (TypeError, ValueError):
        return None
    return v if math.isfinite(v) else None


def kelvin_to_celsius(t_k: float) -> float:
    if t_k < 0:
        raise NegativeKelvin(f"negative Kelvin temperature {t_k}")
    return t_k - 273.15


def parse_series_csv(
    path,
    value_unit: ValueUnit | str,
    *,
    timestamp_col: str = "timestamp",
    value_col: str = "value",
    utc_offset_hours: float = 0.0,
) -> list[RawSeriesRow]:
    """Read a two-column hourly CSV into rows, in file order.

    Values are converted to the package's canonical units on the way in:
    Kelvin becomes Celsius, MW and Celsius pass through. Empty or
    unparseable value cells become ``None``; an unparseable timestamp is an
    error. Timezone-aware timestamps are shifted to ``utc_offset_hours`` and
    made naive; naive timestamps are taken to already be in that offset.
    """
    unit = ValueUnit(value_unit)
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"input file not found: {path}")
    tz = timezone(timedelta(hours=utc_offset_hours))
    rows: list[RawSeriesRow] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise MalformedHeader(f"{path}: empty file")
        header = [h.strip() for h in header]
        try:
            ti, vi = header.index(timestamp_col), header.index(value_col)
        except ValueError:
            raise MalformedHeader(
                f"{path}: header {header} lacks {timestamp_col!r} and/or {value_col!r}"
            ) from None
        for line, cells in enumerate(reader, start=2):
            if not cells or all(not c.strip() for c in cells):
                continue
            ts = _parse_timestamp(cells[ti] if ti < len(cells) else "", line, tz)
            value = _parse_value(cells[vi]) if vi < len(cells) else None
            if value is not None:
                if unit is ValueUnit.KELVIN:
                    value = kelvin_to_celsius(value)
                elif unit is ValueUnit.MW and value < 0:
                    raise DataError(f"{path} line {line}: negative demand {value}")
            rows.append(RawSeriesRow(ts, value))
    return rows


def write_series_csv(
    rows: Sequence[RawSeriesRow], path, *, timestamp_col="timestamp", value_col="value"
) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([timestamp_col, value_col])
        for r in rows:
            w.writerow(
                [r.timestamp.isoformat(timespec="minutes"), "" if r.value is None else repr(r.value)]
            )


def _hour(ts: datetime) -> datetime:
    return ts.replace(minute=0, second=0, microsecond=0)


def _index_rows(rows: Sequence[RawSeriesRow], what: str) -> dict[datetime, float | None]:
    out: dict[datetime, float | None] = {}
    dups = 0
    for r in rows:
        key = _hour(r.timestamp)
        if key in out:
            dups += 1
            continue
        out[key] = r.value
    if dups:
        log.warning("%s: %d duplicate hourly timestamps, kept first occurrence", what, dups)
    return out


def join_hourly(
    demand: Sequence[RawSeriesRow],
    temperature: Sequence[RawSeriesRow],
    source_labels: Sequence[str] = (),
) -> HourlySeries:
    """Attach demand to the hourly temperature record.

    Every temperature hour is kept (demand NaN where absent) so the series
    also spans the back-forecast period. A demand hour without temperature is
    an error.
    """
    if not temperature:
        raise EmptyInput("temperature series is empty")
    temps = {k: v for k, v in _index_rows(temperature, "temperature").items() if v is not None}
    if not temps:
        raise EmptyInput("temperature series has no values")
    loads = _index_rows(demand, "demand")
    for ts in sorted(loads):
        if ts not in temps:
            raise MissingTemperature(ts)

    hours = sorted(temps)
    t = np.fromiter((temps[h] for h in hours), dtype=float, count=len(hours))
    bad = (t < TEMP_MIN_C) | (t > TEMP_MAX_C)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise ImplausibleTemperature(
            f"temperature {t[i]:.2f} C at {hours[i]} outside [{TEMP_MIN_C}, {TEMP_MAX_C}]; "
            "check the declared unit"
        )
    d = np.array(
        [np.nan if loads.get(h) is None else loads[h] for h in hours], dtype=float
    )
    return HourlySeries(np.array(hours, dtype="datetime64[h]"), d, t, tuple(source_labels))


def drop_missing_demand(
    series: HourlySeries, max_missing_frac: float = 0.05
) -> tuple[HourlySeries, int]:
    """Drop rows lacking demand from a training-era series.

    The caller passes only the span where demand is expected; raises
    ``TooManyMissing`` when the missing share exceeds ``max_missing_frac``.
    """
    if not 0.0 <= max_missing_frac <= 1.0:
        raise ValueError("max_missing_frac must lie in [0, 1]")
    if len(series) == 0:
        return series, 0
    missing = ~series.has_demand
    n_missing = int(missing.sum())
    frac = n_missing / len(series)
    if frac > max_missing_frac:
        raise TooManyMissing(frac, max_missing_frac)
    if n_missing == 0:
        return series, 0
    return series.select(~missing), n_missing


def demand_era(series: HourlySeries) -> HourlySeries:
    """Slice from the first to the last hour carrying demand."""
    idx = np.flatnonzero(series.has_demand)
    if len(idx) == 0:
        raise EmptyInput("no demand observations in series")
    return series.select(slice(idx[0], idx[-1] + 1))


def write_joined_csv(series: HourlySeries, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "demand_mw", "temperature_c"])
        for ts, d, t in zip(series.timestamps, series.demand_mw, series.temperature_c):
            w.writerow([str(ts) + ":00", "" if math.isnan(d) else repr(float(d)), repr(float(t))])


def write_gap_index(series: HourlySeries, path) -> None:
    payload = {
        "n_records": len(series),
        "start": str(series.timestamps[0]) if len(series) else None,
        "end": str(series.timestamps[-1]) if len(series) else None,
        "gaps": [g.to_dict() for g in series.gaps()],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
