"""Synthetic hourly temperature/demand scenarios with a known closed form.

Noiseless demand for hour ``t`` with temperature ``T``::

    base + hour_profile[h] + dow_profile[d] + month_profile[m-1]
         + year_trend * (year - start_year)
         + cooling_slope * max(0, T - balance) + heating_slope * max(0, balance - T)
         + [Oct-Dec only] winter.slope * max(0, T - winter.balance_temp_c)

Observed demand adds N(0, noise_sigma_mw) and is clamped at zero.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .errors import InvalidScenario
from .features import calendar_arrays
from .ingest import HourlySeries, RawSeriesRow, write_series_csv

log = logging.getLogger(__name__)


@dataclass
class TemperatureModel:
    annual_mean_c: float = 19.0
    seasonal_amplitude_c: float = 10.0
    diurnal_amplitude_c: float = 5.0
    peak_day_of_year: float = 200.0
    peak_hour: float = 15.0
    noise_sigma_c: float = 2.0
    noise_ar: float = 0.97
    min_c: float = -40.0
    max_c: float = 50.0


@dataclass
class WinterRegime:
    balance_temp_c: float = 12.0
    slope: float = 400.0


@dataclass
class SynthScenario:
    start: str = "2015-01-01T00:00"
    end: str = "2016-12-31T23:00"
    base_load_mw: float = 10_000.0
    cooling_slope: float = 400.0
    heating_slope: float = 150.0
    balance_temp_c: float = 18.0
    hour_profile: list[float] = field(default_factory=lambda: [0.0] * 24)
    dow_profile: list[float] = field(default_factory=lambda: [0.0] * 7)
    month_profile: list[float] = field(default_factory=lambda: [0.0] * 12)
    year_trend: float = 0.0
    noise_sigma_mw: float = 0.0
    winter_regime: WinterRegime | None = None
    temperature: TemperatureModel = field(default_factory=TemperatureModel)

    def __post_init__(self):
        if isinstance(self.temperature, dict):
            self.temperature = _build(TemperatureModel, self.temperature)
        if isinstance(self.winter_regime, dict):
            self.winter_regime = _build(WinterRegime, self.winter_regime)
        self.validate()

    def validate(self) -> None:
        if self.cooling_slope < 0 or self.heating_slope < 0:
            raise InvalidScenario("slopes must be nonnegative")
        if self.noise_sigma_mw < 0 or self.temperature.noise_sigma_c < 0:
            raise InvalidScenario("noise sigmas must be nonnegative")
        if (len(self.hour_profile), len(self.dow_profile), len(self.month_profile)) != (24, 7, 12):
            raise InvalidScenario("profiles must have 24 hour, 7 weekday and 12 month entries")
        if not abs(self.temperature.noise_ar) < 1:
            raise InvalidScenario("temperature noise AR coefficient must lie in (-1, 1)")
        if self.temperature.min_c >= self.temperature.max_c:
            raise InvalidScenario("temperature bounds are inverted")
        try:
            span = (np.datetime64(self.end, "h") - np.datetime64(self.start, "h")) // np.timedelta64(1, "h")
        except ValueError as exc:
            raise InvalidScenario(f"bad span timestamps: {exc}") from None
        if span + 1 < 48:
            raise InvalidScenario("scenario must span at least 48 hours")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> SynthScenario:
        return _build(cls, d)

    @classmethod
    def from_json(cls, path) -> SynthScenario:
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise InvalidScenario(f"cannot parse {path}: {exc}") from None
        return cls.from_dict(d)


def _build(cls, d: dict):
    known = {f.name for f in fields(cls)}
    unknown = set(d) - known
    if unknown:
        raise InvalidScenario(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    return cls(**d)


def realistic_scenario(**overrides) -> SynthScenario:
    """A Texas-like summer-peaking scenario with diurnal and weekly shape."""
    hours = np.arange(24)
    hour_profile = (-900.0 * np.cos(2 * np.pi * (hours - 17) / 24)).round(6).tolist()
    dow_profile = [150.0, 200.0, 200.0, 200.0, 100.0, -350.0, -500.0]
    month_profile = [0.0, -100.0, -300.0, -400.0, -200.0, 100.0, 300.0, 300.0, 100.0, -200.0, -300.0, 0.0]
    kwargs = dict(
        hour_profile=hour_profile,
        dow_profile=dow_profile,
        month_profile=month_profile,
        year_trend=100.0,
    )
    kwargs.update(overrides)
    return SynthScenario(**kwargs)


@dataclass(frozen=True, eq=False)
class SynthResult:
    series: HourlySeries
    noiseless_mw: np.ndarray
    clamped: int


def temperature_path(scenario: SynthScenario, timestamps: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    tm = scenario.temperature
    hours = timestamps.astype(np.int64).astype(float)
    days = hours / 24.0
    cal = calendar_arrays(timestamps)
    seasonal = tm.seasonal_amplitude_c * np.cos(2 * np.pi * (days - tm.peak_day_of_year) / 365.25)
    diurnal = tm.diurnal_amplitude_c * np.cos(2 * np.pi * (cal["hour"] - tm.peak_hour) / 24.0)
    # stationary AR(1) noise with marginal standard deviation noise_sigma_c
    shocks = rng.normal(scale=tm.noise_sigma_c * np.sqrt(1 - tm.noise_ar**2), size=len(hours))
    if len(shocks):
        shocks[0] /= np.sqrt(1 - tm.noise_ar**2)
    noise = lfilter([1.0], [1.0, -tm.noise_ar], shocks)
    return np.clip(tm.annual_mean_c + seasonal + diurnal + noise, tm.min_c, tm.max_c)


def closed_form_demand(scenario: SynthScenario, temperature_c, timestamps) -> np.ndarray:
    t = np.asarray(temperature_c, dtype=float)
    cal = calendar_arrays(np.asarray(timestamps, dtype="datetime64[h]"))
    start_year = int(str(np.datetime64(scenario.start, "Y")))
    d = (
        scenario.base_load_mw
        + np.asarray(scenario.hour_profile)[cal["hour"]]
        + np.asarray(scenario.dow_profile)[cal["dow"]]
        + np.asarray(scenario.month_profile)[cal["month"] - 1]
        + scenario.year_trend * (cal["year"] - start_year)
        + scenario.cooling_slope * np.maximum(0.0, t - scenario.balance_temp_c)
        + scenario.heating_slope * np.maximum(0.0, scenario.balance_temp_c - t)
    )
    if scenario.winter_regime is not None:
        w = scenario.winter_regime
        d = d + np.where(cal["month"] >= 10, w.slope * np.maximum(0.0, t - w.balance_temp_c), 0.0)
    return d


def generate(scenario: SynthScenario, seed: int = 0) -> SynthResult:
    """Seeded hourly series with both temperature and demand filled in."""
    scenario.validate()
    rng_temp, rng_noise = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    ts = np.arange(
        np.datetime64(scenario.start, "h"),
        np.datetime64(scenario.end, "h") + np.timedelta64(1, "h"),
        np.timedelta64(1, "h"),
    )
    temp = temperature_path(scenario, ts, rng_temp)
    clean = closed_form_demand(scenario, temp, ts)
    demand = clean + rng_noise.normal(scale=scenario.noise_sigma_mw, size=len(ts))
    negative = demand < 0
    clamped = int(negative.sum())
    if clamped:
        log.warning("synthetic demand clamped at 0 MW for %d hours", clamped)
        demand = np.where(negative, 0.0, demand)
    series = HourlySeries(ts, demand, temp, ("synthetic",))
    return SynthResult(series, clean, clamped)


def write_scenario_csvs(result: SynthResult, outdir, temperature_unit: str = "Kelvin") -> dict[str, Path]:
    """Write demand.csv, temperature.csv and truth.csv in the ingest schema."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    s = result.series
    stamps = s.timestamps.astype("datetime64[s]").astype(object)
    temps = s.temperature_c + 273.15 if temperature_unit == "Kelvin" else s.temperature_c
    paths = {
        "demand": outdir / "demand.csv",
        "temperature": outdir / "temperature.csv",
        "truth": outdir / "truth.csv",
    }
    write_series_csv([RawSeriesRow(t, float(v)) for t, v in zip(stamps, s.demand_mw)], paths["demand"])
    write_series_csv([RawSeriesRow(t, float(v)) for t, v in zip(stamps, temps)], paths["temperature"])
    write_series_csv(
        [RawSeriesRow(t, float(v)) for t, v in zip(stamps, result.noiseless_mw)], paths["truth"]
    )
    return paths


def winter_regime_scenario(**overrides) -> SynthScenario:
    """Summer-peaking scenario with a second, rising balance point in Oct-Dec.

    Summer demand swings with cooling load while winter demand varies little
    and responds non-monotonically to temperature, so a single annual model
    explains winter hours worse than summer hours. The span starts in July so
    that the chronological hold-out covers one summer and one winter quarter.
    """
    base = realistic_scenario()
    kwargs = dict(
        start="2015-07-01T00:00",
        end="2017-12-31T23:00",
        balance_temp_c=22.0,
        cooling_slope=800.0,
        heating_slope=40.0,
        hour_profile=[0.3 * h for h in base.hour_profile],
        month_profile=[0.0] * 12,
        year_trend=0.0,
        noise_sigma_mw=200.0,
        winter_regime=WinterRegime(balance_temp_c=12.0, slope=200.0),
        temperature=TemperatureModel(annual_mean_c=18.0, seasonal_amplitude_c=11.0, peak_day_of_year=182.0),
    )
    kwargs.update(overrides)
    return realistic_scenario(**kwargs)
