"""End-to-end back-forecast: ingest, split, fit, predict the historical span, score.

Model scopes
------------
``annual`` mode fits one model per kind on the whole training partition.
``summer_winter`` mode adds dedicated summer (Jul-Sep) and winter (Oct-Dec)
models trained with identical hyperparameters; January-June hours stay with
the annual model. Every model fits its own scalers on the training records it
is trained on.

Leakage rules: scalers, piecewise coefficients and LSTM weights only ever see
the training partition. LSTM best-epoch selection uses the chronologically
earliest ``checkpoint_frac`` of the training samples, never the hold-out.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .config import RunConfig
from .errors import ConfigSpanError, TooFewRecords
from .features import (
    ScalerParams,
    Season,
    SequenceSet,
    chrono_split,
    fit_scaler,
    make_sequences,
    season_labels,
    seasonal_filter,
)
from .ingest import (
    HourlySeries,
    demand_era,
    drop_missing_demand,
    join_hourly,
    parse_series_csv,
)
from .metrics import MetricsReport, metrics_report
from .neural.training import LstmRegressor, TrainTrace, train
from .piecewise import PiecewiseModel, fit_piecewise

log = logging.getLogger(__name__)

IDENTITY = ScalerParams(0.0, 1.0)
SCOPE_SEASON = {"summer": Season.SUMMER, "winter": Season.WINTER}


@dataclass
class PreparedData:
    series: HourlySeries
    holdout: HourlySeries
    train: HourlySeries
    backcast: HourlySeries  # span plus the lookback hours its first windows need
    span: tuple[np.datetime64, np.datetime64]
    dropped: int


@dataclass
class BackcastResult:
    predictions: pd.DataFrame  # timestamp, model, season, demand_mw
    holdout: pd.DataFrame  # timestamp, model, season, temperature_c, actual_mw, predicted_mw
    metrics: dict[str, MetricsReport]
    models: dict[str, object]
    traces: dict[str, TrainTrace] = field(default_factory=dict)
    clamped: dict[str, int] = field(default_factory=dict)
    dropped: int = 0
    config: RunConfig | None = None


def load_series(config: RunConfig) -> HourlySeries:
    demand = parse_series_csv(
        config.demand_path,
        "MW",
        timestamp_col=config.timestamp_column,
        value_col=config.demand_column,
        utc_offset_hours=config.utc_offset_hours,
    )
    temperature = parse_series_csv(
        config.temperature_path,
        config.temperature_unit,
        timestamp_col=config.timestamp_column,
        value_col=config.temperature_column,
        utc_offset_hours=config.utc_offset_hours,
    )
    return join_hourly(demand, temperature, (str(config.demand_path), str(config.temperature_path)))


def prepare(config: RunConfig, series: HourlySeries | None = None) -> PreparedData:
    if series is None:
        series = load_series(config)
    era = demand_era(series)
    start, end = config.backcast_span
    if end >= era.timestamps[0]:
        raise ConfigSpanError(
            f"back-forecast span must end before the first demand hour {era.timestamps[0]}"
        )
    if start < series.timestamps[0] or end > series.timestamps[-1]:
        raise ConfigSpanError(
            f"temperature covers {series.timestamps[0]}..{series.timestamps[-1]}, "
            f"not the requested span {start}..{end}"
        )
    era, dropped = drop_missing_demand(era, config.max_missing_frac)
    if dropped:
        log.info("dropped %d hours with missing demand", dropped)
    holdout, train_part = chrono_split(era, config.holdout_frac)
    lookback = np.timedelta64(config.train.seq_len - 1, "h")
    backcast = series.between(start - lookback, end)
    return PreparedData(series, holdout, train_part, backcast, (start, end), dropped)


def model_scopes(config: RunConfig) -> tuple[str, ...]:
    return ("annual",) if config.seasonal_mode == "annual" else ("annual", "summer", "winter")


def scope_of(season: Season, config: RunConfig) -> str:
    if config.seasonal_mode == "summer_winter" and season in (Season.SUMMER, Season.WINTER):
        return season.value
    return "annual"


def _scope_records(train_part: HourlySeries, scope: str) -> HourlySeries:
    return train_part if scope == "annual" else seasonal_filter(train_part, SCOPE_SEASON[scope])


def _calendar(s: SequenceSet) -> dict[str, np.ndarray]:
    return {"hour": s.hour, "dow": s.dow, "month": s.month, "year": s.year}


def fit_piecewise_scope(train_part: HourlySeries, scope: str, config: RunConfig) -> PiecewiseModel:
    recs = _scope_records(train_part, scope)
    if len(recs) < 2:
        raise TooFewRecords(f"no training records for the {scope} piecewise model")
    s = make_sequences(recs, 1, IDENTITY, allow_empty=True)
    pc = config.piecewise
    return fit_piecewise(
        s.temperature_c,
        _calendar(s),
        s.demand_mw,
        knots=pc.knots,
        n_knots=pc.n_knots,
        effects=pc.effects,
    )


def fit_lstm_scope(
    train_part: HourlySeries, scope: str, config: RunConfig
) -> tuple[LstmRegressor, TrainTrace]:
    recs = _scope_records(train_part, scope)
    if len(recs) == 0:
        raise TooFewRecords(f"no training records for the {scope} LSTM")
    tsc = fit_scaler(recs.temperature_c)
    dsc = fit_scaler(recs.demand_mw)
    # windows are built over the whole partition so that the first hours of
    # a season still see the preceding days' temperature
    samples = make_sequences(train_part, config.train.seq_len, tsc, dsc)
    if scope != "annual":
        samples = samples.season_subset(SCOPE_SEASON[scope])
    n_val = int(len(samples) * config.checkpoint_frac)
    if n_val == 0 or n_val == len(samples):
        raise TooFewRecords(f"{len(samples)} samples are too few to carve a checkpoint set")
    tc = dataclasses.replace(config.train, seed=config.seed)
    log.info("training %s LSTM on %d samples (%d for checkpointing)", scope, len(samples) - n_val, n_val)
    return train(samples.subset(slice(n_val, None)), samples.subset(slice(0, n_val)), tc, tsc, dsc)


def fit_models(prep: PreparedData, config: RunConfig) -> tuple[dict[str, object], dict[str, TrainTrace]]:
    """Fit every (kind, scope) model; keys look like ``lstm/winter``."""
    models: dict[str, object] = {}
    traces: dict[str, TrainTrace] = {}
    for kind in config.model_kinds:
        for scope in model_scopes(config):
            key = f"{kind}/{scope}"
            if kind == "piecewise":
                models[key] = fit_piecewise_scope(prep.train, scope, config)
            else:
                models[key], traces[key] = fit_lstm_scope(prep.train, scope, config)
    return models, traces


def predict_samples(model, samples: SequenceSet) -> np.ndarray:
    """MW predictions for samples whose windows are in degrees C."""
    if isinstance(model, PiecewiseModel):
        return model.predict(samples.temperature_c, _calendar(samples))
    scaled = dataclasses.replace(samples, windows=model.temp_scaler.apply(samples.windows))
    return model.predict(scaled)


def predict_kind(
    models: dict[str, object], kind: str, samples: SequenceSet, config: RunConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Route every sample to its season's model; returns predictions and season labels."""
    labels = season_labels(samples.month)
    seasons = np.array([s.value for s in labels], dtype="<U6")
    scopes = np.array([scope_of(s, config) for s in labels], dtype="<U6")
    out = np.full(len(samples), np.nan)
    for scope in model_scopes(config):
        mask = scopes == scope
        if mask.any():
            out[mask] = predict_samples(models[f"{kind}/{scope}"], samples.subset(mask))
    return out, seasons


def _clamp(pred: np.ndarray) -> tuple[np.ndarray, int]:
    neg = pred < 0
    return np.where(neg, 0.0, pred), int(neg.sum())


def evaluate_holdout(
    models: dict[str, object], prep: PreparedData, config: RunConfig
) -> tuple[pd.DataFrame, dict[str, MetricsReport], dict[str, int]]:
    """Score hold-out hours with full windows, overall and per season."""
    samples = make_sequences(prep.holdout, config.train.seq_len, IDENTITY)
    frames, reports, clamped = [], {}, {}
    for kind in config.model_kinds:
        pred, seasons = predict_kind(models, kind, samples, config)
        pred, clamped[kind] = _clamp(pred)
        y, temp = samples.demand_mw, samples.temperature_c
        p = models[f"{kind}/annual"].n_predictors if kind == "piecewise" and config.seasonal_mode == "annual" else None
        report = metrics_report(y, pred, temp, p)
        for season in Season:
            m = seasons == season.value
            if m.sum() < 2 or np.ptp(y[m]) == 0:
                continue
            sp = None
            if kind == "piecewise":
                sp = models[f"piecewise/{scope_of(season, config)}"].n_predictors
            report.seasons[season.value] = metrics_report(y[m], pred[m], temp[m], sp)
        reports[kind] = report
        frames.append(
            pd.DataFrame(
                {
                    "timestamp": samples.timestamps,
                    "model": kind,
                    "season": seasons,
                    "temperature_c": temp,
                    "actual_mw": y,
                    "predicted_mw": pred,
                }
            )
        )
    return pd.concat(frames, ignore_index=True), reports, clamped


def backcast_predictions(
    models: dict[str, object], prep: PreparedData, config: RunConfig
) -> tuple[pd.DataFrame, dict[str, int]]:
    """One row per model per span hour that has a complete temperature window."""
    samples = make_sequences(prep.backcast, config.train.seq_len, IDENTITY, allow_empty=True)
    start, end = prep.span
    samples = samples.subset((samples.timestamps >= start) & (samples.timestamps <= end))
    frames, clamped = [], {}
    for kind in config.model_kinds:
        pred, seasons = predict_kind(models, kind, samples, config)
        pred, clamped[kind] = _clamp(pred)
        if clamped[kind]:
            log.warning("%s: clamped %d negative back-forecasts to 0 MW", kind, clamped[kind])
        frames.append(
            pd.DataFrame(
                {
                    "timestamp": samples.timestamps,
                    "model": kind,
                    "season": seasons,
                    "demand_mw": pred,
                }
            )
        )
    return pd.concat(frames, ignore_index=True), clamped


def run_backcast(config: RunConfig, series: HourlySeries | None = None) -> BackcastResult:
    prep = prepare(config, series)
    models, traces = fit_models(prep, config)
    holdout, metrics, clamped_hold = evaluate_holdout(models, prep, config)
    preds, clamped = backcast_predictions(models, prep, config)
    for kind, n in clamped_hold.items():
        clamped[f"{kind}/holdout"] = n
    return BackcastResult(preds, holdout, metrics, models, traces, clamped, prep.dropped, config)


def model_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "piecewise":
        return PiecewiseModel.from_dict(d)
    if kind == "lstm":
        return LstmRegressor.from_dict(d)
    raise ValueError(f"unknown model artifact kind {kind!r}")


def save_models(models: dict[str, object], directory) -> dict[str, Path]:
    """One JSON artifact per model, named ``<kind>_<scope>.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = {}
    for key, model in models.items():
        path = directory / (key.replace("/", "_") + ".json")
        path.write_text(json.dumps(model.to_dict(), sort_keys=True), encoding="utf-8")
        paths[key] = path
    return paths


def load_models(directory) -> dict[str, object]:
    directory = Path(directory)
    files = sorted(directory.glob("*.json"))
    if not files:
        raise FileNotFoundError(f"no model artifacts in {directory}")
    models = {}
    for path in files:
        kind, _, scope = path.stem.partition("_")
        models[f"{kind}/{scope}"] = model_from_dict(json.loads(path.read_text(encoding="utf-8")))
    return models
