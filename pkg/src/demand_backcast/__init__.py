"""Back-forecasting of hourly electricity demand from historical temperature.

Two model families are provided: a piecewise-linear regression on temperature
with calendar fixed effects, and a from-scratch numpy LSTM over a trailing
window of hourly temperatures with calendar embeddings.
"""

from .config import RunConfig, build_config
from .errors import BackcastError, ConfigError, DataError, NumericalError
from .ingest import HourlySeries, join_hourly, parse_series_csv
from .metrics import MetricsReport, mape, r_squared, rmse, spearman
from .piecewise import PiecewiseModel, fit_piecewise
from .pipeline import BackcastResult, run_backcast
from .synth import SynthScenario, generate

__version__ = "0.1.0"

__all__ = [
    "BackcastError",
    "BackcastResult",
    "ConfigError",
    "DataError",
    "HourlySeries",
    "MetricsReport",
    "NumericalError",
    "PiecewiseModel",
    "RunConfig",
    "SynthScenario",
    "build_config",
    "fit_piecewise",
    "generate",
    "join_hourly",
    "mape",
    "parse_series_csv",
    "r_squared",
    "rmse",
    "run_backcast",
    "spearman",
]
