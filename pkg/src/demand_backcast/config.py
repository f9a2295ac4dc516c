"""Run configuration: file loading, dotted-key overrides, validation."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from .errors import ConfigError
from .neural.training import PlateauConfig, TrainConfig
from .piecewise import EFFECTS

MODEL_KINDS = ("piecewise", "lstm", "both")
SEASONAL_MODES = ("annual", "summer_winter")


@dataclass
class PiecewiseConfig:
    n_knots: int = 4
    knots: list[float] | None = None
    effects: list[str] = field(default_factory=lambda: list(EFFECTS))

    def __post_init__(self):
        if self.n_knots < 0:
            raise ConfigError("piecewise.n_knots must be >= 0")
        bad = set(self.effects) - set(EFFECTS)
        if bad:
            raise ConfigError(f"unknown piecewise effects {sorted(bad)}")


@dataclass
class RunConfig:
    temperature_path: str = "temperature.csv"
    demand_path: str = "demand.csv"
    timestamp_column: str = "timestamp"
    demand_column: str = "value"
    temperature_column: str = "value"
    temperature_unit: str = "Kelvin"
    utc_offset_hours: float = 0.0
    holdout_frac: float = 0.2
    checkpoint_frac: float = 0.1
    max_missing_frac: float = 0.05
    model: str = "both"
    seasonal_mode: str = "annual"
    backcast_start: str = "1980-01-01"
    backcast_end: str = "2014-12-31"
    output_dir: str = "out"
    seed: int = 0
    figures: bool = True
    train: TrainConfig = field(default_factory=TrainConfig)
    piecewise: PiecewiseConfig = field(default_factory=PiecewiseConfig)

    def __post_init__(self):
        if isinstance(self.train, dict):
            self.train = _from_dict(TrainConfig, self.train)
        if isinstance(self.piecewise, dict):
            self.piecewise = _from_dict(PiecewiseConfig, self.piecewise)
        self.validate()

    def validate(self) -> None:
        if self.model not in MODEL_KINDS:
            raise ConfigError(f"model must be one of {MODEL_KINDS}, got {self.model!r}")
        if self.seasonal_mode not in SEASONAL_MODES:
            raise ConfigError(f"seasonal_mode must be one of {SEASONAL_MODES}")
        if self.temperature_unit not in ("Kelvin", "Celsius"):
            raise ConfigError("temperature_unit must be Kelvin or Celsius")
        if not 0 < self.holdout_frac < 1:
            raise ConfigError("holdout_frac must lie in (0, 1)")
        if not 0 < self.checkpoint_frac < 1:
            raise ConfigError("checkpoint_frac must lie in (0, 1)")
        if not 0 <= self.max_missing_frac <= 1:
            raise ConfigError("max_missing_frac must lie in [0, 1]")
        start, end = self.backcast_span
        if end < start:
            raise ConfigError("backcast_end precedes backcast_start")

    @property
    def model_kinds(self) -> tuple[str, ...]:
        return ("piecewise", "lstm") if self.model == "both" else (self.model,)

    @property
    def backcast_span(self) -> tuple[np.datetime64, np.datetime64]:
        """Inclusive first and last hour; a bare end date covers its whole day."""
        try:
            start = np.datetime64(self.backcast_start, "h")
            end = np.datetime64(self.backcast_end, "h")
        except ValueError as exc:
            raise ConfigError(f"bad backcast span: {exc}") from None
        if len(self.backcast_end.strip()) == 10:
            end = end + np.timedelta64(23, "h")
        return start, end

    def resolve(self, base: Path) -> RunConfig:
        """Copy with relative input paths made relative to ``base``."""
        d = self.to_dict()
        for k in ("temperature_path", "demand_path"):
            p = Path(d[k])
            if not p.is_absolute():
                d[k] = str(base / p)
        return RunConfig.from_dict(d)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        return _from_dict(cls, d)


def _from_dict(cls, d: dict):
    if not isinstance(d, dict):
        raise ConfigError(f"{cls.__name__} section must be a table")
    known = {f.name for f in fields(cls)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    try:
        return cls(**d)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config_file(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    try:
        if path.suffix.lower() == ".toml":
            return tomllib.loads(text)
        return json.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


_SECTIONS = {"train": TrainConfig, "piecewise": PiecewiseConfig, "train.scheduler": PlateauConfig}


def apply_overrides(d: dict, overrides: list[str]) -> dict:
    """Apply ``key=value`` strings with dotted keys; unknown keys are errors.

    Values are read as JSON when possible (``50``, ``true``, ``[1, 2]``,
    ``null``) and as plain strings otherwise.
    """
    d = json.loads(json.dumps(d))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        parts = key.strip().split(".")
        cls = RunConfig
        target = d
        for depth, part in enumerate(parts):
            names = {f.name for f in fields(cls)}
            if part not in names:
                raise ConfigError(f"unknown config key {key!r}")
            if depth == len(parts) - 1:
                target[part] = _parse_value(raw)
                break
            section = ".".join(parts[: depth + 1])
            if section not in _SECTIONS:
                raise ConfigError(f"{section!r} is not a config section (in {key!r})")
            cls = _SECTIONS[section]
            if target.get(part) is None:
                target[part] = {}
            target = target[part]
    return d


def build_config(path=None, overrides: list[str] = (), seed: int | None = None, output_dir=None) -> RunConfig:
    d = load_config_file(path) if path is not None else {}
    d = apply_overrides(d, list(overrides))
    if seed is not None:
        d["seed"] = seed
    if output_dir is not None:
        d["output_dir"] = str(output_dir)
    cfg = RunConfig.from_dict(d)
    if path is not None:
        cfg = cfg.resolve(Path(path).resolve().parent)
    return cfg

