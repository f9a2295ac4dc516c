"""Mini-batch training of the LSTM regressor with best-epoch checkpointing."""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from ..errors import ConfigError, Diverged, EmptyInput
from ..features import ScalerParams, SequenceSet
from .lstm import LstmParams, backward, forward, init_params, mse_grad
from .optim import AdamState, PlateauScheduler, adam_step, sgd_step

log = logging.getLogger(__name__)

ARTIFACT_VERSION = 1


@dataclass
class PlateauConfig:
    factor: float = 0.5
    patience: int = 10
    min_lr: float = 1e-5


@dataclass
class TrainConfig:
    learning_rate: float = 0.009
    epochs: int = 1700
    optimizer: str = "adam"
    batch_size: int = 256
    seed: int = 0
    seq_len: int = 24
    hidden_size: int = 64
    dense_units: int = 32
    embed_hour: int = 8
    embed_dow: int = 4
    embed_month: int = 8
    embed_year: int = 4
    dropout: float = 0.2
    scheduler: PlateauConfig | None = None
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    dtype: str = "float32"

    def __post_init__(self):
        if isinstance(self.scheduler, dict):
            self.scheduler = PlateauConfig(**self.scheduler)
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError(f"optimizer must be 'adam' or 'sgd', got {self.optimizer!r}")
        if self.batch_size < 1 or self.seq_len < 1 or self.hidden_size < 1:
            raise ConfigError("batch_size, seq_len and hidden_size must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must lie in [0, 1)")
        if self.dtype not in ("float32", "float64"):
            raise ConfigError("dtype must be float32 or float64")
        if not 12 <= self.seq_len <= 36:
            log.warning("sequence length %d is outside the 12-36 hour band", self.seq_len)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> TrainConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class YearVocab:
    """Training years; any other year maps to the reserved last row."""

    years: tuple[int, ...]

    @property
    def oov_index(self) -> int:
        return len(self.years)

    def encode(self, years: np.ndarray) -> np.ndarray:
        lut = {y: i for i, y in enumerate(self.years)}
        return np.fromiter((lut.get(int(y), self.oov_index) for y in years), dtype=np.int64, count=len(years))


def encode_categories(s: SequenceSet, vocab: YearVocab) -> dict[str, np.ndarray]:
    return {
        "hour": s.hour.astype(np.int64),
        "dow": s.dow.astype(np.int64),
        "month": s.month.astype(np.int64) - 1,
        "year": vocab.encode(s.year),
    }


def sync_oov_year(params: LstmParams) -> None:
    """Set the out-of-vocabulary year row to the mean of the trained rows."""
    table = params.tensors["emb_year"]
    if table.shape[0] > 1:
        table[-1] = table[:-1].mean(axis=0)


@dataclass
class LstmRegressor:
    params: LstmParams
    config: TrainConfig
    temp_scaler: ScalerParams
    demand_scaler: ScalerParams
    vocab: YearVocab

    def predict_scaled(self, s: SequenceSet, chunk: int = 8192) -> np.ndarray:
        cats = encode_categories(s, self.vocab)
        out = np.empty(len(s))
        for lo in range(0, len(s), chunk):
            sl = slice(lo, lo + chunk)
            y, _ = forward(
                self.params,
                s.windows[sl],
                {k: v[sl] for k, v in cats.items()},
                training=False,
                seq_len=self.config.seq_len,
            )
            out[sl] = y
        return out

    def predict(self, s: SequenceSet) -> np.ndarray:
        """Demand in MW for every sample (eval mode, deterministic)."""
        return self.demand_scaler.invert(self.predict_scaled(s))

    def to_dict(self) -> dict:
        return {
            "version": ARTIFACT_VERSION,
            "kind": "lstm",
            "config": self.config.to_dict(),
            "temp_scaler": self.temp_scaler.to_dict(),
            "demand_scaler": self.demand_scaler.to_dict(),
            "years": list(self.vocab.years),
            "dropout_rate": self.params.dropout_rate,
            "tensors": {
                k: {"shape": list(v.shape), "data": v.astype(float).ravel().tolist()}
                for k, v in self.params.tensors.items()
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> LstmRegressor:
        config = TrainConfig.from_dict(d["config"])
        dt = np.dtype(config.dtype)
        tensors = {
            k: np.asarray(v["data"], dtype=dt).reshape(v["shape"]) for k, v in d["tensors"].items()
        }
        return cls(
            LstmParams(tensors, float(d["dropout_rate"])),
            config,
            ScalerParams.from_dict(d["temp_scaler"]),
            ScalerParams.from_dict(d["demand_scaler"]),
            YearVocab(tuple(d["years"])),
        )


@dataclass
class TraceRow:
    epoch: int
    train_loss: float
    val_rmse_mw: float
    lr: float
    seconds: float


@dataclass
class TrainTrace:
    rows: list[TraceRow] = field(default_factory=list)
    best_epoch: int = 0

    def __len__(self) -> int:
        return len(self.rows)

    def to_csv(self, path, include_timing: bool = True) -> None:
        cols = ["epoch", "train_loss", "val_rmse_mw", "lr"] + (["seconds"] if include_timing else [])
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for r in self.rows:
                w.writerow([repr(getattr(r, c)) if c != "epoch" else r.epoch for c in cols])


def _rmse(y, yhat) -> float:
    return float(np.sqrt(np.mean((np.asarray(y) - np.asarray(yhat)) ** 2)))


def train(
    train_set: SequenceSet,
    val_set: SequenceSet,
    config: TrainConfig,
    temp_scaler: ScalerParams,
    demand_scaler: ScalerParams,
) -> tuple[LstmRegressor, TrainTrace]:
    """Fit an LSTM regressor and return the best-validation-epoch model.

    Loss is MSE on scaled demand; validation RMSE is measured in MW. The
    seed fixes initialisation, shuffling and dropout, so identical inputs
    give identical traces (apart from wall time).
    """
    if len(train_set) == 0 or len(val_set) == 0:
        raise EmptyInput("training and validation sets must be nonempty")
    if np.isnan(train_set.target_scaled).any():
        raise ValueError("training samples must all carry a demand target")
    dt = np.dtype(config.dtype)
    vocab = YearVocab(tuple(int(y) for y in np.unique(train_set.year)))
    init_seq, shuffle_seq, dropout_seq = np.random.SeedSequence(config.seed).spawn(3)
    params = init_params(
        hidden_size=config.hidden_size,
        n_years=len(vocab.years),
        embed_hour=config.embed_hour,
        embed_dow=config.embed_dow,
        embed_month=config.embed_month,
        embed_year=config.embed_year,
        dense_units=config.dense_units,
        dropout_rate=config.dropout,
        seed=init_seq,
        dtype=dt,
    )
    shuffle_rng = np.random.default_rng(shuffle_seq)
    dropout_rng = np.random.default_rng(dropout_seq)
    model = LstmRegressor(params, config, temp_scaler, demand_scaler, vocab)

    X = train_set.windows.astype(dt)
    y = train_set.target_scaled.astype(dt)
    cats = encode_categories(train_set, vocab)
    val_truth = val_set.demand_mw
    if np.isnan(val_truth).any():
        raise ValueError("validation samples must all carry demand")

    adam = AdamState()
    sched = (
        PlateauScheduler(config.learning_rate, **asdict(config.scheduler))
        if config.scheduler is not None
        else None
    )
    lr = config.learning_rate
    trace = TrainTrace()
    best_rmse = math.inf
    best_tensors = None
    n = len(train_set)
    for epoch in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        order = shuffle_rng.permutation(n)
        total = 0.0
        for lo in range(0, n, config.batch_size):
            idx = order[lo : lo + config.batch_size]
            pred, cache = forward(
                params, X[idx], {k: v[idx] for k, v in cats.items()}, True, dropout_rng
            )
            err = pred - y[idx]
            loss = float(np.mean(err.astype(float) ** 2))
            if not math.isfinite(loss):
                raise Diverged(f"non-finite training loss at epoch {epoch}")
            total += loss * len(idx)
            grads = backward(params, cache, mse_grad(pred, y[idx]))
            if config.optimizer == "adam":
                adam_step(params.tensors, grads, adam, lr, config.beta1, config.beta2, config.eps)
            else:
                sgd_step(params.tensors, grads, lr)
            params.version += 1
        sync_oov_year(params)
        val_rmse = _rmse(val_truth, model.predict(val_set))
        if not math.isfinite(val_rmse):
            raise Diverged(f"non-finite validation RMSE at epoch {epoch}")
        trace.rows.append(TraceRow(epoch, total / n, val_rmse, lr, time.perf_counter() - t0))
        if val_rmse < best_rmse:
            best_rmse = val_rmse
            best_tensors = {k: v.copy() for k, v in params.tensors.items()}
            trace.best_epoch = epoch
        if sched is not None:
            lr = sched.step(val_rmse)
        log.debug("epoch %d loss %.6f val_rmse %.3f lr %.5g", epoch, total / n, val_rmse, lr)

    best = LstmParams(best_tensors, config.dropout)
    log.info("best epoch %d of %d, validation RMSE %.3f MW", trace.best_epoch, config.epochs, best_rmse)
    return LstmRegressor(best, config, temp_scaler, demand_scaler, vocab), trace
