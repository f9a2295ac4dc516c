"""Error metrics, grouped statistics and top-k extraction for evaluation tables."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import rankdata

from .errors import (
    AllTargetsZero,
    ConstantInput,
    ConstantTarget,
    DegreesOfFreedom,
    LengthMismatch,
)
from .features import calendar_arrays

log = logging.getLogger(__name__)


def _pair(y, yhat, min_len: int = 1) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape or y.ndim != 1:
        raise LengthMismatch(f"length mismatch: {y.shape} vs {yhat.shape}")
    if len(y) < min_len:
        raise LengthMismatch(f"need at least {min_len} values, got {len(y)}")
    return y, yhat


def rmse(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    return float(np.sqrt(np.mean((y - yhat) ** 2)))


def r_squared(y, yhat) -> float:
    y, yhat = _pair(y, yhat, 2)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise ConstantTarget("R^2 is undefined for a constant target")
    return 1.0 - float(np.sum((y - yhat) ** 2)) / ss_tot


def adjusted_r_squared(y, yhat, p: int) -> float:
    n = len(y)
    if n <= p + 1:
        raise DegreesOfFreedom(f"adjusted R^2 needs n > p + 1 (n={n}, p={p})")
    return 1.0 - (1.0 - r_squared(y, yhat)) * (n - 1) / (n - p - 1)


def adjust_r_squared(r2: float, n: int, p: int) -> float:
    if n <= p + 1:
        raise DegreesOfFreedom(f"adjusted R^2 needs n > p + 1 (n={n}, p={p})")
    return 1.0 - (1.0 - r2) * (n - 1) / (n - p - 1)


def mape(y, yhat) -> float:
    """Mean absolute percentage error in percent; zero targets are skipped."""
    y, yhat = _pair(y, yhat)
    nz = y != 0
    if not nz.any():
        raise AllTargetsZero("MAPE is undefined when every target is zero")
    skipped = int((~nz).sum())
    if skipped:
        log.warning("MAPE: excluded %d zero-valued targets", skipped)
    return float(100.0 * np.mean(np.abs(y[nz] - yhat[nz]) / np.abs(y[nz])))


def spearman(x, y) -> float:
    """Spearman rank correlation, ties assigned their average rank."""
    x, y = _pair(x, y, 2)
    rx, ry = rankdata(x, method="average"), rankdata(y, method="average")
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    denom = np.sqrt(np.sum(rx * rx) * np.sum(ry * ry))
    if denom == 0.0:
        raise ConstantInput("Spearman correlation is undefined for constant input")
    return float(np.sum(rx * ry) / denom)


@dataclass
class MetricsReport:
    rmse_mw: float
    r2: float
    adjusted_r2: float | None
    mape_percent: float
    spearman_temp_demand: float | None
    n: int
    p: int | None
    seasons: dict[str, MetricsReport] = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["seasons"] = {k: v.to_dict() for k, v in self.seasons.items()}
        return d


def metrics_report(y, yhat, temperature=None, p: int | None = None) -> MetricsReport:
    """All headline metrics for one slice; adjusted R^2 only when ``p`` is given."""
    y, yhat = _pair(y, yhat, 2)
    r2 = r_squared(y, yhat)
    adj = adjust_r_squared(r2, len(y), p) if p is not None and len(y) > p + 1 else None
    rho = None
    if temperature is not None:
        try:
            rho = spearman(temperature, y)
        except ConstantInput:
            rho = None
    return MetricsReport(rmse(y, yhat), r2, adj, mape(y, yhat), rho, len(y), p)


def sse(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    return float(np.sum((y - yhat) ** 2))


GROUP_KEYS = ("hour_of_day", "year")
STATS = ("max", "mean", "std_error", "count")


def grouped_stats(timestamps, values, group_key: str, stat: str) -> dict[int, float]:
    """One value per group, keyed by hour (0-23) or calendar year.

    ``std_error`` is the sample standard deviation (n-1) over sqrt(count);
    it is NaN for single-member groups.
    """
    if group_key not in GROUP_KEYS:
        raise ValueError(f"group_key must be one of {GROUP_KEYS}")
    if stat not in STATS:
        raise ValueError(f"stat must be one of {STATS}")
    values = np.asarray(values, dtype=float)
    cal = calendar_arrays(np.asarray(timestamps, dtype="datetime64[h]"))
    keys = cal["hour"] if group_key == "hour_of_day" else cal["year"]
    out: dict[int, float] = {}
    for k in np.unique(keys):
        v = values[keys == k]
        if stat == "max":
            out[int(k)] = float(v.max())
        elif stat == "mean":
            out[int(k)] = float(v.mean())
        elif stat == "count":
            out[int(k)] = float(len(v))
        else:
            out[int(k)] = float(v.std(ddof=1) / np.sqrt(len(v))) if len(v) > 1 else float("nan")
    return out


def top_k_hours(timestamps, values, k: int, per_year: bool = False) -> list[tuple[np.datetime64, float]]:
    """The ``k`` largest values, descending, earlier timestamp first on ties.

    With ``per_year`` the selection is made within each calendar year and the
    blocks are returned in year order.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    ts = np.asarray(timestamps, dtype="datetime64[h]")
    values = np.asarray(values, dtype=float)

    def pick(idx: np.ndarray) -> list[tuple[np.datetime64, float]]:
        order = np.lexsort((ts[idx], -values[idx]))[:k]
        return [(ts[idx][i], float(values[idx][i])) for i in order]

    if not per_year:
        return pick(np.arange(len(ts)))
    years = calendar_arrays(ts)["year"]
    out = []
    for y in np.unique(years):
        out.extend(pick(np.flatnonzero(years == y)))
    return out
