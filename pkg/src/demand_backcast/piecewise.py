"""Continuous piecewise-linear (hinge basis) regression with calendar dummies.

Design matrix column order::

    intercept, temperature, hinge@k1 .. hinge@kK,
    hour=<lvl>..., dow=<lvl>..., month=<lvl>..., year=<lvl>...

Each effect's first (lowest) observed level is the dropped reference.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg

from .errors import EmptyInput, NonFiniteInput, RankDeficientWarning
from .features import CalendarFeatures

EFFECTS = ("hour", "dow", "month", "year")


def select_knots(temps, k: int) -> list[float]:
    """``k`` interior knots at the ``i/(k+1)`` empirical quantiles, duplicates collapsed."""
    arr = np.asarray(temps, dtype=float)
    if arr.size == 0:
        raise EmptyInput("no temperatures to place knots in")
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return []
    q = np.arange(1, k + 1) / (k + 1)
    knots = np.unique(np.quantile(arr, q, method="linear"))
    # knots at the extremes add nothing but a zero (or duplicate linear) column
    knots = knots[(knots > arr.min()) & (knots < arr.max())]
    return [float(x) for x in knots]


@dataclass(frozen=True)
class PiecewiseSpec:
    knots: tuple[float, ...] = ()
    effects: tuple[str, ...] = EFFECTS

    def __post_init__(self):
        knots = tuple(float(x) for x in self.knots)
        if any(b <= a for a, b in zip(knots, knots[1:])):
            raise ValueError(f"knots must be strictly ascending: {knots}")
        unknown = set(self.effects) - set(EFFECTS)
        if unknown:
            raise ValueError(f"unknown fixed effects {sorted(unknown)}")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "effects", tuple(e for e in EFFECTS if e in self.effects))


def column_names(spec: PiecewiseSpec, levels: Mapping[str, Sequence[int]]) -> list[str]:
    cols = ["intercept", "temperature"] + [f"hinge@{k:g}" for k in spec.knots]
    for eff in spec.effects:
        cols += [f"{eff}={lvl}" for lvl in levels[eff][1:]]
    return cols


def build_design_matrix(
    temperature_c,
    calendar: Mapping[str, np.ndarray] | None,
    spec: PiecewiseSpec,
    levels: Mapping[str, Sequence[int]] | None = None,
) -> np.ndarray:
    """One row per record: ``[1, T, max(0, T-k)..., dummies...]``.

    ``calendar`` maps effect name to an integer array (see
    ``features.calendar_arrays``); values outside ``levels`` encode as the
    reference level, i.e. all-zero dummies.
    """
    t = np.atleast_1d(np.asarray(temperature_c, dtype=float))
    n = len(t)
    blocks = [np.ones((n, 1)), t[:, None]]
    if spec.knots:
        blocks.append(np.maximum(0.0, t[:, None] - np.asarray(spec.knots)[None, :]))
    for eff in spec.effects:
        if calendar is None or levels is None:
            raise ValueError(f"effect {eff!r} requires calendar values and levels")
        lv = np.asarray(levels[eff][1:])
        vals = np.asarray(calendar[eff])
        blocks.append((vals[:, None] == lv[None, :]).astype(float))
    return np.hstack(blocks)


def fit_ols(X, y, *, rcond: float | None = None) -> np.ndarray:
    """Least squares via column-pivoted QR.

    On numerical rank deficiency a ``RankDeficientWarning`` is emitted and
    the minimum-norm solution is returned instead.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise NonFiniteInput("design matrix or target contains NaN/inf")
    n, p = X.shape
    if n < p:
        raise ValueError(f"need at least as many rows as columns ({n} < {p})")
    if p == 0:
        return np.zeros(0)
    Q, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = (rcond if rcond is not None else max(n, p) * np.finfo(float).eps) * diag[0]
    rank = int((diag > tol).sum())
    if rank < p:
        warnings.warn(
            f"design matrix has rank {rank} < {p} columns; returning minimum-norm solution",
            RankDeficientWarning,
            stacklevel=2,
        )
        return np.linalg.lstsq(X, y, rcond=None)[0]
    z = scipy.linalg.solve_triangular(R, Q.T @ y)
    beta = np.empty(p)
    beta[piv] = z
    return beta


@dataclass(frozen=True)
class PiecewiseModel:
    spec: PiecewiseSpec
    levels: dict[str, tuple[int, ...]]
    coefficients: np.ndarray
    columns: tuple[str, ...] = field(default=())

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=float)
        coef.flags.writeable = False
        object.__setattr__(self, "coefficients", coef)
        expected = column_names(self.spec, self.levels)
        if len(coef) != len(expected):
            raise ValueError(f"{len(coef)} coefficients for {len(expected)} columns")
        object.__setattr__(self, "columns", tuple(expected))

    @property
    def reference_levels(self) -> dict[str, int]:
        return {eff: lv[0] for eff, lv in self.levels.items()}

    @property
    def reference_year(self) -> int | None:
        lv = self.levels.get("year")
        return lv[0] if lv else None

    @property
    def n_predictors(self) -> int:
        """Column count excluding the intercept (``p`` for adjusted R^2)."""
        return len(self.coefficients) - 1

    def predict(self, temperature_c, calendar: Mapping[str, np.ndarray] | None = None) -> np.ndarray:
        X = build_design_matrix(temperature_c, calendar, self.spec, self.levels)
        return X @ self.coefficients

    def predict_one(self, temperature_c: float, cal: CalendarFeatures | None = None) -> float:
        calendar = None
        if cal is not None:
            calendar = {
                "hour": np.array([cal.hour]),
                "dow": np.array([cal.day_of_week]),
                "month": np.array([cal.month]),
                "year": np.array([cal.year]),
            }
        return float(self.predict([temperature_c], calendar)[0])

    def to_dict(self) -> dict:
        return {
            "kind": "piecewise",
            "knots": list(self.spec.knots),
            "effects": list(self.spec.effects),
            "levels": {k: list(map(int, v)) for k, v in self.levels.items()},
            "reference_levels": self.reference_levels,
            "columns": list(self.columns),
            "coefficients": [float(c) for c in self.coefficients],
        }

    @classmethod
    def from_dict(cls, d: dict) -> PiecewiseModel:
        spec = PiecewiseSpec(tuple(d["knots"]), tuple(d["effects"]))
        levels = {k: tuple(v) for k, v in d["levels"].items()}
        return cls(spec, levels, np.asarray(d["coefficients"], dtype=float))


def fit_piecewise(
    temperature_c,
    calendar: Mapping[str, np.ndarray] | None,
    demand_mw,
    *,
    knots: Sequence[float] | None = None,
    n_knots: int = 4,
    effects: Sequence[str] = EFFECTS,
) -> PiecewiseModel:
    """Fit the hinge model on training data.

    Explicit ``knots`` (degrees C) override quantile placement and must lie
    inside the observed temperature range.
    """
    t = np.asarray(temperature_c, dtype=float)
    y = np.asarray(demand_mw, dtype=float)
    if t.size == 0:
        raise EmptyInput("no training records")
    if knots is None:
        knots = select_knots(t, n_knots)
    else:
        knots = sorted(float(k) for k in knots)
        lo, hi = float(t.min()), float(t.max())
        outside = [k for k in knots if not lo <= k <= hi]
        if outside:
            raise ValueError(f"knots {outside} outside training temperature range [{lo}, {hi}]")
    spec = PiecewiseSpec(tuple(knots), tuple(effects) if calendar is not None else ())
    levels = {}
    for eff in spec.effects:
        levels[eff] = tuple(int(v) for v in np.unique(calendar[eff]))
    X = build_design_matrix(t, calendar, spec, levels)
    return PiecewiseModel(spec, levels, fit_ols(X, y))
