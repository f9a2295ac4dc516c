import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from demand_backcast.errors import AllTargetsZero, ConstantInput, ConstantTarget, DegreesOfFreedom, LengthMismatch
from demand_backcast.metrics import (
    adjust_r_squared,
    adjusted_r_squared,
    grouped_stats,
    mape,
    metrics_report,
    r_squared,
    rmse,
    spearman,
    sse,
    top_k_hours,
)

T1, T2, T3 = np.array(["2015-01-01T00", "2015-01-01T01", "2015-01-01T02"], dtype="datetime64[h]")


def test_rmse_examples():
    assert rmse([3.0, 1.0], [3.0, 1.0]) == 0.0
    assert rmse([0, 0], [3, 4]) == math.sqrt(12.5)
    assert rmse([1], [0]) == 1.0


def test_rmse_length_mismatch():
    with pytest.raises(LengthMismatch):
        rmse([1, 2], [1])
    with pytest.raises(LengthMismatch):
        rmse([], [])


def test_r2_examples():
    y = np.array([1.0, 4.0, 2.0, 8.0])
    assert r_squared(y, y) == 1.0
    assert r_squared(y, np.full(4, y.mean())) == 0.0


def test_r2_constant_target():
    with pytest.raises(ConstantTarget):
        r_squared([2.0, 2.0], [1.0, 3.0])


def test_adjusted_r2_formula():
    assert adjust_r_squared(0.9, 5, 1) == pytest.approx(1 - 0.1 * 4 / 3, rel=1e-15)
    assert round(adjust_r_squared(0.9, 5, 1), 4) == 0.8667


def test_adjusted_r2_degrees_of_freedom():
    with pytest.raises(DegreesOfFreedom):
        adjusted_r_squared([1.0, 2.0, 3.0], [1.0, 2.0, 2.0], 2)


def test_mape_examples():
    assert mape([100], [94]) == 6.0
    assert mape([5.0, 7.0], [5.0, 7.0]) == 0.0
    assert mape([100, 200], [110, 180]) == 10.0


def test_mape_skips_zero_targets(caplog):
    assert mape([0.0, 100.0], [5.0, 94.0]) == 6.0
    assert "excluded 1" in caplog.text


def test_mape_all_zero():
    with pytest.raises(AllTargetsZero):
        mape([0.0, 0.0], [1.0, 2.0])


def test_spearman_examples():
    assert spearman([1, 2, 3], [10, 20, 30]) == 1.0
    assert spearman([1, 2, 3], [30, 20, 10]) == -1.0
    assert spearman([1, 1, 2], [3, 3, 5]) == pytest.approx(1.0, abs=1e-15)


def test_spearman_constant():
    with pytest.raises(ConstantInput):
        spearman([1, 1, 1], [1, 2, 3])


def test_grouped_stats_examples():
    ts = np.array([T1, T1 + np.timedelta64(24, "h")])
    assert grouped_stats(ts, [1.0, 3.0], "hour_of_day", "max") == {0: 3.0}
    assert grouped_stats(ts, [1.0, 3.0], "hour_of_day", "std_error") == {0: pytest.approx(1.0)}
    ts48 = T1 + np.arange(48).astype("timedelta64[h]")
    counts = grouped_stats(ts48, np.ones(48), "hour_of_day", "count")
    assert len(counts) == 24 and set(counts.values()) == {2.0}


def test_grouped_stats_by_year():
    ts = np.array(["2015-06-01T00", "2015-07-01T00", "2016-01-01T00"], dtype="datetime64[h]")
    assert grouped_stats(ts, [1.0, 2.0, 6.0], "year", "mean") == {2015: 1.5, 2016: 6.0}


def test_top_k_examples():
    assert top_k_hours([T1, T2, T3], [5.0, 9.0, 9.0], 1) == [(T2, 9.0)]
    assert len(top_k_hours([T1, T2], [1.0, 2.0], 3)) == 2


def test_top_k_per_year_bounded():
    ts = np.datetime64("1980-01-01T00", "h") + np.arange(0, 35 * 8766, 7).astype("timedelta64[h]")
    vals = np.random.default_rng(0).normal(size=len(ts))
    out = top_k_hours(ts, vals, 20, per_year=True)
    years = [int(str(t)[:4]) for t, _ in out]
    assert len(set(years)) == 35
    assert all(years.count(y) <= 20 for y in set(years))


def test_report_fields():
    rng = np.random.default_rng(0)
    y = rng.uniform(100, 200, 50)
    yhat = y + rng.normal(size=50)
    r = metrics_report(y, yhat, temperature=y * 2, p=3)
    assert r.n == 50 and r.p == 3
    assert r.adjusted_r2 == pytest.approx(adjust_r_squared(r.r2, 50, 3))
    assert r.spearman_temp_demand == 1.0
    assert metrics_report(y, yhat).adjusted_r2 is None


vec = st.lists(st.floats(-1e4, 1e4, allow_nan=False), min_size=2, max_size=40)


@given(vec, st.floats(-100, 100, allow_nan=False).filter(lambda c: abs(c) > 1e-3))
def test_rmse_scale_equivariant(y, c):
    y = np.array(y)
    yhat = y[::-1]
    assert rmse(c * y, c * yhat) == pytest.approx(abs(c) * rmse(y, yhat), rel=1e-9, abs=1e-9)


@given(vec)
def test_r2_exact_cases(y):
    y = np.array(y)
    if np.ptp(y) < 1e-6:  # squared spread would underflow
        return
    assert r_squared(y, y) == 1.0
    assert r_squared(y, np.full(len(y), y.mean())) == pytest.approx(0.0, abs=1e-12)


@given(st.lists(st.integers(-50, 50), min_size=3, max_size=30), st.sampled_from([np.exp, np.cbrt, lambda v: 3 * v + 1]))
def test_spearman_monotone_invariance(x, f):
    x = np.array(x, dtype=float)
    y = np.sin(x) + x
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return
    assert spearman(f(x / 10), y) == pytest.approx(spearman(x, y), abs=1e-12)


@given(vec, st.lists(st.integers(0, 3), min_size=40, max_size=40))
def test_sse_splits_by_group(y, labels):
    y = np.array(y)
    yhat = np.roll(y, 1)
    lab = np.array(labels[: len(y)])
    parts = sum(sse(y[lab == g], yhat[lab == g]) for g in np.unique(lab))
    assert parts == pytest.approx(sse(y, yhat), rel=1e-12, abs=1e-9)


@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=60), st.integers(1, 10))
def test_top_k_sorted_subset(vals, k):
    ts = T1 + np.arange(len(vals)).astype("timedelta64[h]")
    out = top_k_hours(ts, vals, k)
    got = [v for _, v in out]
    assert got == sorted(got, reverse=True)
    assert len(out) == min(k, len(vals))
    lookup = dict(zip(ts.tolist(), vals))
    assert all(lookup[t.tolist()] == v for t, v in out)
