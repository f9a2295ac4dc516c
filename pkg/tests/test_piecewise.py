import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from demand_backcast.errors import EmptyInput, NonFiniteInput, RankDeficientWarning
from demand_backcast.features import CalendarFeatures
from demand_backcast.piecewise import (
    PiecewiseModel,
    PiecewiseSpec,
    build_design_matrix,
    column_names,
    fit_ols,
    fit_piecewise,
    select_knots,
)


def hinge_model(coef, knots):
    spec = PiecewiseSpec(tuple(knots), ())
    return PiecewiseModel(spec, {}, np.asarray(coef, dtype=float))


# select_knots


def test_median_knot():
    assert select_knots([1, 2, 3, 4, 5], 1) == [3.0]


def test_zero_knots():
    assert select_knots([4.0, 1.0, 9.0], 0) == []


def test_constant_data_collapses():
    assert select_knots([2, 2, 2, 2], 3) == []


def test_default_quantiles():
    t = np.arange(101, dtype=float)
    assert select_knots(t, 4) == [20.0, 40.0, 60.0, 80.0]


def test_knots_empty_input():
    with pytest.raises(EmptyInput):
        select_knots([], 2)


# design matrix


@pytest.mark.parametrize(
    "t, knots, row",
    [(25.0, [20.0], [1, 25, 5]), (15.0, [20.0], [1, 15, 0]), (7.0, [], [1, 7])],
)
def test_design_rows(t, knots, row):
    X = build_design_matrix([t], None, PiecewiseSpec(tuple(knots), ()))
    assert X.tolist() == [row]


def test_dummy_columns_drop_reference():
    spec = PiecewiseSpec((), ("dow",))
    levels = {"dow": (0, 1, 2)}
    X = build_design_matrix([1.0, 1.0, 1.0, 1.0], {"dow": np.array([0, 1, 2, 5])}, spec, levels)
    assert column_names(spec, levels) == ["intercept", "temperature", "dow=1", "dow=2"]
    # unseen level 5 encodes as the reference level
    assert X[:, 2:].tolist() == [[0, 0], [1, 0], [0, 1], [0, 0]]


def test_unordered_knots_rejected():
    with pytest.raises(ValueError):
        PiecewiseSpec((3.0, 1.0))


# fit_ols


def test_ols_line():
    X = np.array([[1, 0], [1, 1], [1, 2]], dtype=float)
    assert np.allclose(fit_ols(X, [1, 3, 5]), [1, 2], atol=1e-12)


def test_ols_abs_by_hinge():
    x = np.arange(-2, 3, dtype=float)
    X = build_design_matrix(x, None, PiecewiseSpec((0.0,), ()))
    assert np.allclose(fit_ols(X, np.abs(x)), [0, -1, 2], atol=1e-12)


def test_ols_exact_recovery():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(40, 2))
    beta = fit_ols(X, X @ np.array([3.0, -1.0]))
    assert np.allclose(beta, [3, -1], rtol=0, atol=1e-10)


def test_ols_rank_deficient_min_norm():
    x = np.arange(6, dtype=float)
    X = np.column_stack([np.ones(6), x, 2 * x])
    y = 1 + 5 * x
    with pytest.warns(RankDeficientWarning):
        beta = fit_ols(X, y)
    assert np.allclose(beta, np.linalg.pinv(X) @ y)


def test_ols_non_finite():
    with pytest.raises(NonFiniteInput):
        fit_ols(np.array([[1.0, np.nan], [1.0, 2.0]]), [1.0, 2.0])


@given(st.integers(0, 10_000), st.integers(1, 20), st.integers(0, 150))
def test_ols_residual_orthogonal(seed, p, extra):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(p + 5 + extra, p))
    y = rng.normal(size=len(X))
    beta = fit_ols(X, y)
    assert np.max(np.abs(X.T @ (y - X @ beta))) <= 1e-6 * max(np.max(np.abs(X.T @ y)), 1e-300)


# prediction


def test_predict_hinge_examples():
    m = hinge_model([0, -1, 2], [0.0])
    assert m.predict_one(1.5) == pytest.approx(1.5)
    assert m.predict_one(-2.0) == pytest.approx(2.0)


def test_zero_model():
    m = hinge_model([0, 0, 0], [5.0])
    assert m.predict_one(123.0) == 0.0


def test_out_of_vocabulary_year_uses_reference():
    rng = np.random.default_rng(0)
    n = 400
    t = rng.uniform(0, 30, n)
    years = np.repeat([2016, 2017], n // 2)
    cal = {"hour": np.zeros(n, int), "dow": np.zeros(n, int), "month": np.ones(n, int), "year": years}
    y = 100 + 3 * t + 50 * (years == 2017)
    m = fit_piecewise(t, cal, y, n_knots=0, effects=("year",))
    assert m.reference_year == 2016
    assert m.predict_one(10.0, CalendarFeatures(0, 0, 1, 1985)) == pytest.approx(130.0)
    assert m.predict_one(10.0, CalendarFeatures(0, 0, 1, 2017)) == pytest.approx(180.0)


def test_coefficient_count():
    rng = np.random.default_rng(1)
    n = 24 * 7 * 3
    t = rng.uniform(-5, 35, n)
    cal = {
        "hour": np.arange(n) % 24,
        "dow": (np.arange(n) // 24) % 7,
        "month": np.full(n, 3),
        "year": np.full(n, 2016),
    }
    m = fit_piecewise(t, cal, t * 2, n_knots=4)
    assert len(m.coefficients) == 2 + 4 + 23 + 6 + 0 + 0
    assert m.n_predictors == len(m.coefficients) - 1


def test_model_json_roundtrip():
    rng = np.random.default_rng(2)
    t = rng.uniform(0, 30, 200)
    cal = {"hour": np.arange(200) % 24, "dow": np.arange(200) % 7, "month": np.full(200, 7), "year": np.full(200, 2016)}
    m = fit_piecewise(t, cal, 3 * t + 1, n_knots=2)
    back = PiecewiseModel.from_dict(m.to_dict())
    assert np.array_equal(back.predict(t, cal), m.predict(t, cal))


def test_explicit_knot_outside_range():
    with pytest.raises(ValueError):
        fit_piecewise([1.0, 2.0, 3.0], None, [1.0, 2.0, 3.0], knots=[10.0])


@given(st.integers(0, 1000))
def test_prediction_continuous_at_knots(seed):
    rng = np.random.default_rng(seed)
    knots = np.sort(rng.uniform(-10, 30, 3))
    if np.min(np.diff(knots)) < 1e-3:
        return
    m = hinge_model(rng.normal(scale=100, size=5), knots)
    eps = 1e-6
    for k in knots:
        lo, hi = m.predict([k - eps, k + eps])
        assert abs(hi - lo) <= 2 * eps * np.sum(np.abs(m.coefficients[1:])) + 1e-9


@given(st.integers(0, 1000), st.integers(0, 5))
def test_adding_knot_never_increases_sse(seed, k):
    rng = np.random.default_rng(seed)
    t = rng.uniform(-10, 40, 300)
    y = 50 * np.maximum(0, t - 18) + 20 * np.maximum(0, 18 - t) + rng.normal(scale=30, size=300)
    base = select_knots(t, k)
    extra = float(rng.uniform(t.min() + 0.5, t.max() - 0.5))
    if any(abs(extra - b) < 1e-6 for b in base):
        return
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankDeficientWarning)
        small = fit_piecewise(t, None, y, knots=base)
        big = fit_piecewise(t, None, y, knots=base + [extra])
    sse = lambda m: float(np.sum((y - m.predict(t)) ** 2))
    assert sse(big) <= sse(small) * (1 + 1e-9) + 1e-9
