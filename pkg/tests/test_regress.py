import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from debias.regress import LinearRegressor, linreg_fit, linreg_predict, objective
from debias.text_features import SparseVector
from oracles import ridge_closed_form, ridge_objective


def test_one_dimensional_line():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = 2 * X.ravel()
    m = linreg_fit(X, y, l2_lambda=0.0, epochs=200)
    assert m.weights[0] == pytest.approx(2.0, abs=1e-4)
    assert m.intercept == pytest.approx(0.0, abs=1e-4)
    assert objective(X, y, m.weights, m.intercept, 0.0) < 1e-6


def test_constant_target_needs_no_weights():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 3))
    m = linreg_fit(X, np.full(40, 3.7), l2_lambda=1e-3, epochs=20)
    assert np.abs(m.weights).max() < 1e-6
    assert m.intercept == pytest.approx(3.7, abs=1e-6)


@pytest.mark.parametrize("sparse", [False, True])
def test_matches_closed_form(sparse):
    rng = np.random.default_rng(1)
    X = rng.normal(size=(20, 5))
    y = X @ rng.normal(size=5) + 1.5 + 0.1 * rng.normal(size=20)
    w_ref, b_ref = ridge_closed_form(X, y, 0.01)
    m = linreg_fit(sp.csr_matrix(X) if sparse else X, y, l2_lambda=0.01, epochs=300)
    np.testing.assert_allclose(m.weights, w_ref, atol=1e-4)
    assert m.intercept == pytest.approx(b_ref, abs=1e-4)
    opt = ridge_objective(X, y, w_ref, b_ref, 0.01)
    assert ridge_objective(X, y, m.weights, m.intercept, 0.01) <= opt * (1 + 1e-6) + 1e-12


@settings(max_examples=20, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 10_000))
def test_prediction_is_affine(a, c, seed):
    rng = np.random.default_rng(seed)
    m = LinearRegressor(rng.normal(size=4), float(rng.normal()))
    u, v = rng.normal(size=4), rng.normal(size=4)
    lhs = linreg_predict(a * u + c * v, m)
    rhs = a * linreg_predict(u, m) + c * linreg_predict(v, m) + (1 - a - c) * m.intercept
    assert lhs == pytest.approx(rhs, abs=1e-9)


def test_objective_decreases():
    rng = np.random.default_rng(2)
    X = sp.random(200, 30, density=0.2, random_state=3, format="csr")
    y = rng.normal(size=200)
    m = linreg_fit(X, y, epochs=15)
    assert len(m.history) == 16
    assert m.history[-1] <= m.history[0]


def test_deterministic():
    rng = np.random.default_rng(3)
    X, y = rng.normal(size=(50, 4)), rng.normal(size=50)
    a = linreg_fit(X, y, seed=7)
    b = linreg_fit(X, y, seed=7)
    assert a.to_bytes() == b.to_bytes()


@pytest.mark.parametrize(
    "X, y, kw",
    [
        (np.zeros((3, 2)), np.zeros(4), {}),
        (np.zeros((0, 2)), np.zeros(0), {}),
        (np.zeros((2, 2)), np.array([1.0, np.nan]), {}),
        (np.zeros((2, 2)), np.zeros(2), {"lr": 0.0}),
        (np.zeros((2, 2)), np.zeros(2), {"l2_lambda": -1.0}),
    ],
)
def test_fit_errors(X, y, kw):
    with pytest.raises(ValueError):
        linreg_fit(X, y, **kw)


def test_predict_forms_agree():
    m = LinearRegressor(np.array([1.0, -2.0, 0.5]), 0.25)
    dense = np.array([0.0, 3.0, 4.0])
    sv = SparseVector(np.array([1, 2]), np.array([3.0, 4.0]))
    assert linreg_predict(dense, m) == linreg_predict(sv, m) == pytest.approx(-3.75)
    assert m.predict(sp.csr_matrix(dense[None]))[0] == pytest.approx(-3.75)
    with pytest.raises(ValueError):
        linreg_predict(np.zeros(2), m)
    with pytest.raises(ValueError):
        linreg_predict(SparseVector(np.array([5]), np.array([1.0])), m)


def test_bytes_roundtrip():
    m = LinearRegressor(np.array([0.1, 0.2]), -1.0, 1e-4)
    back = LinearRegressor.from_bytes(m.to_bytes())
    np.testing.assert_array_equal(back.weights, m.weights)
    assert (back.intercept, back.l2_lambda) == (m.intercept, m.l2_lambda)


def test_rescaling_fixes_badly_scaled_columns():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(60, 6)) * np.array([0.05, 0.2, 1.0, 3.0, 10.0, 30.0])
    y = X @ rng.normal(size=6) + rng.normal(size=60)
    w_ref, b_ref = ridge_closed_form(X, y, 1e-3)
    opt = ridge_objective(X, y, w_ref, b_ref, 1e-3)

    def gap(floor):
        m = linreg_fit(X, y, l2_lambda=1e-3, epochs=400, precondition_floor=floor)
        return (ridge_objective(X, y, m.weights, m.intercept, 1e-3) - opt) / opt

    plain, default, full = gap(0.0), gap(0.1), gap(1e-6)
    assert full < 1e-9
    assert full <= default <= plain


def test_two_point_line_and_training_fit():
    X, y = np.array([[1.0], [2.0]]), np.array([2.0, 4.0])
    m = linreg_fit(X, y, l2_lambda=0.0, epochs=100)
    assert m.weights[0] == pytest.approx(2.0, abs=1e-4) and m.intercept == pytest.approx(0.0, abs=1e-4)
    assert objective(X, y, m.weights, m.intercept, 0.0) < 1e-6
    np.testing.assert_allclose(m.predict(X), y, atol=1e-6)


def test_predict_arithmetic():
    m = LinearRegressor(np.array([2.0]), 0.0)
    assert linreg_predict(np.array([3.0]), m) == 6.0
    assert linreg_predict(np.zeros(1), LinearRegressor(np.array([5.0]), 1.25)) == 1.25


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_prediction_additive(seed):
    rng = np.random.default_rng(seed)
    m = LinearRegressor(rng.normal(size=5), float(rng.normal()))
    x1, x2 = rng.normal(size=5), rng.normal(size=5)
    assert linreg_predict(x1 + x2, m) == pytest.approx(linreg_predict(x1, m) + linreg_predict(x2, m) - m.intercept, abs=1e-9)
