import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gesi.errors import DataError
from gesi.metric import (SEARCH_BOX, FitError, SigmoidParams, WeightSet, _sse, efficiency_weight,
                         fit_sigmoid, max_d, metric_d, sigmoid, similarity, ssi_weight)


# --- SSI weight -------------------------------------------------------------------

def test_ssi_saturation_uniform():
    fp = np.array([1000.0, 2000, 4000])
    w = ssi_weight([100.0, 150.0], fp, 5)
    assert np.allclose(w, 1 / 3)


def test_ssi_formula_before_normalization():
    fp = np.array([500.0, 2000.0])
    w = ssi_weight([200.0], fp, 5)
    # w' = (0.5, 1) -> normalized (1/3, 2/3)
    assert np.allclose(w[:, 0], [0.5 / 1.5, 1 / 1.5])


def test_ssi_unvoiced_uniform():
    w = ssi_weight([1e-4], np.geomspace(100, 8000, 10), 5)
    assert np.allclose(w, 0.1)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.one_of(st.just(1e-4), st.floats(70, 400)), min_size=1, max_size=30),
       st.floats(0.5, 20))
def test_ssi_columns_sum_to_one(f0, h_max):
    w = ssi_weight(f0, np.geomspace(100, 8000, 40), h_max)
    assert np.all(np.abs(w.sum(axis=0) - 1) <= 1e-9)
    assert np.all(w > 0)


# --- efficiency weight ----------------------------------------------------------

def test_efficiency_all_audible():
    w, n_at = efficiency_weight(np.full((4, 10), 5.0), 0.7)
    assert n_at == 4 and np.all(w == 1.0)


def test_efficiency_half_audible():
    lv = np.zeros((4, 10))
    lv[:2] = 3.0
    w, n_at = efficiency_weight(lv, 0.7)
    assert n_at == 2
    assert np.allclose(w, [2 ** 0.7, 2 ** 0.7, 0, 0])
    assert w[0] == pytest.approx(1.6245, abs=1e-4)


def test_efficiency_inaudible():
    w, n_at = efficiency_weight(np.zeros((5, 3)), 0.7)
    assert n_at == 0 and np.all(w == 0)
    assert WeightSet(np.ones((5, 3)) / 5, w, n_at=0).inaudible


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 30), st.floats(0, 2), st.integers(0, 2**31 - 1))
def test_efficiency_range(n, eta, seed):
    lv = np.random.default_rng(seed).uniform(-5, 5, (n, 8))
    w, _ = efficiency_weight(lv, eta)
    ok = (w == 0) | ((w >= 1 - 1e-12) & (w <= n ** eta + 1e-9))
    assert np.all(ok)


# --- similarity -------------------------------------------------------------------

def unit(n, t):
    return np.ones((n, t))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0, 1))
def test_identity_similarity_is_one(seed, rho):
    m = np.random.default_rng(seed).standard_normal((3, 2, 50))
    s, nz = similarity(m, m, unit(3, 50), rho)
    assert nz == 0 and np.allclose(s, 1.0, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0, 1), st.floats(0.01, 100))
def test_gain_exponent_law(seed, rho, g):
    m = np.random.default_rng(seed).standard_normal((2, 3, 40))
    s, _ = similarity(m, g * m, unit(2, 40), rho)
    assert np.allclose(s, g ** (2 * rho - 1), rtol=1e-9, atol=0)
    s_half, _ = similarity(m, g * m, unit(2, 40), 0.5)
    assert np.allclose(s_half, 1.0, rtol=1e-12, atol=0)


def test_orthogonal_envelopes():
    a = np.zeros((1, 1, 20))
    b = np.zeros((1, 1, 20))
    a[..., :10] = 1
    b[..., 10:] = 1
    s, _ = similarity(a, b, unit(1, 20), 0.52)
    assert s[0, 0] == 0


def test_zero_denominator_counted():
    a = np.ones((2, 2, 5))
    b = a.copy()
    b[1, 0] = 0
    s, nz = similarity(a, b, unit(2, 5), 0.52)
    assert nz == 1 and s[1, 0] == 0 and np.isfinite(s).all()


def test_similarity_matches_direct_formula(rng):
    mr, mt = rng.standard_normal((2, 4, 3, 30))
    w = rng.uniform(size=(4, 30))
    s, _ = similarity(mr, mt, w, 0.3)
    for i in range(4):
        for j in range(3):
            num = sum(w[i, t] * mr[i, j, t] * mt[i, j, t] for t in range(30))
            den = sum(mr[i, j] ** 2) ** 0.3 * sum(mt[i, j] ** 2) ** 0.7
            assert s[i, j] == pytest.approx(num / den, rel=1e-12)


def test_shape_mismatch():
    with pytest.raises(DataError):
        similarity(np.ones((1, 2, 3)), np.ones((1, 2, 4)), unit(1, 3))


# --- metric d ------------------------------------------------------------------------

def test_literal_constant_average():
    assert metric_d(np.full((5, 6), 0.3), mode="literal") == pytest.approx(0.3, abs=1e-15)


def test_zero_band_weights():
    assert metric_d(np.ones((5, 6)), np.zeros(6)) == 0.0
    assert metric_d(np.ones((5, 6)), np.zeros(6), "literal") == 0.0


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 12), st.integers(1, 8), st.integers(0, 2**31 - 1))
def test_metric_d_brute_force(n, m, seed):
    r = np.random.default_rng(seed)
    s = r.uniform(-1, 1, (n, m))
    wj = r.uniform(0, 2, m)
    total = 0.0
    for i in range(n):
        for j in range(m):
            total += wj[j] * s[i, j]
    assert abs(metric_d(s, wj, "literal") - total / (m * n)) <= 1e-12
    assert abs(metric_d(s, wj, "channel_sum") - total / m) <= 1e-12


def test_random_three_by_two():
    s = np.array([[0.1, 0.2], [0.3, 0.4], [0.5, 0.6]])
    assert metric_d(s, mode="literal") == pytest.approx(2.1 / 6, abs=1e-15)
    assert metric_d(s) == pytest.approx(2.1 / 2, abs=1e-15)


def test_max_d():
    assert max_d(100, 6, mode="literal") == 1.0
    assert max_d(100, 6) == 100.0
    assert max_d(100, 6, n_audible=40) == 40.0


def test_unknown_mode():
    with pytest.raises(ValueError):
        metric_d(np.ones((2, 2)), mode="mean")


# --- sigmoid -------------------------------------------------------------------------

def test_sigmoid_midpoint():
    p = SigmoidParams(-23.3, 13.5, 85)
    assert abs(sigmoid(13.5 / 23.3, p) - 42.5) <= 1e-9
    assert abs(sigmoid(0.5, SigmoidParams(-4, 2, 85)) - 42.5) <= 1e-9


def test_sigmoid_asymptotes_and_overflow():
    p = SigmoidParams()
    assert sigmoid(1e6, p) == pytest.approx(85.0)
    assert sigmoid(-1e6, p) == 0.0
    assert np.isfinite(sigmoid(np.array([-1e308, 1e308]), p)).all()


def test_inaudible_limit():
    p = SigmoidParams()
    assert sigmoid(0.0, p) == pytest.approx(85 / (1 + math.exp(13.5)), rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(-50, -0.1), st.floats(-20, 20), st.floats(1, 100),
       st.lists(st.floats(-2, 3), min_size=2, max_size=20, unique=True))
def test_sigmoid_monotone_bounded(a, b, imax, ds):
    p = SigmoidParams(a, b, imax)
    d = np.sort(ds)
    v = sigmoid(d, p)
    assert np.all(np.diff(v) >= 0) and np.all(v >= 0) and np.all(v <= imax)


def test_i_max_validated():
    with pytest.raises(ValueError):
        SigmoidParams(i_max=0)
    with pytest.raises(ValueError):
        SigmoidParams(i_max=120)


# --- sigmoid fit ------------------------------------------------------------------

def test_fit_recovers_planted_params():
    d = np.linspace(0.2, 1.0, 25)
    si = sigmoid(d, SigmoidParams(-20, 11, 85))
    p = fit_sigmoid(d, si, 85)
    assert abs(p.a + 20) <= 0.2 and abs(p.b - 11) <= 0.11


def test_two_exact_points():
    d = np.array([0.3, 0.8])
    si = sigmoid(d, SigmoidParams(-10, 5, 85))
    p = fit_sigmoid(d, si, 85)
    assert float(_sse(p.a, p.b, d, si, 85)) < 1e-8


def test_fit_errors():
    with pytest.raises(FitError):
        fit_sigmoid([0.5], [40])
    with pytest.raises(FitError):
        fit_sigmoid([0.5, 0.5], [40, 50])
    with pytest.raises(FitError):
        fit_sigmoid([0.1, 0.5], [40, 40])
    with pytest.raises(DataError):
        fit_sigmoid([0.1, 0.5], [40])


def test_fit_deterministic(rng):
    d = rng.uniform(0.2, 1, 30)
    si = np.clip(sigmoid(d, SigmoidParams(-15, 8)) + rng.normal(0, 5, 30), 0, 100)
    assert fit_sigmoid(d, si) == fit_sigmoid(d, si)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_fit_beats_grid_oracle(seed):
    r = np.random.default_rng(seed)
    d = r.uniform(0.1, 1.2, 40)
    a0, b0 = r.uniform(-40, -5), r.uniform(2, 20)
    si = np.clip(sigmoid(d, SigmoidParams(a0, b0)) + r.normal(0, 8, 40), 0, 100)
    p = fit_sigmoid(d, si)
    best = float(_sse(p.a, p.b, d, si, 85.0))
    ga = np.linspace(*SEARCH_BOX[0], 100)
    gb = np.linspace(*SEARCH_BOX[1], 100)
    grid = np.array([[np.sum((85 / (1 + np.exp(a * d + b)) - si) ** 2) for b in gb] for a in ga])
    assert best <= grid.min() * (1 + 1e-12)
