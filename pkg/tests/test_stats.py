import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special, stats as sps

from gesi.errors import DataError
from gesi.stats import betainc_reg, mean_ci95, pearson, rmse, t_two_sided_p


def brute_rmse(p, s):
    return math.sqrt(sum((a - b) ** 2 for a, b in zip(p, s)) / len(p))


def brute_r(x, y):
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


def permutation_p(x, y, n_perm=100_000, seed=0):
    rng = np.random.default_rng(seed)
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    r0 = abs(brute_r(list(x), list(y)))
    xc = (x - x.mean()) / np.linalg.norm(x - x.mean())
    yc = (y - y.mean()) / np.linalg.norm(y - y.mean())
    perms = rng.permuted(np.tile(yc, (n_perm, 1)), axis=1)
    r = np.abs(perms @ xc)
    return float(np.mean(r >= r0 - 1e-12))


def test_rmse_examples():
    assert rmse([1, 2, 3], [1, 2, 3]) == 0
    assert rmse([20, 30, 40], [10, 20, 30]) == pytest.approx(10, abs=1e-12)
    with pytest.raises(DataError):
        rmse([1, 2], [1])
    with pytest.raises(DataError):
        rmse([], [])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 50), st.integers(0, 2**31 - 1))
def test_rmse_brute_force(n, seed):
    r = np.random.default_rng(seed)
    p, s = r.uniform(0, 100, (2, n))
    assert abs(rmse(p, s) - brute_rmse(p, s)) <= 1e-12


def test_perfect_line():
    x = np.arange(10.0)
    r, p = pearson(x, 2 * x + 1)
    assert r == pytest.approx(1.0) and p == 0.0


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 40), st.integers(0, 2**31 - 1))
def test_pearson_r_brute_force(n, seed):
    r = np.random.default_rng(seed)
    x, y = r.standard_normal((2, n))
    assert abs(pearson(x, y)[0] - brute_r(list(x), list(y))) <= 1e-12


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_p_matches_permutation_oracle(seed):
    r = np.random.default_rng(seed)
    x = r.standard_normal(15)
    y = 0.5 * x + r.standard_normal(15) if seed else r.permutation(x)
    _, p = pearson(x, y)
    assert abs(p - permutation_p(x, y, seed=seed)) <= 0.02


def test_reported_convention():
    # n = 15 listeners, r = -0.50
    t = -0.5 * math.sqrt(13 / 0.75)
    p = t_two_sided_p(t, 13)
    assert abs(p - 0.057) < 0.005


@settings(max_examples=80, deadline=None)
@given(st.floats(0.1, 50), st.floats(0.1, 50), st.floats(0, 1 - 1e-9))
def test_incomplete_beta_reference(a, b, x):
    # scipy loses accuracy within a few ulps of x = 1; the closed form below covers that end
    assert betainc_reg(a, b, x) == pytest.approx(float(special.betainc(a, b, x)), abs=1e-10)


@settings(max_examples=80, deadline=None)
@given(st.one_of(st.floats(0, 1), st.sampled_from([5e-324, 1e-300, 0.9999999999999999])))
def test_incomplete_beta_arcsine_closed_form(x):
    # I_x(1/2, 1/2) = (2/pi) asin(sqrt x) = 1 - (2/pi) asin(sqrt(1 - x))
    exact = (2 / math.pi) * math.asin(math.sqrt(x)) if x < 0.5 else \
        1 - (2 / math.pi) * math.asin(math.sqrt(1 - x))
    assert betainc_reg(0.5, 0.5, x) == pytest.approx(exact, rel=1e-12, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.floats(-30, 30), st.integers(1, 200))
def test_t_tail_reference(t, dof):
    assert t_two_sided_p(t, dof) == pytest.approx(2 * sps.t.sf(abs(t), dof), abs=1e-10)


@pytest.mark.parametrize("x, y", [([1, 1, 1], [1, 2, 3]), ([1, 2], [1, 2]), ([1, 2, 3], [1, 2])])
def test_pearson_errors(x, y):
    with pytest.raises(DataError):
        pearson(x, y)


def test_ci_hand_computed():
    v = [10.0, 12.0, 14.0, 20.0]
    m = sum(v) / 4
    sd = math.sqrt(sum((a - m) ** 2 for a in v) / 3)
    assert mean_ci95(v) == pytest.approx((m, 1.96 * sd / 2), abs=1e-12)
    assert mean_ci95([5.0]) == (5.0, 0.0)


@pytest.mark.parametrize("k", [2, 4, 9])
def test_ci_shrinks_with_duplication(k):
    v = np.array([31.0, 45.0, 52.0, 60.0, 38.0, 47.0, 55.0, 41.0, 36.0, 58.0])
    n = v.size
    ci1 = mean_ci95(v)[1]
    cik = mean_ci95(np.tile(v, k))[1]
    # exact: duplicated data keep the same spread up to the ddof factor
    assert cik == pytest.approx(ci1 / math.sqrt(k) * math.sqrt(k * (n - 1) / (n * k - 1)))
    assert cik == pytest.approx(ci1 / math.sqrt(k), rel=0.06)
