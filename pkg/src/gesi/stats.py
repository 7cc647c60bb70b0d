"""Error and correlation statistics used by the evaluation reports."""
from __future__ import annotations

import math

import numpy as np

from .errors import DataError, NumericError

_CF_EPS = 1e-15
_CF_TINY = 1e-300
_CF_MAX_ITER = 500


def rmse(predicted, subjective) -> float:
    p = np.asarray(predicted, dtype=float)
    s = np.asarray(subjective, dtype=float)
    if p.shape != s.shape or p.ndim != 1:
        raise DataError("predicted and subjective must be 1-D and equally long")
    if p.size == 0:
        raise DataError("rmse needs at least one value")
    return float(np.sqrt(np.mean((p - s) ** 2)))


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > _CF_TINY else _CF_TINY)
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _CF_TINY else _CF_TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _CF_TINY else _CF_TINY
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _CF_TINY else _CF_TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _CF_TINY else _CF_TINY
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise NumericError("incomplete beta continued fraction did not converge")


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    lbeta = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
    front = math.exp(lbeta + a * math.log(x) + b * math.log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, dof: float) -> float:
    """Two-sided tail probability of Student's t with ``dof`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    t2 = t * t
    if t2 < dof:
        # small |t|: work with t^2/(dof+t^2) directly to avoid cancellation in 1 - x
        return 1.0 - betainc_reg(0.5, 0.5 * dof, t2 / (dof + t2))
    return betainc_reg(0.5 * dof, 0.5, dof / (dof + t2))


def pearson(x, y) -> tuple[float, float]:
    """Sample correlation and its two-sided p-value from the t statistic."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError("x and y must be 1-D and equally long")
    n = x.size
    if n < 3:
        raise DataError("pearson needs at least 3 pairs")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise DataError("pearson is undefined for constant input")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    r = max(-1.0, min(1.0, r))
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return r, t_two_sided_p(t, n - 2)


def mean_ci95(values) -> tuple[float, float]:
    """Mean and 95% half-width (1.96 standard errors); half-width 0 for n < 2."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise DataError("no values")
    if v.size < 2:
        return float(v.mean()), 0.0
    return float(v.mean()), float(1.96 * v.std(ddof=1) / math.sqrt(v.size))
