"""Small-sample statistics: paired one-tailed t-test and Pearson's r.

The Student-t tail comes from the regularized incomplete beta function,
evaluated with a modified-Lentz continued fraction.
"""
from __future__ import annotations

import math

from ..errors import UndefinedInputError

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10000


def _beta_cf(a: float, b: float, x: float) -> float:
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc_regularized(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and 0 <= x <= 1."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    # the continued fraction converges fast only on this side of the mode
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def student_t_sf(t: float, df: float) -> float:
    """P(T > t) for Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ValueError("df must be positive")
    if math.isinf(t):
        return 0.0 if t > 0 else 1.0
    tail = 0.5 * betainc_regularized(df / 2.0, 0.5, df / (df + t * t))
    return tail if t >= 0 else 1.0 - tail


def _mean(xs) -> float:
    return math.fsum(xs) / len(xs)


def paired_t_test_one_tailed(a, b) -> tuple[float, float]:
    """Test mean(a - b) > 0 on paired samples; returns (t, p).

    Zero-variance differences give p = 0, 0.5 or 1 by the sign of the mean
    difference (t is then +inf, 0 or -inf).
    """
    a, b = [float(v) for v in a], [float(v) for v in b]
    if len(a) != len(b):
        raise ValueError("paired samples must have equal length")
    r = len(a)
    if r < 2:
        raise ValueError("need at least 2 pairs")
    d = [x - y for x, y in zip(a, b)]
    m = _mean(d)
    var = math.fsum((x - m) ** 2 for x in d) / (r - 1)
    if var == 0.0:
        if m > 0:
            return math.inf, 0.0
        if m < 0:
            return -math.inf, 1.0
        return 0.0, 0.5
    t = m / math.sqrt(var / r)
    return t, student_t_sf(t, r - 1)


def pearson_correlation(x, y) -> float:
    x, y = [float(v) for v in x], [float(v) for v in y]
    if len(x) != len(y):
        raise ValueError("samples must have equal length")
    if len(x) < 3:
        raise ValueError("need at least 3 points")
    mx, my = _mean(x), _mean(y)
    dx = [v - mx for v in x]
    dy = [v - my for v in y]
    sxx = math.fsum(v * v for v in dx)
    syy = math.fsum(v * v for v in dy)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedInputError("Pearson correlation is undefined for a constant sample")
    r = math.fsum(u * v for u, v in zip(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))
