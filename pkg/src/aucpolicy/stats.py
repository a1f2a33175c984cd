"""Student-t distribution via the regularized incomplete beta function.

The continued fraction is evaluated with the modified Lentz method; the
quantile is found by Newton steps safeguarded inside a bisection bracket.
"""
from __future__ import annotations

import math
from functools import lru_cache

_TINY = 1e-300
_EPS = 1e-16
MAX_CF_TERMS = 100_000


def _betacf(a: float, b: float, x: float) -> float:
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > _TINY else _TINY)
    h = d
    for m in range(1, MAX_CF_TERMS):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def _lgamma_correction(x: float) -> float:
    """``lgamma(x) - ((x - 0.5) log x - x + 0.5 log(2 pi))`` for ``x >= 10``."""
    z = 1.0 / (x * x)
    return (1.0 / x) * (1 / 12 - z * (1 / 360 - z * (1 / 1260 - z * (1 / 1680 - z / 1188))))


def _log_beta(a: float, b: float) -> float:
    """``log B(a, b)`` without the cancellation of three large lgamma terms."""
    small, big = min(a, b), max(a, b)
    if big < 10.0:
        return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    # lgamma(big) - lgamma(big + small) expanded with Stirling corrections
    diff = (-(big - 0.5) * math.log1p(small / big) - small * math.log(big + small) + small
            + _lgamma_correction(big) - _lgamma_correction(big + small))
    return diff + math.lgamma(small)


def _betainc(a: float, b: float, x: float, y: float, log_x: float, log_y: float) -> float:
    # y = 1 - x and both logs are supplied by the caller to full precision
    log_front = a * log_x + b * log_y - _log_beta(a, b)
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_front) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_front) * _betacf(b, a, y) / b


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta ``I_x(a, b)`` for ``a, b > 0``, ``0 <= x <= 1``."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    return _betainc(a, b, x, 1.0 - x, math.log(x), math.log1p(-x))


def _upper_tail(t: float, df: float) -> float:
    """``P(T > t)`` for ``t >= 0``, computed without forming ``1 - cdf``."""
    if t == 0:
        return 0.5
    t2 = t * t
    denom = df + t2
    # y = 1 - x formed directly keeps the tail exact when t*t << df
    x, y = df / denom, t2 / denom
    return 0.5 * _betainc(0.5 * df, 0.5, x, y, -math.log1p(t2 / df), 2.0 * math.log(t) - math.log(denom))


def t_cdf(t: float, df: float) -> float:
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    tail = _upper_tail(abs(t), df)
    return 1.0 - tail if t > 0 else tail


def t_pdf(t: float, df: float) -> float:
    log_c = math.lgamma(0.5 * (df + 1)) - math.lgamma(0.5 * df) - 0.5 * math.log(df * math.pi)
    return math.exp(log_c - 0.5 * (df + 1) * math.log1p(t * t / df))


@lru_cache(maxsize=1024)
def t_quantile(p: float, df: float, tol: float = 1e-10) -> float:
    """Value ``q`` with ``t_cdf(q, df) == p``.

    The root is bracketed to width ``tol * max(1, |q|)``, which is the
    absolute tolerance ``tol`` for every quantile of practical size.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -_upper_quantile(p, df, tol)
    return _upper_quantile(1.0 - p, df, tol)


def _upper_quantile(tail: float, df: float, tol: float) -> float:
    """Positive ``q`` with ``P(T > q) == tail`` for ``0 < tail < 0.5``."""
    lo, hi = 0.0, 1.0
    while _upper_tail(hi, df) > tail:
        lo, hi = hi, 2.0 * hi
    q = 0.5 * (lo + hi)
    while hi - lo > tol * max(1.0, q):
        f = tail - _upper_tail(q, df)  # increasing in q
        if f == 0.0:
            return q
        if f < 0:
            lo = q
        else:
            hi = q
        step = f / t_pdf(q, df)
        newton = q - step
        q = newton if lo < newton < hi else 0.5 * (lo + hi)
        if abs(step) < 0.25 * tol * max(1.0, q):
            break
    return q
