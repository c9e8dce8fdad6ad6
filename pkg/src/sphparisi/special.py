"""Regularized incomplete gamma functions and chi-square probabilities.

Series expansion below x < a + 1, Lentz continued fraction above, as in
Numerical Recipes ch. 6.
"""

from __future__ import annotations

import math

from .errors import DomainError

EPS = 1e-16
TINY = 1e-300
MAX_ITER = 100_000


def _prefactor_log(a: float, x: float) -> float:
    return -x + a * math.log(x) - math.lgamma(a)


def _series(a: float, x: float) -> float:
    """Lower regularized P(a, x) by its power series."""
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * EPS:
            return total * math.exp(_prefactor_log(a, x))
    raise ArithmeticError(f"incomplete gamma series did not converge (a={a}, x={x})")


def _continued_fraction(a: float, x: float) -> float:
    """Upper regularized Q(a, x) by modified Lentz."""
    b = x + 1.0 - a
    c = 1.0 / TINY
    d = 1.0 / b
    h = d
    for i in range(1, MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < TINY:
            d = TINY
        c = b + an / c
        if abs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < EPS:
            return math.exp(_prefactor_log(a, x)) * h
    raise ArithmeticError(f"incomplete gamma continued fraction did not converge (a={a}, x={x})")


def _check(a: float, x: float):
    if not a > 0:
        raise DomainError(f"a must be positive, got {a!r}")
    if not x >= 0:
        raise DomainError(f"x must be nonnegative, got {x!r}")


def gammainc_lower(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    _check(a, x)
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return 1.0
    if x < a + 1.0:
        return _series(a, x)
    return 1.0 - _continued_fraction(a, x)


def gammainc_upper(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    _check(a, x)
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return 1.0 - _series(a, x)
    return _continued_fraction(a, x)


def chi2_cdf(x: float, dof: int) -> float:
    if x <= 0:
        return 0.0
    return gammainc_lower(0.5 * dof, 0.5 * x)


def chi2_interval(lo: float, hi: float, dof: int) -> float:
    """P(lo <= chi2_dof <= hi), computed on whichever tail keeps precision."""
    if hi < lo:
        raise DomainError("need lo <= hi")
    a = 0.5 * dof
    xl, xh = 0.5 * max(lo, 0.0), 0.5 * max(hi, 0.0)
    if xl >= a + 1.0:
        return max(gammainc_upper(a, xl) - gammainc_upper(a, xh), 0.0)
    return max(gammainc_lower(a, xh) - gammainc_lower(a, xl), 0.0)
