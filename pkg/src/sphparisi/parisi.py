"""Spherical Parisi functional with its inner infimum over the parameter b.

For an order parameter (k, m, q) the depths are

    d_l = sum_{l <= p <= k} m_p (xi'(q_{p+1}) - xi'(q_p)),

D_l = b - d_l, D_{k+1} = b, and the functional is the infimum over b > d_1 of

    1/2 (b - 1 - log b + xi'(q_1)/D_1 + sum_l log(D_{l+1}/D_l)/m_l
         - sum_l m_l (theta(q_{l+1}) - theta(q_l))).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import BracketError, DomainError
from .mixture import Mixture
from .rsb import FunctionalOrderParameter

# below this m the level term uses its m -> 0 limit Delta/D
M_LIMIT = 1e-10
B_GUARD = 1e-14
MAX_BRACKET = 1e12
SCAN_POINTS = 64


@dataclass(frozen=True)
class ParisiEvaluation:
    value: float
    b_star: float
    d: tuple[float, ...]
    bracket: tuple[float, float]
    iterations: int
    derivative_at_b_star: float

    def big_d(self, level: int) -> float:
        """D_l = b* - d_l for 1 <= l <= k, and D_{k+1} = b*."""
        if level == len(self.d) + 1:
            return self.b_star
        return self.b_star - self.d[level - 1]


class _Prepared:
    """Mixture-dependent quantities of an order parameter, computed once."""

    __slots__ = ("k", "m", "delta", "xi_p_q1", "theta_sum", "d")

    def __init__(self, mix: Mixture, f: FunctionalOrderParameter):
        f.checked()
        k = f.k
        xp = [mix.xi(q, 1) for q in f.q]
        th = [mix.theta(q) for q in f.q]
        self.k = k
        self.m = f.m[1:]
        # Delta_l = xi'(q_{l+1}) - xi'(q_l), l = 1..k
        self.delta = tuple(max(xp[l + 1] - xp[l], 0.0) for l in range(1, k + 1))
        self.xi_p_q1 = xp[1]
        self.theta_sum = math.fsum(f.m[l] * (th[l + 1] - th[l]) for l in range(1, k + 1))
        d = [0.0] * (k + 1)
        for l in range(k - 1, -1, -1):
            d[l] = d[l + 1] + self.m[l] * self.delta[l]
        self.d = tuple(d[:k])

    def objective(self, b: float) -> float:
        k, m, delta, d = self.k, self.m, self.delta, self.d
        D1 = b - d[0]
        if not D1 > B_GUARD:
            raise DomainError(f"b must exceed d_1 = {d[0]!r}, got {b!r}")
        terms = [b - 1.0 - math.log(b), self.xi_p_q1 / D1]
        for l in range(k):
            Dl = b - d[l]
            if m[l] < M_LIMIT:
                terms.append(delta[l] / Dl)
            else:
                # D_{l+1} - D_l = m_l Delta_l
                terms.append(math.log1p(m[l] * delta[l] / Dl) / m[l])
        terms.append(-self.theta_sum)
        return 0.5 * math.fsum(terms)

    def objective_array(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=float)
        D1 = b - self.d[0]
        out = b - 1.0 - np.log(b) + self.xi_p_q1 / D1 - self.theta_sum
        for l in range(self.k):
            Dl = b - self.d[l]
            if self.m[l] < M_LIMIT:
                out = out + self.delta[l] / Dl
            else:
                out = out + np.log1p(self.m[l] * self.delta[l] / Dl) / self.m[l]
        return 0.5 * out

    def derivative(self, b: float) -> float:
        k, m, delta, d = self.k, self.m, self.delta, self.d
        D1 = b - d[0]
        terms = [1.0, -1.0 / b, -self.xi_p_q1 / (D1 * D1)]
        for l in range(k):
            Dl = b - d[l]
            Dn = b - d[l + 1] if l + 1 < k else b
            # (1/m)(1/D_{l+1} - 1/D_l) = -Delta_l / (D_l D_{l+1}), also the m -> 0 limit
            terms.append(-delta[l] / (Dl * Dn))
        return 0.5 * math.fsum(terms)


def cascade_depths(mix: Mixture, f: FunctionalOrderParameter) -> tuple[float, ...]:
    """The depths d_1..d_k (nonincreasing in l)."""
    return _Prepared(mix, f).d


def objective_at_b(mix: Mixture, f: FunctionalOrderParameter, b: float) -> float:
    """The bracketed b-objective; requires b > d_1."""
    return _Prepared(mix, f).objective(b)


def objective_derivative(mix: Mixture, f: FunctionalOrderParameter, b: float) -> float:
    """Analytic derivative of :func:`objective_at_b` in b."""
    prep = _Prepared(mix, f)
    if not b - prep.d[0] > B_GUARD:
        raise DomainError(f"b must exceed d_1 = {prep.d[0]!r}, got {b!r}")
    return prep.derivative(b)


def _infimum(prep: _Prepared) -> ParisiEvaluation:
    d1 = prep.d[0]
    calls = 0

    def deriv(b):
        nonlocal calls
        calls += 1
        return prep.derivative(b)

    step = max(1e-8, 1e-8 * d1)
    lo = d1 + step
    # derivative -> -inf as b -> d_1 for every nondegenerate input; shrink if not yet negative
    while deriv(lo) >= 0.0 and lo - d1 > 1e-300:
        step *= 1e-3
        lo = d1 + step
        if step < 1e-280:
            break
    width = max(1.0, d1)
    hi = d1 + width
    while deriv(hi) <= 0.0:
        width *= 4.0
        hi = d1 + width
        if width > MAX_BRACKET:
            raise BracketError(
                f"no sign change of the b-derivative up to b = d_1 + {MAX_BRACKET:g} (d_1 = {d1!r})"
            )
    if deriv(lo) >= 0.0:
        b_star = lo
    else:
        b_star, res = brentq(deriv, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, full_output=True)
        calls += res.function_calls
    value = prep.objective(b_star)

    # safeguard against a non-unimodal objective: log-spaced scan over (d_1, 4 hi]
    offsets = np.logspace(math.log10(lo - d1), math.log10(4.0 * (hi - d1)), SCAN_POINTS)
    grid = d1 + offsets
    vals = prep.objective_array(grid)
    calls += SCAN_POINTS
    j = int(np.argmin(vals))
    if vals[j] < value - 1e-12 * (1.0 + abs(value)):
        a = grid[max(j - 1, 0)]
        c = grid[min(j + 1, SCAN_POINTS - 1)]
        res = minimize_scalar(prep.objective, bounds=(a, c), method="bounded", options={"xatol": 1e-14 * c})
        calls += res.nfev
        cand_b, cand_v = (float(res.x), float(res.fun)) if res.fun < vals[j] else (float(grid[j]), float(vals[j]))
        if cand_v < value:
            b_star, value = cand_b, cand_v

    return ParisiEvaluation(
        value=float(value),
        b_star=float(b_star),
        d=prep.d,
        bracket=(float(lo), float(hi)),
        iterations=calls,
        derivative_at_b_star=float(prep.derivative(b_star)),
    )


def infimum_over_b(mix: Mixture, f: FunctionalOrderParameter) -> ParisiEvaluation:
    """Evaluate the Parisi functional at ``f``: infimum of the objective over b > d_1."""
    return _infimum(_Prepared(mix, f))


def parisi_value(mix: Mixture, f: FunctionalOrderParameter) -> float:
    return infimum_over_b(mix, f).value
