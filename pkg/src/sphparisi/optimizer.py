"""Outer minimization of the Parisi functional over order parameters.

Order parameters are searched in angle coordinates: each q-gap and m-gap is
a fraction sin(u)^2 of the remaining room, so every point of R^(2k-1) maps to
a feasible triplet and no projection step is needed.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .errors import BracketError, DomainError
from .mixture import Mixture
from .parisi import _infimum, _Prepared
from .rsb import FunctionalOrderParameter, insert_degenerate_level, from_levels

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OptimizeOptions:
    restarts: int = 8
    tol: float = 1e-9
    max_iter: int | None = None
    seed: int = 0
    threads: int = 1
    early_stop: bool = True


@dataclass
class OptimizationResult:
    best: FunctionalOrderParameter
    value: float
    per_k_values: list[tuple[int, float]]
    restarts_used: int
    converged: bool
    per_k_best: list[FunctionalOrderParameter] = field(default_factory=list)


def decode(u: np.ndarray, k: int) -> FunctionalOrderParameter:
    """Map angle coordinates (k for q, k-1 for m) to a feasible order parameter."""
    u = np.asarray(u, dtype=float)
    t = np.sin(u) ** 2
    q = [0.0]
    for j in range(k):
        prev = q[-1]
        q.append(min(prev + (1.0 - prev) * float(t[j]), 1.0))
    m = [0.0]
    for j in range(k - 1):
        prev = m[-1]
        m.append(min(prev + (1.0 - prev) * float(t[k + j]), 1.0))
    m.append(1.0)
    q.append(1.0)
    return FunctionalOrderParameter(k, tuple(m), tuple(q))


def encode(f: FunctionalOrderParameter) -> np.ndarray:
    """Inverse of :func:`decode` (up to round-off)."""
    k = f.k

    def fractions(seq, count):
        out = []
        for j in range(1, count + 1):
            room = 1.0 - seq[j - 1]
            frac = (seq[j] - seq[j - 1]) / room if room > 0 else 0.0
            out.append(min(max(frac, 0.0), 1.0))
        return out

    t = fractions(f.q, k) + fractions(f.m, k - 1)
    return np.arcsin(np.sqrt(np.array(t)))


def _value(mix: Mixture, f: FunctionalOrderParameter) -> float:
    try:
        return _infimum(_Prepared(mix, f)).value
    except (BracketError, DomainError):
        return math.inf


def _key(value: float, f: FunctionalOrderParameter):
    return (value, f.q, f.m)


def _simplex(x0: np.ndarray, step: float) -> np.ndarray:
    n = len(x0)
    sim = np.tile(x0, (n + 1, 1))
    for i in range(n):
        sim[i + 1, i] += step
    return sim


def _local_search(mix: Mixture, k: int, x0: np.ndarray, tol: float, max_iter: int):
    fun = lambda u: _value(mix, decode(u, k))
    x = np.asarray(x0, dtype=float)
    converged = True
    # a coarse pass and a polishing restart from the best vertex
    for step in (0.15, 0.01):
        res = minimize(
            fun,
            x,
            method="Nelder-Mead",
            options={
                "initial_simplex": _simplex(x, step),
                "xatol": 1e-10,
                "fatol": min(tol, 1e-12),
                "maxiter": max_iter,
                "maxfev": 4 * max_iter,
            },
        )
        x = res.x
        converged = converged and bool(res.success)
    f = decode(x, k)
    return _value(mix, f), f, converged


def optimize_at_k(
    mix: Mixture,
    k: int,
    opts: OptimizeOptions = OptimizeOptions(),
    starts: tuple[FunctionalOrderParameter, ...] = (),
):
    """Best order parameter with exactly k levels over seeded restarts and warm starts.

    Returns ``(order_parameter, value, converged, restarts_used)``.
    """
    if k < 1:
        raise DomainError("k must be >= 1")
    dim = 2 * k - 1
    max_iter = opts.max_iter or 600 * dim
    # a power-of-two block keeps the Sobol balance properties; the first `restarts` points are used
    points = qmc.Sobol(d=dim, scramble=True, seed=opts.seed).random_base2(max(opts.restarts - 1, 0).bit_length())
    x0s = [encode(f) for f in starts] + [np.arcsin(np.sqrt(p)) for p in points[: opts.restarts]]

    def run(x0):
        return _local_search(mix, k, x0, opts.tol, max_iter)

    if opts.threads > 1:
        with ThreadPoolExecutor(max_workers=opts.threads) as pool:
            results = list(pool.map(run, x0s))
    else:
        results = [run(x0) for x0 in x0s]

    # warm starts are kept verbatim as candidates so nesting can never be lost
    for f in starts:
        results.append((_value(mix, f), f, True))
    value, best, _ = min(results, key=lambda r: _key(r[0], r[1]))
    converged = all(r[2] for r in results[: len(x0s)])
    if not converged:
        log.warning("Nelder-Mead hit max_iter at k=%d; returning best-so-far", k)
    return best, value, converged, len(x0s)


def _split_candidates(mix: Mixture, f: FunctionalOrderParameter, eta: float = 0.02):
    """Probe each level split by small perturbations; return the embedding and the best probe."""
    embed = insert_degenerate_level(f, 1)
    best_val, best_f = _value(mix, embed), embed
    levels = f.levels()
    for idx in range(1, f.k + 1):
        q_lo, q_hi = f.q[idx], f.q[idx + 1]
        m_prev, m_cur = f.m[idx - 1], f.m[idx]
        for frac in (0.25, 0.5, 0.75):
            q_new = q_lo + frac * (q_hi - q_lo)
            for m_low in (m_cur - eta * (m_cur - m_prev) - 1e-3 * eta, m_cur - 0.25 * (m_cur - m_prev)):
                m_low = min(max(m_low, m_prev), m_cur)
                lv = list(levels)
                lv[idx - 1] = (q_lo, m_low)
                lv.insert(idx, (q_new, m_cur))
                cand = from_levels(lv)
                val = _value(mix, cand)
                if _key(val, cand) < _key(best_val, best_f):
                    best_val, best_f = val, cand
    return (embed, best_f) if best_f is not embed else (embed,)


def optimize(mix: Mixture, k_max: int, opts: OptimizeOptions = OptimizeOptions()) -> OptimizationResult:
    """Minimize over k = 1..k_max, warm-starting each k from the previous optimum."""
    if k_max < 1:
        raise DomainError("k_max must be >= 1")
    per_k: list[tuple[int, float]] = []
    per_k_best: list[FunctionalOrderParameter] = []
    restarts = 0
    converged = True
    prev = None
    for k in range(1, k_max + 1):
        starts = _split_candidates(mix, prev) if prev is not None else ()
        f, value, conv, used = optimize_at_k(mix, k, opts, starts)
        restarts += used
        converged = converged and conv
        if per_k and value > per_k[-1][1]:
            # cannot happen with the embedding kept as a candidate; guard against round-off
            f, value = starts[0], _value(mix, starts[0])
        per_k.append((k, value))
        per_k_best.append(f)
        log.info("k=%d value=%.15g", k, value)
        improvement = per_k[-2][1] - value if len(per_k) > 1 else math.inf
        prev = f
        if opts.early_stop and improvement < opts.tol:
            break
    # smallest k among values tied up to round-off; a higher k then only adds degenerate levels
    lowest = min(v for _, v in per_k)
    best_k = next(i for i, (_, v) in enumerate(per_k) if v <= lowest + 1e-14 * (1.0 + abs(lowest)))
    return OptimizationResult(
        best=per_k_best[best_k],
        value=per_k[best_k][1],
        per_k_values=per_k,
        restarts_used=restarts,
        converged=converged,
        per_k_best=per_k_best,
    )
