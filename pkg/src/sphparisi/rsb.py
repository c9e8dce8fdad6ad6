"""Functional order parameters: the (k, m, q) triplet and its step function."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DomainError


class Violation(NamedTuple):
    """First violated constraint of an order parameter."""

    field: str
    index: int
    constraint: str

    def __str__(self):
        return f"{self.field}[{self.index}]: {self.constraint}"


class OrderParameterError(DomainError):
    def __init__(self, violation: Violation):
        super().__init__(str(violation))
        self.violation = violation


@dataclass(frozen=True)
class FunctionalOrderParameter:
    """Triplet (k, m, q) with 0 = m_0 <= ... <= m_k = 1 and 0 = q_0 <= ... <= q_{k+1} = 1.

    The encoded distribution function equals m_l on [q_l, q_{l+1}) and 1 at q = 1.
    Construction does not validate; call :func:`validate` or :meth:`checked`.
    """

    k: int
    m: tuple[float, ...]
    q: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "m", tuple(float(v) for v in self.m))
        object.__setattr__(self, "q", tuple(float(v) for v in self.q))

    def checked(self) -> "FunctionalOrderParameter":
        v = validate(self)
        if v is not None:
            raise OrderParameterError(v)
        return self

    def to_config(self) -> dict:
        return {"k": self.k, "m": list(self.m), "q": list(self.q)}

    @classmethod
    def from_config(cls, data: dict) -> "FunctionalOrderParameter":
        return cls(int(data["k"]), tuple(data["m"]), tuple(data["q"]))

    def levels(self) -> list[tuple[float, float]]:
        """The (q_l, m_l) pairs for l = 1..k."""
        return [(self.q[i], self.m[i]) for i in range(1, self.k + 1)]


def replica_symmetric(q1: float) -> FunctionalOrderParameter:
    return FunctionalOrderParameter(1, (0.0, 1.0), (0.0, q1, 1.0))


def from_levels(levels: Sequence[tuple[float, float]]) -> FunctionalOrderParameter:
    """Build from (q_l, m_l) pairs for l = 1..k; m_k must be 1."""
    qs = [q for q, _ in levels]
    ms = [m for _, m in levels]
    return FunctionalOrderParameter(len(levels), (0.0, *ms), (0.0, *qs, 1.0))


def validate(f: FunctionalOrderParameter) -> Violation | None:
    """Return ``None`` if ``f`` is valid, otherwise its first violated constraint."""
    if isinstance(f.k, bool) or int(f.k) != f.k or f.k < 1:
        return Violation("k", 0, "k must be an integer >= 1")
    k = f.k
    if len(f.m) != k + 1:
        return Violation("m", len(f.m), f"m must have k+1 = {k + 1} entries")
    if len(f.q) != k + 2:
        return Violation("q", len(f.q), f"q must have k+2 = {k + 2} entries")
    for name, seq in (("m", f.m), ("q", f.q)):
        for i, v in enumerate(seq):
            if not math.isfinite(v):
                return Violation(name, i, f"{name}_{i} must be finite")
    if f.m[0] != 0.0:
        return Violation("m", 0, "m_0 must equal 0")
    if f.m[k] != 1.0:
        return Violation("m", k, "m_k must equal 1")
    for i in range(1, k + 1):
        if f.m[i] < f.m[i - 1]:
            return Violation("m", i, "m not nondecreasing")
    if f.q[0] != 0.0:
        return Violation("q", 0, "q_0 must equal 0")
    if f.q[k + 1] != 1.0:
        return Violation("q", k + 1, "q_{k+1} must equal 1")
    for i in range(1, k + 2):
        if f.q[i] < f.q[i - 1]:
            return Violation("q", i, "q not nondecreasing")
    return None


def evaluate_cdf(f: FunctionalOrderParameter, t: float) -> float:
    """Value of the step distribution function at ``t`` in [0, 1]."""
    if not (0.0 <= t <= 1.0):
        raise DomainError(f"t must lie in [0, 1], got {t!r}")
    if t == 1.0:
        return 1.0
    # largest l with q_l <= t; t < 1 = q_{k+1} keeps l <= k
    idx = bisect.bisect_right(f.q, t) - 1
    return f.m[min(idx, f.k)]


def _breakpoints(*fs: FunctionalOrderParameter) -> np.ndarray:
    pts = {0.0, 1.0}
    for f in fs:
        pts.update(f.q)
    return np.array(sorted(pts))


def l1_distance(f1: FunctionalOrderParameter, f2: FunctionalOrderParameter) -> float:
    """Exact integral of |x1(q) - x2(q)| over [0, 1] by a breakpoint sweep."""
    f1.checked()
    f2.checked()
    pts = _breakpoints(f1, f2)
    total = []
    for a, b in zip(pts[:-1], pts[1:]):
        if b > a:
            # both functions are constant on [a, b)
            total.append(abs(evaluate_cdf(f1, a) - evaluate_cdf(f2, a)) * (b - a))
    return math.fsum(total)


def hk(q, k: int):
    """Discretization H_k(q) = j/k on [j/(k+1), (j+1)/(k+1)), with H_k(1) = 1."""
    if k < 1:
        raise DomainError("k must be >= 1")
    arr = np.asarray(q, dtype=float)
    j = np.minimum(np.floor(arr * (k + 1)), k)
    out = np.where(arr >= 1.0, 1.0, j / k)
    return float(out) if out.ndim == 0 else out


def discretize_hk(f: FunctionalOrderParameter, k: int) -> FunctionalOrderParameter:
    """Push the overlap distribution of ``f`` forward under H_k.

    Levels that land on the same value are merged, keeping the largest m.
    """
    f.checked()
    merged: list[list[float]] = []
    for q, m in f.levels():
        hq = hk(q, k)
        if merged and merged[-1][0] == hq:
            merged[-1][1] = max(merged[-1][1], m)
        else:
            merged.append([hq, m])
    return from_levels([(q, m) for q, m in merged])


def insert_degenerate_level(f: FunctionalOrderParameter, index: int, m_new: float | None = None) -> FunctionalOrderParameter:
    """Duplicate level ``index`` (1..k) so the step function is unchanged.

    The copy sits just before the original with q equal to q_index and
    m_new in [m_{index-1}, m_index] (default m_{index-1}).
    """
    if not 1 <= index <= f.k:
        raise DomainError("index must lie in 1..k")
    lo, hi = f.m[index - 1], f.m[index]
    if m_new is None:
        m_new = lo
    if not lo <= m_new <= hi:
        raise DomainError("m_new must lie in [m_{index-1}, m_index]")
    levels = f.levels()
    levels.insert(index - 1, (f.q[index], m_new))
    return from_levels(levels)


def split_level(f: FunctionalOrderParameter, index: int, q_new: float) -> FunctionalOrderParameter:
    """Split level ``index`` at ``q_new`` in [q_index, q_{index+1}] with equal m on both halves."""
    if not 1 <= index <= f.k:
        raise DomainError("index must lie in 1..k")
    if not f.q[index] <= q_new <= f.q[index + 1]:
        raise DomainError("q_new must lie in [q_index, q_{index+1}]")
    levels = f.levels()
    levels.insert(index, (q_new, f.m[index]))
    return from_levels(levels)
