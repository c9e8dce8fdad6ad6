"""Ghirlanda-Guerra and ultrametricity statistics from independent Gibbs chains.

Replica l is always drawn from a distinct chain on the same disorder; samples
at equal stored index form one draw from the product Gibbs measure. Chains of
one disorder are split into disjoint groups of n + 1 replicas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import DomainError, InsufficientReplicasError
from .mcmc import GibbsChain

N_BOOT = 1000
TIME_BLOCKS = 20


@dataclass(frozen=True)
class PhiSpec:
    """(p, n, f) with f the monomial prod R_{l,l'}^{k} given as ((l, l'), k) pairs, 1-based."""

    p: int
    n: int
    f: tuple = ()

    def __post_init__(self):
        if self.p < 1 or self.n < 2:
            raise DomainError("need p >= 1 and n >= 2")
        for (a, b), k in self.f:
            if not (1 <= a <= self.n and 1 <= b <= self.n) or k < 0:
                raise DomainError(f"monomial factor R_{a},{b}^{k} not over replicas 1..{self.n}")


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float


@dataclass
class StatReport:
    phi: dict = field(default_factory=dict)  # PhiSpec -> (abs value, signed value, stderr)
    moments: dict = field(default_factory=dict)  # "R12^k" -> Estimate
    ultrametric_violation: Estimate | None = None
    eta: float = 0.0
    n_disorders: int = 0


def _normalize(chains) -> list[list[GibbsChain]]:
    if len(chains) and isinstance(chains[0], GibbsChain):
        return [list(chains)]
    return [list(c) for c in chains]


def _aligned(group: Sequence[GibbsChain]) -> np.ndarray:
    T = min(c.samples.shape[0] for c in group)
    if T == 0:
        raise InsufficientReplicasError("chains hold no stored samples")
    return np.stack([c.samples[:T] for c in group])  # (replicas, T, N)


def _overlaps(X: np.ndarray) -> np.ndarray:
    """R[t, a, b] for replicas a, b at aligned time t."""
    N = X.shape[2]
    return np.einsum("atn,btn->tab", X, X) / N


def _groups(chains: list[GibbsChain], size: int) -> list[np.ndarray]:
    if len(chains) < size:
        raise InsufficientReplicasError(f"need {size} independent chains per disorder, got {len(chains)}")
    return [_overlaps(_aligned(chains[i : i + size])) for i in range(0, len(chains) - size + 1, size)]


def _monomial(R: np.ndarray, f: tuple) -> np.ndarray:
    out = np.ones(R.shape[0])
    for (a, b), k in f:
        out = out * R[:, a - 1, b - 1] ** k
    return out


def _phi_parts(R: np.ndarray, s: PhiSpec) -> np.ndarray:
    """Per-time samples of (f R_{1,n+1}^p, f, R_{1,2}^p, sum_{l=2..n} f R_{1,l}^p)."""
    fv = _monomial(R, s.f)
    a = fv * R[:, 0, s.n] ** s.p
    c = R[:, 0, 1] ** s.p
    dsum = sum(fv * R[:, 0, l] ** s.p for l in range(1, s.n))
    return np.stack([a, fv, c, dsum], axis=1)


def _units(per_disorder: list[list[np.ndarray]]) -> np.ndarray:
    """Bootstrap units: disorders if there are several, else time blocks of the single disorder."""
    if len(per_disorder) > 1:
        return np.array([np.concatenate(v).mean(axis=0) for v in per_disorder])
    samples = np.concatenate(per_disorder[0])
    blocks = np.array_split(samples, min(TIME_BLOCKS, len(samples)))
    return np.array([b.mean(axis=0) for b in blocks if len(b)])


def _boot(units: np.ndarray, stat, rng: np.random.Generator) -> tuple[float, float]:
    value = stat(units.mean(axis=0))
    if len(units) < 2:
        return value, math.nan
    idx = rng.integers(0, len(units), size=(N_BOOT, len(units)))
    reps = np.array([stat(units[i].mean(axis=0)) for i in idx])
    return value, float(np.std(reps, ddof=1))


def overlap_statistics(chains, specs: Sequence[PhiSpec], eta: float, seed: int = 0) -> StatReport:
    """Phi(p, n, f), overlap moments and the ultrametric violation rate with bootstrap errors.

    ``chains`` is a list of chains for one disorder or a list of such lists.
    """
    per_dis = _normalize(chains)
    rng = np.random.default_rng(seed)
    report = StatReport(eta=eta, n_disorders=len(per_dis))
    for s in specs:
        parts = [[_phi_parts(R, s) for R in _groups(ch, s.n + 1)] for ch in per_dis]
        n = s.n

        def signed(m, n=n):
            return m[0] - m[1] * m[2] / n - m[3] / n

        val, se = _boot(_units(parts), signed, rng)
        report.phi[s] = (abs(val), val, se)
    pairs = [[R[:, 0, 1][:, None] ** np.array([1, 2]) for R in _groups(ch, 2)] for ch in per_dis]
    units = _units(pairs)
    for j, k in enumerate((1, 2)):
        v, se = _boot(units, lambda m, j=j: m[j], rng)
        report.moments[f"R12^{k}"] = Estimate(v, se)
    trip = [[_violations(R, eta)[:, None] for R in _groups(ch, 3)] for ch in per_dis]
    v, se = _boot(_units(trip), lambda m: m[0], rng)
    report.ultrametric_violation = Estimate(v, se)
    return report


def _violations(R: np.ndarray, eta: float) -> np.ndarray:
    r12, r13, r23 = R[:, 0, 1], R[:, 0, 2], R[:, 1, 2]
    return (r12 < np.minimum(r13, r23) - eta).astype(float)
