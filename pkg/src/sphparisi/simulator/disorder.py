"""Disorder tensors, finite-N Hamiltonians and the perturbation term.

H(sigma) = sum_p beta_p S^{-(p-1)/2} sum_{i_1..i_p} g_{i_1..i_p} sigma_{i_1}...sigma_{i_p}
with the scaling S = N for the plain model and S = M + N for the cavity
Hamiltonian H_{M,N}. The tuple sum runs over all N^p ordered tuples, diagonal
ones included, so the covariance is exactly S xi(N R / S).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, MemoryGuardError
from ..mixture import Mixture

MEMORY_GUARD = 10_000_000
NORM_TOL = 1e-8
# entries of the largest intermediate array in a batched contraction
CHUNK_ENTRIES = 4_000_000

DISORDER_STREAM = 0
PERTURBATION_STREAM = 1


def tensor_rng(seed: int, stream: int, p: int) -> np.random.Generator:
    """Counter-based generator keyed by (seed, stream, p); draw order is the flat index."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), stream, p])))


@dataclass(frozen=True, eq=False)
class Disorder:
    mixture: Mixture
    N: int
    seed: int
    tensors: dict = field(repr=False)
    scaling_total: int = 0
    stream: int = DISORDER_STREAM

    def __post_init__(self):
        if self.scaling_total == 0:
            object.__setattr__(self, "scaling_total", self.N)
        if self.scaling_total < self.N:
            raise DomainError("scaling_total must be >= N")

    def with_scaling(self, scaling_total: int) -> "Disorder":
        return Disorder(self.mixture, self.N, self.seed, self.tensors, scaling_total, self.stream)

    def restrict(self, n: int, scaling_total: int | None = None) -> "Disorder":
        """Sub-disorder on the first n sites (every tensor axis sliced to n)."""
        tens = {p: g[(slice(0, n),) * p] for p, g in self.tensors.items()}
        return Disorder(self.mixture, n, self.seed, tens, scaling_total or self.scaling_total, self.stream)


def check_memory(mix: Mixture, N: int, guard: int = MEMORY_GUARD):
    total = 0
    for p, _ in mix.terms:
        total += N**p
        if total > guard:
            raise MemoryGuardError(f"disorder tensors need {total} entries > guard {guard} at N={N}, p={p}")


def sample_disorder(
    mix: Mixture,
    N: int,
    seed: int,
    scaling_total: int | None = None,
    stream: int = DISORDER_STREAM,
    guard: int = MEMORY_GUARD,
) -> Disorder:
    """Dense i.i.d. standard Gaussian tensors, one per mixture term."""
    if N < 1:
        raise DomainError("N must be >= 1")
    check_memory(mix, N, guard)
    tensors = {}
    for p, _ in mix.terms:
        g = tensor_rng(seed, stream, p).standard_normal(N**p)
        tensors[p] = g.reshape((N,) * p)
    return Disorder(mix, N, int(seed), tensors, scaling_total or N, stream)


def _as_batch(d: Disorder, sigma) -> tuple[np.ndarray, bool]:
    s = np.asarray(sigma, dtype=float)
    single = s.ndim == 1
    s = np.atleast_2d(s)
    if s.shape[-1] != d.N:
        raise DomainError(f"configuration has {s.shape[-1]} coordinates, disorder has N={d.N}")
    sq = np.einsum("ij,ij->i", s, s)
    if np.any(np.abs(sq - d.N) > NORM_TOL * d.N):
        raise DomainError("configuration is not on the sphere of radius sqrt(N)")
    return s, single


def contract(g: np.ndarray, S: np.ndarray) -> np.ndarray:
    """sum_{i_1..i_p} g_{i_1..i_p} s_{i_1}...s_{i_p} for each row s of S."""
    p = g.ndim
    N = S.shape[1]
    if p == 1:
        return S @ g
    if p == 2:
        return np.einsum("bi,bi->b", S @ g.T, S)
    out = np.empty(S.shape[0])
    chunk = max(1, CHUNK_ENTRIES // N ** (p - 1))
    flat = g.reshape(N ** (p - 1), N)
    for lo in range(0, S.shape[0], chunk):
        St = S[lo : lo + chunk].T
        y = flat @ St
        for _ in range(p - 1):
            y = np.einsum("knb,nb->kb", y.reshape(-1, N, St.shape[1]), St)
        out[lo : lo + chunk] = y[0]
    return out


def hamiltonian(d: Disorder, sigma, scaling_total: int | None = None):
    """Energy of one configuration (float) or of a batch (array of shape (B,))."""
    S, single = _as_batch(d, sigma)
    total = d.scaling_total if scaling_total is None else scaling_total
    if total < d.N:
        raise DomainError("scaling_total must be >= N")
    out = np.zeros(S.shape[0])
    for p, beta in d.mixture.terms:
        out += beta * total ** (-(p - 1) / 2.0) * contract(d.tensors[p], S)
    return float(out[0]) if single else out


@dataclass(frozen=True)
class PerturbationSpec:
    """Perturbation N^{-1/8} sum_p (u_p / 2^p) H'_{N,p} with independent disorder."""

    u: tuple[float, ...] = ()
    p_max: int = 4
    enabled: bool = True
    seed: int = 1

    def __post_init__(self):
        u = tuple(float(x) for x in self.u) if self.u else (1.5,) * self.p_max
        object.__setattr__(self, "u", u)
        if len(u) != self.p_max:
            raise DomainError("u must have p_max entries")
        if any(not 1.0 <= x <= 2.0 for x in u):
            raise DomainError("every u_p must lie in [1, 2]")

    @classmethod
    def disabled(cls) -> "PerturbationSpec":
        return cls(enabled=False)

    def mixture(self) -> Mixture:
        return Mixture(tuple((p, self.u[p - 1] / 2.0**p) for p in range(1, self.p_max + 1)))


_PERT_CACHE: dict = {}


def perturbation_disorder(spec: PerturbationSpec, N: int) -> Disorder:
    key = (spec, N)
    if key not in _PERT_CACHE:
        if len(_PERT_CACHE) > 64:
            _PERT_CACHE.clear()
        _PERT_CACHE[key] = sample_disorder(spec.mixture(), N, spec.seed, stream=PERTURBATION_STREAM)
    return _PERT_CACHE[key]


def perturbation(spec: PerturbationSpec, base: Disorder, sigma, variant: str = "plain", M: int = 0):
    """Perturbation energy; ``variant`` is "plain" (N^{-1/8}) or "cavity" ((M+N)^{-1/8})."""
    S, single = _as_batch(base, sigma)
    if not spec.enabled:
        return 0.0 if single else np.zeros(S.shape[0])
    N = base.N
    if variant == "plain":
        total = N
    elif variant == "cavity":
        total = M + N
    else:
        raise DomainError(f"unknown perturbation variant {variant!r}")
    # (N/(M+N))^{(p-1)/2} H'_{N,p} is H'_p with scaling M+N
    e = hamiltonian(perturbation_disorder(spec, N), S, total) * total ** (-1.0 / 8.0)
    return float(e[0]) if single else e


def total_energy(d: Disorder, pert: PerturbationSpec | None, S: np.ndarray) -> np.ndarray:
    """H (+ perturbation) for a batch; the cavity variant is used when scaling_total > N."""
    e = hamiltonian(d, S)
    if pert is not None and pert.enabled:
        M = d.scaling_total - d.N
        e = e + perturbation(pert, d, S, "cavity" if M > 0 else "plain", M)
    return e


def disorder_seed(seed: int, index: int) -> int:
    """Seed of the index-th disorder draw of a run with master seed ``seed``."""
    return int(np.random.SeedSequence([int(seed), index]).generate_state(1, np.uint64)[0] >> 1)


def norm_ok(S: np.ndarray, N: int, rtol: float = 1e-10) -> bool:
    sq = np.einsum("ij,ij->i", np.atleast_2d(S), np.atleast_2d(S))
    return bool(np.all(np.abs(sq - N) <= rtol * N))


def sphere_project(X: np.ndarray, N: int) -> np.ndarray:
    return X * (math.sqrt(N) / np.linalg.norm(X, axis=-1, keepdims=True))
