"""Cavity decomposition of H_{M+N} and the empirical A.S.S. bracket.

Writing rho = (sigma, eps) with sigma the first N and eps the last M
coordinates, every monomial of H_{M+N} is classified by how many cavity
indices it contains:

    H_{M+N}(rho) = H_{M,N}(sigma) + sum_i eps_i Z_i(sigma) + gamma(rho).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy.special import logsumexp

from ..errors import CostGuardError, DomainError, FactorizationError
from ..finite_m import spherical_logmgf
from ..mixture import Mixture
from .disorder import Disorder, PerturbationSpec, disorder_seed, sample_disorder
from .mcmc import run_chains

MAX_P = 4
JITTER = 1e-10


@dataclass(frozen=True)
class CavityTerms:
    h_mn: float
    z_terms: np.ndarray
    gamma: float
    total: float

    def reconstruction_error(self, eps: np.ndarray) -> float:
        rebuilt = self.h_mn + float(np.dot(eps, self.z_terms)) + self.gamma
        return abs(rebuilt - self.total) / max(abs(self.total), 1e-300)


def _outer(v: np.ndarray, p: int) -> np.ndarray:
    out = v
    for _ in range(p - 1):
        out = np.multiply.outer(out, v)
    return out


def cavity_decompose(d_full: Disorder, rho, M: int) -> CavityTerms:
    """Split H_{M+N}(rho) into zero-, one- and many-cavity-index parts.

    Each part is computed on its own (masks for the zero and many counts,
    tensor slicing for Z_i), so the reconstruction identity is a real check.
    """
    rho = np.asarray(rho, dtype=float)
    K = d_full.N
    N = K - M
    if M < 1 or N < 1:
        raise DomainError("need 1 <= M < M + N")
    if rho.shape != (K,):
        raise DomainError(f"rho must have {K} coordinates")
    if abs(rho @ rho - K) > 1e-8 * K:
        raise DomainError("rho is not on S_{M+N}")
    if d_full.mixture.max_p > MAX_P:
        raise CostGuardError(f"cavity classification is O(N^p); p = {d_full.mixture.max_p} exceeds {MAX_P}")
    sigma = rho[:N]
    is_cav = (np.arange(K) >= N).astype(int)
    h = 0.0
    gamma = 0.0
    z = np.zeros(M)
    total = 0.0
    for p, beta in d_full.mixture.terms:
        g = d_full.tensors[p]
        c = beta * K ** (-(p - 1) / 2.0)
        weights = g * _outer(rho, p)
        count = sum(np.expand_dims(is_cav, tuple(a for a in range(p) if a != ax)) for ax in range(p))
        h += c * weights[count == 0].sum()
        gamma += c * weights[count >= 2].sum()
        total += c * weights.sum()
        inner = [slice(0, N)] * p
        for i in range(M):
            acc = 0.0
            for pos in range(p):
                idx = list(inner)
                idx[pos] = N + i
                sub = g[tuple(idx)]
                for _ in range(p - 1):
                    sub = sub @ sigma if sub.ndim > 1 else float(sub @ sigma)
                acc += float(sub)
            z[i] += c * acc
    return CavityTerms(float(h), z, float(gamma), float(total))


def gamma_bound(mix: Mixture, M: int, N: int) -> float:
    """M^2 xi''(1) / (M + N), the bound on E gamma^2."""
    return M * M * mix.xi(1.0, 2) / (M + N)


@dataclass(frozen=True)
class SamplerOptions:
    n_rep: int = 16  # Gibbs samples per disorder fed into the field construction
    n_gauss: int = 64
    n_dis: int = 8
    n_chains: int = 4
    steps: int = 2000
    burn_in: int = 1000
    thin: int = 0  # 0 spreads the stored samples evenly over the run
    perturbation: PerturbationSpec = field(default_factory=PerturbationSpec)


@dataclass(frozen=True)
class AssBracket:
    term_z: float
    term_y: float
    stderr: float  # of (term_z - term_y), from per-disorder values

    def lower_bound(self, M: int) -> float:
        return (self.term_z - self.term_y) / M


def sqrt_factor(C: np.ndarray) -> np.ndarray:
    """L with L L^T = C + jitter I; Cholesky first, symmetric square root as fallback."""
    n = C.shape[0]
    Cj = C + JITTER * np.eye(n)
    try:
        return np.linalg.cholesky(Cj)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(Cj)
        if w.min() < -1e-8 * max(1.0, w.max()):
            cond = np.linalg.cond(C)
            raise FactorizationError(f"overlap covariance is not PSD (condition number {cond:.3e})")
        return V * np.sqrt(np.clip(w, 0.0, None))


def _gibbs_samples(d: Disorder, opts: SamplerOptions, seed: int) -> np.ndarray:
    per_chain = math.ceil(opts.n_rep / opts.n_chains)
    thin = opts.thin or max(1, opts.steps // per_chain)
    chains = run_chains(d, opts.perturbation, opts.n_chains, opts.steps, opts.burn_in, thin, seed)
    X = np.concatenate([c.samples[-per_chain:] for c in chains])
    return X[: opts.n_rep]


def _bracket_terms(mix: Mixture, X: np.ndarray, M: int, n_gauss: int, rng: np.random.Generator):
    N = X.shape[1]
    R = np.clip(X @ X.T / N, -1.0, 1.0)
    Lz = sqrt_factor(mix.xi(R, 1))
    Ly = sqrt_factor(mix.theta(R))
    n = R.shape[0]
    tz = np.empty(n_gauss)
    ty = np.empty(n_gauss)
    logn = math.log(n)
    for g in range(n_gauss):
        z = Lz @ rng.standard_normal((n, M))  # column i is the field z_i over replicas
        y = Ly @ rng.standard_normal(n)
        lam = spherical_logmgf(M, np.linalg.norm(z, axis=1))
        tz[g] = logsumexp(lam) - logn
        ty[g] = logsumexp(math.sqrt(M) * y) - logn
    return tz.mean(), ty.mean()


def ass_bracket_estimate(mix: Mixture, M: int, N: int, opts: SamplerOptions = SamplerOptions(), seed: int = 0) -> AssBracket:
    """E log int_{S_M} <exp eps.z> d lambda_M and E log <exp sqrt(M) y> under G_{M,N}.

    The inner spherical integral is exp Lambda_M(|z(sigma)|) by rotation
    invariance; Gibbs averages are empirical means over sampled configurations.
    """
    if not (1 <= M <= 8 and 1 <= N <= 32):
        raise DomainError("ass_bracket_estimate is meant for N <= 32 and M <= 8")
    if mix.is_zero:
        return AssBracket(0.0, 0.0, 0.0)
    zs, ys = np.empty(opts.n_dis), np.empty(opts.n_dis)
    for i in range(opts.n_dis):
        s = disorder_seed(seed, i)
        d = sample_disorder(mix, N, s, scaling_total=M + N)
        X = _gibbs_samples(d, opts, s)
        zs[i], ys[i] = _bracket_terms(mix, X, M, opts.n_gauss, np.random.default_rng([s, 4]))
    diff = zs - ys
    se = float(np.std(diff, ddof=1) / math.sqrt(len(diff))) if len(diff) > 1 else math.nan
    return AssBracket(float(zs.mean()), float(ys.mean()), se)


def tuple_classes(N: int, M: int, p: int):
    """All p-tuples over M + N sites grouped by cavity count (for small hand checks)."""
    out = {}
    for t in product(range(M + N), repeat=p):
        out.setdefault(sum(i >= N for i in t), []).append(t)
    return out
