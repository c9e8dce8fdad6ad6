"""Geometry of the sphere S_K of radius sqrt(K).

Uniform sampling, the cavity-coordinate decoupling density F_{M,N} with its
rescaling factors a_l, Gaussian shell measures nu_M(A_delta) and the shell
correction term -delta xi'(1) + log(nu_M(A_delta)) / M.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .errors import DomainError
from .mixture import Mixture
from .special import chi2_interval


@dataclass(frozen=True)
class ShellSpec:
    M: int
    delta: float

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise DomainError("M must be an integer >= 1")
        if not self.delta > 0:
            raise DomainError("delta must be positive")


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def sample_sphere(N: int, count: int, seed) -> np.ndarray:
    """``count`` i.i.d. uniform points on S_N, shape (count, N)."""
    if N < 1 or count < 1:
        raise DomainError("need N >= 1 and count >= 1")
    g = _rng(seed).standard_normal((count, N))
    if N == 1:
        # S_1 = {-1, +1}; the sign avoids a one-ulp normalization error
        return np.where(g >= 0, 1.0, -1.0)
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    return g * (math.sqrt(N) / norms)


def log_unit_sphere_area(K: int) -> float:
    """log |S^1_K|, the surface area of the unit sphere in R^K."""
    return math.log(2.0) + 0.5 * K * math.log(math.pi) - gammaln(0.5 * K)


def _radii_sq(M: int, N: int) -> np.ndarray:
    # K_j = M + N + 1 - j for j = 1..M
    return np.array([M + N + 1 - j for j in range(1, M + 1)], dtype=float)


def _exponents(M: int, N: int) -> np.ndarray:
    return np.array([(M + N - j - 2) / 2.0 for j in range(1, M + 1)])


def log_b(M: int, N: int) -> float:
    """log of the normalization b_{M,N}."""
    total = 0.0
    for j in range(1, M + 1):
        K = M + N + 1 - j
        total += log_unit_sphere_area(K - 1) - log_unit_sphere_area(K) - 0.5 * math.log(K)
    return total


@dataclass(frozen=True)
class CoordinateFactors:
    M: int
    N: int
    density: float
    a: tuple[float, ...]  # a_1..a_{M+1}


def scale_factors(M: int, N: int, eps: np.ndarray) -> np.ndarray:
    """a_1..a_{M+1} for a batch of eps (shape (..., M)); returns shape (..., M+1)."""
    eps = np.asarray(eps, dtype=float)
    j = np.arange(1, M + 1)
    inc = np.sqrt(1.0 + (1.0 - eps**2) / (M + N - j))
    ones = np.ones(eps.shape[:-1] + (1,))
    return np.concatenate([ones, np.cumprod(inc, axis=-1)], axis=-1)


def log_coordinate_density(M: int, N: int, eps) -> np.ndarray:
    eps = np.asarray(eps, dtype=float)
    K = _radii_sq(M, N)
    if np.any(np.abs(eps) > np.sqrt(K)):
        raise DomainError("eps lies outside the box A_{M,N}")
    e = _exponents(M, N)
    with np.errstate(divide="ignore"):
        terms = e * np.log1p(-(eps**2) / K)
    # 0 * log(0) at the boundary with zero exponent
    terms = np.where(e == 0, 0.0, terms)
    return log_b(M, N) + terms.sum(axis=-1)


def coordinate_density(M: int, N: int, eps) -> CoordinateFactors:
    """F_{M,N}(eps) and the scale factors a_1..a_{M+1} at a single eps."""
    if M < 1 or N < 1:
        raise DomainError("need M, N >= 1")
    eps = np.asarray(eps, dtype=float).reshape(M)
    dens = float(np.exp(log_coordinate_density(M, N, eps)))
    a = scale_factors(M, N, eps)
    return CoordinateFactors(M, N, dens, tuple(float(v) for v in a))


def sample_coordinates(M: int, N: int, count: int, seed) -> np.ndarray:
    """Draws from F_{M,N}; coordinates are independent scaled symmetric Betas."""
    rng = _rng(seed)
    K = _radii_sq(M, N)
    e = _exponents(M, N)
    x = 2.0 * rng.beta(e + 1.0, e + 1.0, size=(count, M)) - 1.0
    return x * np.sqrt(K)


def assemble(sigma: np.ndarray, eps: np.ndarray, M: int, N: int) -> np.ndarray:
    """(sigma a_{M+1}, eps_1 a_1, ..., eps_M a_M) for batches of sigma and eps."""
    a = scale_factors(M, N, eps)
    return np.concatenate([sigma * a[..., M:], eps * a[..., :M]], axis=-1)


@dataclass(frozen=True)
class MCEstimate:
    value: float
    stderr: float


def _mean_se(x: np.ndarray) -> MCEstimate:
    return MCEstimate(float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(len(x))))


def decomposition_check(
    M: int,
    N: int,
    test_fn: Callable[[np.ndarray], np.ndarray],
    samples: int,
    seed,
    batch: int = 200_000,
):
    """Monte Carlo for both sides of the sphere decoupling identity.

    lhs estimates the integral of ``test_fn`` over S_{M+N} directly, rhs the
    iterated integral with F_{M,N} weights and rescaled arguments. ``test_fn``
    maps an (n, M+N) array of points to n values. Returns (lhs, rhs, stderr).
    """
    if M + N < 3:
        raise DomainError("need M + N >= 3")
    seeds = np.random.SeedSequence(seed).spawn(2)
    lhs_rng, rhs_rng = (np.random.default_rng(s) for s in seeds)
    lhs_vals, rhs_vals = [], []
    done = 0
    while done < samples:
        n = min(batch, samples - done)
        rho = sample_sphere(M + N, n, lhs_rng)
        lhs_vals.append(np.asarray(test_fn(rho), dtype=float))
        eps = sample_coordinates(M, N, n, rhs_rng)
        sigma = sample_sphere(N, n, rhs_rng)
        rhs_vals.append(np.asarray(test_fn(assemble(sigma, eps, M, N)), dtype=float))
        done += n
    lhs = _mean_se(np.concatenate(lhs_vals))
    rhs = _mean_se(np.concatenate(rhs_vals))
    return lhs.value, rhs.value, math.hypot(lhs.stderr, rhs.stderr)


def shell_measure(s: ShellSpec) -> float:
    """nu_M(A_delta) = P(M <= chi2_M <= M (1 + delta))."""
    return chi2_interval(s.M, s.M * (1.0 + s.delta), s.M)


def ass_correction(s: ShellSpec, mix: Mixture) -> float:
    """-delta xi'(1) + log(nu_M(A_delta)) / M."""
    return -s.delta * mix.xi(1.0, 1) + math.log(shell_measure(s)) / s.M


def shell_mgf_mc(z: np.ndarray, delta: float, samples: int, seed) -> MCEstimate:
    """Rejection-sampling estimate of int_{A_delta} exp(eps . z) dnu_M(eps).

    Standard Gaussian draws are kept when they fall in the shell; the estimate
    is the sample mean of exp(eps . z) 1_{A_delta}(eps).
    """
    z = np.asarray(z, dtype=float)
    M = z.shape[0]
    eps = _rng(seed).standard_normal((samples, M))
    sq = np.einsum("ij,ij->i", eps, eps)
    inside = (sq >= M) & (sq <= M * (1.0 + delta))
    vals = np.where(inside, np.exp(eps @ z), 0.0)
    return _mean_se(vals)
