"""Plain Monte Carlo estimate of the quenched free energy N^{-1} E log Z_N."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ..errors import SamplerHealthWarning
from ..mixture import Mixture
from ..sphere import sample_sphere
from .disorder import check_memory, disorder_seed, hamiltonian, sample_disorder

ESS_MIN = 100
CAVEAT = "log of a sample-mean Z is biased downward (Jensen); plain MC degenerates at low temperature"


@dataclass(frozen=True)
class FreeEnergyEstimate:
    estimate: float
    stderr: float
    # disorder average of Z_hat itself, for the annealed identity E Z = exp(N xi(1) / 2)
    mean_z: float
    mean_z_stderr: float
    min_ess: float
    caveat: str = CAVEAT


def bootstrap_stderr(values: np.ndarray, rng: np.random.Generator, n_boot: int = 1000) -> float:
    values = np.asarray(values, dtype=float)
    if len(values) < 2:
        return 0.0
    idx = rng.integers(0, len(values), size=(n_boot, len(values)))
    return float(np.std(values[idx].mean(axis=1), ddof=1))


def log_mean_exp(x: np.ndarray) -> float:
    return float(logsumexp(x) - math.log(len(x)))


def effective_sample_size(log_w: np.ndarray) -> float:
    w = np.exp(log_w - np.max(log_w))
    return float(w.sum() ** 2 / np.dot(w, w))


def free_energy_mc(
    mix: Mixture,
    N: int,
    n_config: int,
    n_disorder: int,
    seed: int,
    batch: int = 20_000,
) -> FreeEnergyEstimate:
    """Average over disorder of N^{-1} log of the sample mean of exp H on uniform points."""
    check_memory(mix, N)
    logs = np.empty(n_disorder)
    min_ess = math.inf
    for i in range(n_disorder):
        s = disorder_seed(seed, i)
        if mix.is_zero:
            logs[i] = 0.0
            min_ess = min(min_ess, float(n_config))
            continue
        d = sample_disorder(mix, N, s)
        rng = np.random.default_rng([s, 2])
        energies = np.empty(n_config)
        for lo in range(0, n_config, batch):
            n = min(batch, n_config - lo)
            energies[lo : lo + n] = hamiltonian(d, sample_sphere(N, n, rng))
        logs[i] = log_mean_exp(energies)
        min_ess = min(min_ess, effective_sample_size(energies))
    if min_ess < ESS_MIN:
        warnings.warn(f"exp-weight effective sample size {min_ess:.1f} < {ESS_MIN}", SamplerHealthWarning, stacklevel=2)
    boot = np.random.default_rng([int(seed), 3])
    f = logs / N
    z = np.exp(logs)
    return FreeEnergyEstimate(
        estimate=float(f.mean()),
        stderr=bootstrap_stderr(f, boot),
        mean_z=float(z.mean()),
        mean_z_stderr=float(np.std(z, ddof=1) / math.sqrt(len(z))) if len(z) > 1 else 0.0,
        min_ess=float(min_ess),
    )
