"""Metropolis random walk on the sphere for the Gibbs measure of H (+ perturbation).

Proposals are sigma' = sqrt(N) (sigma + zeta eta) / |sigma + zeta eta|. The
proposal density is symmetric, so acceptance is min(1, exp(H(sigma') - H(sigma))).
The step size zeta is tuned only during burn-in and frozen afterward.
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, SamplerHealthWarning
from ..sphere import sample_sphere
from .disorder import Disorder, PerturbationSpec, sphere_project, total_energy

TARGET = (0.3, 0.5)
HEALTHY = (0.15, 0.7)
ADAPT_WINDOW = 50
MAGIC = b"SPHCHAIN"


@dataclass
class GibbsChain:
    samples: np.ndarray  # (n_stored, N)
    energies: np.ndarray
    acceptance: float  # post-burn-in acceptance rate
    window_acceptance: list = field(default_factory=list)
    step_trace: list = field(default_factory=list)
    seed: int = 0

    @property
    def N(self) -> int:
        return self.samples.shape[1]


def run_chains(
    d: Disorder,
    pert: PerturbationSpec | None,
    n_chains: int,
    steps: int,
    burn_in: int,
    thin: int,
    seed,
    zeta0: float | None = None,
) -> list[GibbsChain]:
    """``n_chains`` independent chains advanced together, each with its own step size."""
    if steps < 1 or burn_in < 0 or thin < 1 or n_chains < 1:
        raise DomainError("need steps >= 1, burn_in >= 0, thin >= 1, n_chains >= 1")
    N = d.N
    rng = np.random.default_rng(seed)
    x = sample_sphere(N, n_chains, rng)
    e = total_energy(d, pert, x)
    zeta = np.full(n_chains, zeta0 if zeta0 is not None else 1.0)
    acc_win = np.zeros(n_chains)
    acc_post = np.zeros(n_chains)
    windows: list[list] = [[] for _ in range(n_chains)]
    traces: list[list] = [[float(z)] for z in zeta]
    stored_x, stored_e = [], []
    total = burn_in + steps
    for t in range(total):
        prop = sphere_project(x + zeta[:, None] * rng.standard_normal((n_chains, N)), N)
        e_new = total_energy(d, pert, prop)
        log_u = np.log(rng.random(n_chains))
        accept = log_u < e_new - e
        x = np.where(accept[:, None], prop, x)
        e = np.where(accept, e_new, e)
        if t < burn_in:
            acc_win += accept
            if (t + 1) % ADAPT_WINDOW == 0:
                rate = acc_win / ADAPT_WINDOW
                # multiplicative tuning toward the target band
                zeta = np.where(rate < TARGET[0], zeta * 0.8, np.where(rate > TARGET[1], zeta * 1.25, zeta))
                zeta = np.minimum(zeta, 2.0 * math.sqrt(N))
                for c in range(n_chains):
                    windows[c].append(float(rate[c]))
                    traces[c].append(float(zeta[c]))
                acc_win[:] = 0.0
        else:
            acc_post += accept
            if (t - burn_in + 1) % thin == 0:
                stored_x.append(x.copy())
                stored_e.append(e.copy())
    # re-project stored samples so the norm invariant holds to round-off
    X = sphere_project(np.stack(stored_x, axis=1), N) if stored_x else np.empty((n_chains, 0, N))
    E = np.stack(stored_e, axis=1) if stored_e else np.empty((n_chains, 0))
    rates = acc_post / steps
    chains = []
    for c in range(n_chains):
        chains.append(GibbsChain(X[c], E[c], float(rates[c]), windows[c], traces[c], seed=c))
        if not HEALTHY[0] <= rates[c] <= HEALTHY[1]:
            warnings.warn(
                f"chain {c}: post-burn-in acceptance {rates[c]:.3f} outside {HEALTHY}",
                SamplerHealthWarning,
                stacklevel=2,
            )
    return chains


def gibbs_mcmc(d: Disorder, pert: PerturbationSpec | None, steps: int, burn_in: int, thin: int, seed) -> GibbsChain:
    """A single Metropolis chain; see :func:`run_chains`."""
    chain = run_chains(d, pert, 1, steps, burn_in, thin, seed)[0]
    chain.seed = seed if isinstance(seed, int) else 0
    return chain


def dump_chain(chain: GibbsChain, path) -> None:
    """Binary dump: magic, uint64 n_samples, uint64 N, float64 configs, float64 energies (little-endian)."""
    n, N = chain.samples.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<QQ", n, N))
        fh.write(np.ascontiguousarray(chain.samples, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(chain.energies, dtype="<f8").tobytes())


def load_chain(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, "rb") as fh:
        if fh.read(8) != MAGIC:
            raise DomainError("not a chain dump")
        n, N = struct.unpack("<QQ", fh.read(16))
        X = np.frombuffer(fh.read(8 * n * N), dtype="<f8").reshape(n, N)
        E = np.frombuffer(fh.read(8 * n), dtype="<f8")
    return X.copy(), E.copy()
