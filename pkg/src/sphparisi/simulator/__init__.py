"""Finite-N instances of the mixed p-spin spherical model."""

from .cavity import AssBracket, CavityTerms, SamplerOptions, ass_bracket_estimate, cavity_decompose, gamma_bound
from .disorder import (
    Disorder,
    PerturbationSpec,
    disorder_seed,
    hamiltonian,
    perturbation,
    sample_disorder,
    total_energy,
)
from .free_energy import FreeEnergyEstimate, free_energy_mc
from .mcmc import GibbsChain, dump_chain, gibbs_mcmc, load_chain, run_chains
from .overlaps import PhiSpec, StatReport, overlap_statistics
from .report import Row, write_csv

__all__ = [
    "AssBracket",
    "CavityTerms",
    "Disorder",
    "FreeEnergyEstimate",
    "GibbsChain",
    "PerturbationSpec",
    "PhiSpec",
    "Row",
    "SamplerOptions",
    "StatReport",
    "ass_bracket_estimate",
    "cavity_decompose",
    "disorder_seed",
    "dump_chain",
    "free_energy_mc",
    "gamma_bound",
    "gibbs_mcmc",
    "hamiltonian",
    "load_chain",
    "overlap_statistics",
    "perturbation",
    "run_chains",
    "sample_disorder",
    "total_energy",
    "write_csv",
]
