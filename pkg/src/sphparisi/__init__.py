"""Free energy of mixed p-spin spherical spin glasses.

The Parisi functional with its inner infimum over b, its outer minimization
over k-step order parameters, the finite-M functional P_M, sphere geometry of
the cavity method and a finite-N simulator.
"""

from .errors import (
    AccuracyWarning,
    BracketError,
    CostGuardError,
    DomainError,
    FactorizationError,
    InsufficientReplicasError,
    MemoryGuardError,
    ResourceGuardError,
    SamplerHealthWarning,
)
from .finite_m import FiniteMConfig, FiniteMResult, lipschitz_gap, pm_value, spherical_logmgf
from .mixture import Mixture, pure, theta, xi_derivative
from .optimizer import OptimizationResult, OptimizeOptions, optimize, optimize_at_k
from .parisi import ParisiEvaluation, cascade_depths, infimum_over_b, objective_at_b, parisi_value
from .rsb import (
    FunctionalOrderParameter,
    OrderParameterError,
    discretize_hk,
    evaluate_cdf,
    hk,
    l1_distance,
    replica_symmetric,
    validate,
)
from .sphere import ShellSpec, ass_correction, coordinate_density, decomposition_check, sample_sphere, shell_measure

__version__ = "0.1.0"

__all__ = [
    "AccuracyWarning",
    "BracketError",
    "CostGuardError",
    "DomainError",
    "FactorizationError",
    "FiniteMConfig",
    "FiniteMResult",
    "FunctionalOrderParameter",
    "InsufficientReplicasError",
    "MemoryGuardError",
    "Mixture",
    "OptimizationResult",
    "OptimizeOptions",
    "OrderParameterError",
    "ParisiEvaluation",
    "ResourceGuardError",
    "SamplerHealthWarning",
    "ShellSpec",
    "ass_correction",
    "cascade_depths",
    "coordinate_density",
    "decomposition_check",
    "discretize_hk",
    "evaluate_cdf",
    "hk",
    "infimum_over_b",
    "l1_distance",
    "lipschitz_gap",
    "objective_at_b",
    "optimize",
    "optimize_at_k",
    "parisi_value",
    "pm_value",
    "pure",
    "replica_symmetric",
    "sample_sphere",
    "shell_measure",
    "spherical_logmgf",
    "theta",
    "validate",
    "xi_derivative",
]
