"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class ResourceGuardError(RuntimeError):
    """A configured memory or cost guard would be exceeded."""


class CostGuardError(ResourceGuardError):
    pass


class MemoryGuardError(ResourceGuardError):
    pass


class BracketError(RuntimeError):
    """No sign change of the b-derivative was found while bracketing."""


class InsufficientReplicasError(ValueError):
    pass


class FactorizationError(RuntimeError):
    pass


class SamplerHealthWarning(UserWarning):
    """Acceptance rate or effective sample size outside the healthy range."""


class AccuracyWarning(UserWarning):
    pass
