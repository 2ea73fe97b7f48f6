"""Exception hierarchy shared across the package."""


class SubstabError(Exception):
    """Base class for all package errors."""


class DimensionError(SubstabError, ValueError):
    """Inconsistent matrix/vector dimensions."""


class ValidationError(SubstabError, ValueError):
    """Input violates a documented precondition (non-orthonormal basis, bad range, ...)."""


class BudgetError(SubstabError, RuntimeError):
    """Oracle interaction budget exhausted."""


class DivergenceError(SubstabError, RuntimeError):
    """A trajectory exceeded the divergence guard."""

    def __init__(self, message, step=None, perturbation_index=None):
        super().__init__(message)
        self.step = step
        self.perturbation_index = perturbation_index


class InstabilityError(SubstabError, ValueError):
    """A controller/matrix that must be (damped-)stable is not."""


class NumericalError(SubstabError, RuntimeError):
    """An iterative numerical routine failed to converge."""


class FeasibilityError(SubstabError, RuntimeError):
    """Riccati iteration diverged: the damped pair is not stabilizable at this discount."""


class AmbiguousSpectrumError(SubstabError, ValueError):
    """An eigenvalue modulus is too close to the stable/unstable threshold to classify."""


class ConfigError(SubstabError, ValueError):
    """Experiment configuration is malformed or violates a constraint."""
