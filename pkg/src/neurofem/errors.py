"""Exception types shared across the package."""


class NeuroFemError(Exception):
    """Base class for all errors raised by this package."""


class SingularMatrixError(NeuroFemError):
    """Raised when a dense factorization meets a numerically singular matrix."""


class SolverFailureError(NeuroFemError):
    """Raised when a state solve cannot be carried out reliably.

    Carries a short diagnostic message, e.g. a vanishing inf-sup constant
    or a kernel-coercivity violation.
    """


class KernelCoercivityError(SolverFailureError):
    """Raised when the weighted Galerkin coercivity check fails."""


class ConfigError(NeuroFemError):
    """Raised when a run configuration is malformed or inconsistent."""


class DivergedError(NeuroFemError):
    """Raised when the optimizer detects a non-finite cost or gradient.

    The partial training trace is attached so callers can inspect the
    iterations completed before the blow-up.
    """

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
