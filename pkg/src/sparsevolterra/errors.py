"""Exception and warning types shared across the package."""


class VolterraError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(VolterraError, ValueError):
    """Jacobi parameters outside their legal range."""


class DomainError(VolterraError, ValueError):
    """Evaluation point outside the interval or triangle."""


class InputError(VolterraError, ValueError):
    """Non-finite samples or malformed user input."""


class NumericalError(VolterraError, ArithmeticError):
    """Eigen-solver failure, overflow or similar breakdown."""


class KernelResolutionError(VolterraError, ValueError):
    """The kernel could not be represented to the requested tolerance."""


class SolverError(VolterraError, ArithmeticError):
    """The finite section is singular or too ill-conditioned to trust."""


class ConvergenceError(VolterraError, RuntimeError):
    """Adaptive truncation did not reach the tolerance.

    ``history`` holds one ``(N, tail_ratio, residual_norm)`` tuple per attempt.
    """

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class UnknownProblemError(VolterraError, KeyError):
    """Lookup of a name that is not in the builtin catalog."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class IllConditionedWarning(UserWarning):
    pass


class ValidationWarning(UserWarning):
    pass
