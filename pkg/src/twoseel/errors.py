"""Exception hierarchy.

Two families matter to callers: :class:`InputError` for bad data or arguments
(the CLI maps these to exit code 2) and :class:`SolverError` for numerical
failures (exit code 3).
"""


class TwoSEELError(Exception):
    """Base class for all package errors."""


class InputError(TwoSEELError, ValueError):
    pass


class SolverError(TwoSEELError, RuntimeError):
    pass


class DomainError(InputError):
    """Argument outside the mathematical domain of a function."""


class NotPositiveDefinite(SolverError):
    pass


class SingularJacobian(SolverError):
    pass


class NonFinite(SolverError):
    """A residual or Jacobian evaluation produced inf/nan."""


class InsufficientData(InputError):
    pass


class NoSolution(SolverError):
    pass


class MaxItersReached(SolverError):
    """The profile solver ran out of iterations while still feasible."""


class ExteriorInput(InputError):
    """A point outside the OEL domain was given where an interior one is required."""


class BracketFailure(SolverError):
    pass


class UnknownDistribution(InputError):
    pass
