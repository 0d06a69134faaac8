"""Exception hierarchy shared by every amtraj module."""


class AmTrajError(Exception):
    """Base class for all errors raised by amtraj."""


class InvalidOrderError(AmTrajError, ValueError):
    """Polynomial order is even or too small."""


class InvalidDurationError(AmTrajError, ValueError):
    """A piece duration is not strictly positive and finite."""


class DimensionError(AmTrajError, ValueError):
    """Array shapes do not agree with the polynomial order or piece count."""


class InvalidProblemError(AmTrajError, ValueError):
    """The problem setup violates a structural assumption (e.g. repeated waypoints)."""


class OutOfRangeError(AmTrajError, ValueError):
    """Evaluation time lies outside the trajectory's time span."""


class InvalidPolynomialError(AmTrajError, ValueError):
    """Operation is undefined for the given polynomial (e.g. the zero polynomial)."""


class EndpointRootError(AmTrajError, ValueError):
    """An interval endpoint is (numerically) a root of the polynomial."""


class NoSignChangeError(AmTrajError, ValueError):
    """Root refinement was given an interval without a sign change."""


class NumericalError(AmTrajError, ArithmeticError):
    """A numerical procedure failed (singular system, divergent durations, ...)."""


class SingularSystemError(NumericalError):
    """The free-derivative system is singular; the problem is degenerate."""


class InfeasibleInitialError(AmTrajError):
    """The constrained solver was started from an infeasible trajectory."""


class ConstructionError(AmTrajError):
    """A feasible initial trajectory could not be constructed."""


class ProblemFileError(AmTrajError, ValueError):
    """A problem or trajectory file could not be parsed or failed validation.

    ``errors`` holds one human-readable message per violation.
    """

    def __init__(self, message, errors=()):
        super().__init__(message)
        self.errors = list(errors)
