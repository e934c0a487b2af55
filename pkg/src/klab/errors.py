"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`KlabError`.
Validation-style errors also derive from :class:`ValueError`, numerical
breaches from :class:`ArithmeticError`, so callers can catch broadly.
"""


class KlabError(Exception):
    """Base class for all package errors."""


class ValidationError(KlabError, ValueError):
    """Bad input: the call can never succeed with these arguments."""


class NumericalError(KlabError, ArithmeticError):
    """A numerical check (residual, convergence) failed."""


# graph_core
class DuplicateEdge(ValidationError):
    pass


class SelfLoop(ValidationError):
    pass


class IndexOutOfRange(ValidationError, IndexError):
    pass


class DeficitViolation(ValidationError):
    pass


# rrg_sampler
class OddProduct(ValidationError):
    pass


class DegreeTooLarge(ValidationError):
    pass


class RetryBudgetExceeded(KlabError, RuntimeError):
    pass


class NotSwitchable(ValidationError):
    pass


class BallTooLarge(ValidationError):
    pass


class InvalidData(ValidationError):
    pass


# tree_green
class NotUpperHalfPlane(ValidationError):
    pass


class SingularSystem(NumericalError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SeriesDiverging(NumericalError):
    pass


class UnrealizableGeometry(ValidationError):
    pass


# resolvent
class SizeCapExceeded(ValidationError):
    pass


class SolveFailed(NumericalError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ZeroDiagonal(NumericalError):
    def __init__(self, message, vertex=None):
        super().__init__(message)
        self.vertex = vertex


class DegreeDomain(ValidationError):
    """Degree outside the supported range (d >= 3)."""


# local_law
class EigFailed(NumericalError):
    pass


class EmptyDomain(ValidationError):
    pass


class NotCentered(ValidationError):
    pass


# nbw_walks
class Disconnected(ValidationError):
    pass


class PreconditionViolated(ValidationError):
    pass


class Overflow(NumericalError, OverflowError):
    pass
