"""Exception hierarchy shared by every module."""


class EntroflowError(Exception):
    """Base class for all package errors."""


class UsageError(EntroflowError, ValueError):
    """Bad arguments: shapes, ranges, or combinations a caller controls."""


class DomainError(EntroflowError, ValueError):
    """A mathematical precondition fails (negative density, wrong mass, ...)."""


class NonAdmissibleError(DomainError):
    """A field leaves the admissible class; ``minimum`` is the attained grid minimum."""

    def __init__(self, message, minimum=None):
        super().__init__(message)
        self.minimum = minimum


class ConstructionError(EntroflowError, RuntimeError):
    """A field recipe could not produce a valid member of its family."""


class NumericError(EntroflowError, RuntimeError):
    """An iterative solver failed; ``residual`` carries the last residual norm."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
