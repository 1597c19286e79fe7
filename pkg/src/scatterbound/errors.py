"""Exception hierarchy shared across the toolkit.

The CLI maps these onto exit codes: precondition violations exit with 2,
numerical failures with 3.
"""


class ScatterboundError(Exception):
    """Base class for all toolkit errors."""


class PreconditionError(ScatterboundError):
    """An input violates a documented precondition or invariant."""


class ConvergenceError(ScatterboundError):
    """An iterative solve failed to reach the requested tolerance.

    Carries the last relative residual and iteration count when known.
    """

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class NumericalError(ScatterboundError):
    """A numerical operation produced an unusable result (singular system,
    eigensolver breakdown, inconsistent data)."""


class DataFormatError(ScatterboundError):
    """A persisted file is malformed or carries an incompatible convention."""
