"""Exception types shared across the package."""


class TrimregError(Exception):
    """Base class for all package-specific errors."""


class RankDeficiencyError(TrimregError):
    """Design matrix is rank deficient on the (weighted) rows used for a fit.

    Carries the indices of the offending columns in ``columns``.
    """

    def __init__(self, columns, message=None):
        self.columns = sorted(int(c) for c in columns)
        if message is None:
            message = f"rank-deficient design: dependent columns {self.columns}"
        super().__init__(message)


class DegenerateLeverageError(TrimregError):
    """A leverage value makes a closed-form update undefined (H_ii -> 1)."""


class ConvergenceError(TrimregError):
    """An iterative solver failed to converge.

    The last iterate, when available, is attached as ``last_iterate``.
    """

    def __init__(self, message, last_iterate=None):
        self.last_iterate = last_iterate
        super().__init__(message)


class ParameterError(TrimregError, ValueError):
    """An argument violates its documented domain."""
