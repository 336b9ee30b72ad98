class ParameterError(ValueError):
    """Invalid configuration or argument value."""


class StructuralError(ValueError):
    """A graph or order violates a structural invariant (cycle, bad permutation, shape)."""


class NumericError(ArithmeticError):
    """A linear solve or factorization failed, or produced non-finite values."""


class DegenerateInputError(ValueError):
    """Input carries no usable variation (constant column, identical rows)."""


class UndefinedMetricError(ValueError):
    """Metric is undefined for the given confusion counts."""
