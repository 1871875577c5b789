"""Exception types raised across the package."""


class RwforestError(Exception):
    """Base class for all package-specific errors."""


class ZeroWeightLeaf(RwforestError):
    """A node estimate was requested over rows whose weights sum to zero."""


class EmptyChild(RwforestError):
    """A candidate split leaves one side with no positive-weight row."""


class DegenerateData(RwforestError):
    """Training data is empty where at least one row is required."""


class DimensionMismatch(RwforestError):
    """Query vector length does not match the number of training features."""


class InvalidBlockLen(RwforestError):
    """Moving-block bootstrap block length outside [1, T]."""


class SeriesTooShort(RwforestError):
    """Series shorter than the maximum requested lag (or transform window)."""


class NonPositiveValue(RwforestError):
    """Log transform applied to a value <= 0."""


class IndexOutOfHistory(RwforestError):
    """One-step inversion requested at a time with insufficient history."""


class LengthMismatch(RwforestError):
    """Paired vectors have different lengths."""


class EmptyInput(RwforestError):
    """An operation received an empty vector where data is required."""


class InsufficientLength(RwforestError):
    """Series too short for the requested train/test split."""


class DegenerateVariance(RwforestError):
    """No tree pair had non-constant predictions over the query points."""
