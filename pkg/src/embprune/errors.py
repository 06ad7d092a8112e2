"""Exception types shared across the package."""


class EmbpruneError(Exception):
    """Base class for every error this package raises on purpose."""


class FormatError(EmbpruneError):
    """Embedding file has a bad magic, version, or truncated payload."""


class DataError(EmbpruneError):
    """Values violate a data invariant (NaN/inf, zero-norm row, bad flag)."""


class ValidationError(EmbpruneError):
    """Inputs are individually well-formed but mutually inconsistent."""


class ConfigError(EmbpruneError):
    """A configuration value is outside its legal range."""


class EmptyInputError(EmbpruneError):
    """An operation that needs at least one item received none."""


class ConsistencyError(EmbpruneError):
    """Matrix and cluster model disagree on shape or size."""


class NumericError(EmbpruneError):
    """A computation hit a degenerate value, e.g. a zero-length vector."""


class DomainError(EmbpruneError):
    """A scalar argument is outside the function's domain."""


class FitError(EmbpruneError):
    """Parameter recovery has no usable observations."""
