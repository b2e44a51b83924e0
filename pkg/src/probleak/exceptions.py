"""Exception types shared across the package."""


class ProbleakError(Exception):
    """Base class for data and model errors raised by this package."""


class DataError(ProbleakError):
    """Malformed input data (CSV parse failures, missing values, ragged rows)."""


class ModelError(ProbleakError):
    """Model-level failures: rank deficiency, improper posterior, degenerate predictive."""
