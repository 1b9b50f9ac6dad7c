"""Exception types shared across the package."""


class AccucurveError(Exception):
    """Base class for all package-specific errors."""


class DataFormatError(AccucurveError, ValueError):
    """Malformed or inconsistent input data."""


class ParameterError(AccucurveError, ValueError):
    """Parameter outside its admissible domain."""


class RegimeError(AccucurveError, ValueError):
    """Operation requested in the wrong asymptotic regime."""


class SeparationError(AccucurveError, RuntimeError):
    """Monotone logistic likelihood (complete separation), no finite optimum."""


class ConvergenceError(AccucurveError, RuntimeError):
    """Iterative routine failed to converge within its budget."""


class ConsistencyError(AccucurveError, RuntimeError):
    """Artifacts that must agree do not (e.g. fits on different datasets)."""
