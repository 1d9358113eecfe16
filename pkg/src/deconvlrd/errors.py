"""Exception types shared across the package."""


class DeconvError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(DeconvError, ValueError):
    """A parameter is outside its admissible range."""


class ConfigurationError(DeconvError, ValueError):
    """A grid, config file or option combination is unusable."""


class NumericalRangeError(DeconvError, ArithmeticError):
    """A computation would leave the representable / well-conditioned range."""


class UnsupportedSmoothnessError(DeconvError, ValueError):
    """Operation is defined only for a different noise smoothness class."""


class DataError(DeconvError, ValueError):
    """Input data violates a precondition (empty, non-positive cell, ...)."""


class ResourceError(DeconvError, MemoryError):
    """Requested problem size exceeds the addressable budget."""
