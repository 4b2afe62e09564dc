"""Exception types shared across the package."""


class BsmcError(Exception):
    """Base class for library errors."""


class DimensionError(BsmcError, ValueError):
    pass


class SizeError(BsmcError, ValueError):
    pass


class SingularityError(BsmcError, ValueError):
    pass


class ModelError(BsmcError, ValueError):
    """Invalid physical model input, e.g. a Gram matrix that is not PSD."""


class MappingError(BsmcError, ValueError):
    pass


class DivergenceError(BsmcError, ArithmeticError):
    pass


class DegenerateError(BsmcError, ArithmeticError):
    """No probability mass survives the hard-shell constraint."""


class SupportError(BsmcError, ValueError):
    pass


class ConfigError(BsmcError, ValueError):
    pass


class DataError(BsmcError, ValueError):
    """Malformed external data (count files)."""
