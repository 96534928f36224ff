"""Exception types raised by dmsing."""


class DmsingError(Exception):
    """Base class for all dmsing errors."""


class DimensionError(DmsingError, ValueError):
    """Invalid Hilbert-space dimension or mismatched operand shapes."""


class NotAStateError(DmsingError, ValueError):
    """A matrix or coherence vector does not describe a physical state."""


class PoleError(DmsingError, ArithmeticError):
    """A time-dependent rate was evaluated at (or too close to) a pole."""


class DomainError(DmsingError, ValueError):
    """A time lies outside the domain on which a map family is defined."""


class ConfigError(DmsingError, ValueError):
    """Invalid solver or scan configuration."""


class SchemaError(DmsingError, ValueError):
    """An input file does not match the expected JSON layout."""


class NumericalFailure(DmsingError, RuntimeError):
    """An iterative numerical routine failed to converge."""
