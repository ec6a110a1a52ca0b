"""Exception types shared across the package."""


class PrototokenError(Exception):
    """Base class for every error this package raises deliberately."""


class DimensionError(PrototokenError):
    """Operand shapes are inconsistent."""


class LabelError(PrototokenError):
    """Unknown class name, or a label outside the declared label space."""


class NumericsError(PrototokenError):
    """A numeric routine produced or encountered a non-finite value."""


class DegenerateVectorError(PrototokenError):
    """A (near-)zero-norm vector where a direction is required."""


class EmptyPoolError(PrototokenError):
    """The prototype pool has nothing to search or average over."""


class ConfigError(PrototokenError):
    """Invalid configuration value."""


class AnnotationError(PrototokenError):
    """Malformed document, field annotation, or token."""


class CheckpointError(PrototokenError):
    """Checkpoint cannot be read or is internally inconsistent."""
