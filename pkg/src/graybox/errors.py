"""Exception hierarchy shared by all graybox modules."""


class GrayboxError(Exception):
    """Base class for all errors raised by this package."""


class StructuralError(GrayboxError):
    """Malformed input: bad indices, length mismatches, non-chordal graphs."""


class VisibilityError(GrayboxError):
    """An operation needs full structural information the instance does not expose."""


class CapacityError(GrayboxError):
    """Exhaustive enumeration was requested beyond the configured variable limit."""


class ParseError(GrayboxError):
    """Instance document could not be parsed; message carries line/field context."""


class ConfigError(GrayboxError):
    """Inconsistent generator or algorithm configuration."""
