"""Exception types raised across the package."""


class ShapeError(ValueError):
    """An array argument does not conform to the expected shape."""


class ConfigError(ValueError):
    """An experiment configuration is inconsistent or incomplete."""


class NumericOverflowError(ArithmeticError):
    """Non-finite values appeared during propagation or optimization."""

    def __init__(self, message, layer=None, level=None, iteration=None):
        super().__init__(message)
        self.layer = layer
        self.level = level
        self.iteration = iteration


class ScheduleError(ValueError):
    """A V-cycle schedule string could not be parsed.

    ``position`` is the character offset into the original text where the
    problem was detected.
    """

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class IdxFormatError(ValueError):
    """An IDX data file is malformed or inconsistent with its companion."""
