"""Exception types shared across the package."""


class SnowaugError(Exception):
    """Base class for all package errors."""


class DegenerateBoxError(SnowaugError):
    """A bounding box collapsed to zero area (e.g. after clamping)."""


class InvalidSigmaError(SnowaugError):
    """Gaussian sigma was non-positive or non-finite."""


class DimensionMismatchError(SnowaugError):
    """Two rasters that must share dimensions do not."""


class AnnotationParseError(SnowaugError):
    """A label file line could not be parsed; message carries file and line."""

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


class MissingAnnotationError(SnowaugError):
    """An image has no corresponding label file."""


class EmptyDatasetError(SnowaugError):
    """An aggregate metric was requested over zero images."""


class ConfigError(SnowaugError):
    """A run config contains unknown keys or out-of-range values."""
