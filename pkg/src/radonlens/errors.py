"""Exception hierarchy shared across the toolkit.

The CLI maps these onto stable exit codes: validation-class errors exit
with 2, I/O failures (plain OSError) with 3.
"""


class RadonLensError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(RadonLensError):
    """Invalid parameters or inputs that violate a documented contract."""


class DimensionError(ValidationError):
    """Shape mismatch between images, sinograms, and geometries."""


class FormatError(ValidationError):
    """A file is not in the expected format (bad magic, wrong schema)."""


class ParseError(ValidationError):
    """A file in the right format is malformed; carries a byte offset."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class DataError(ValidationError):
    """Numerically unusable data (NaN/Inf where finite values are required)."""
