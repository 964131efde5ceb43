"""Exception types raised across the package."""


class GramdepError(Exception):
    """Base class for package errors."""


class LayoutError(GramdepError, ValueError):
    """Column grouping is malformed, overlapping or incomplete."""


class CsvParseError(GramdepError, ValueError):
    """A CSV row could not be parsed."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class DegenerateBandwidthError(GramdepError, ValueError):
    """Bandwidth heuristic has no nonzero distance to work with."""


class NotPSDError(GramdepError, ValueError):
    """Matrix has an eigenvalue below the roundoff tolerance."""


class EigenDegeneracyError(GramdepError, ValueError):
    """Eigenvalue is repeated, so its derivative is undefined."""


class SingularPowerError(GramdepError, ValueError):
    """Negative matrix power requested on a singular matrix."""


class DivergenceError(GramdepError, RuntimeError):
    """Training produced a non-finite loss or gradient."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch
