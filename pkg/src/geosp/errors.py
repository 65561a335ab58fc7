"""Exception types shared across the pipeline."""


class GeoSPError(Exception):
    """Base class for all package errors."""


class FormatError(GeoSPError):
    """Malformed input file or serialization payload."""


class SeparatorError(GeoSPError):
    """A separator algorithm exhausted its retry budget.

    Carries a ``diagnostics`` dict (attempt counts, sizes seen) so callers
    can report why the instance was rejected instead of silently degrading.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class DivisionError(GeoSPError):
    """Recursive division could not satisfy its structural bounds."""

    def __init__(self, message, level=None, diagnostics=None):
        super().__init__(message)
        self.level = level
        self.diagnostics = dict(diagnostics or {})
