"""Exception hierarchy.

Everything derives from ``ValueError`` so callers that only care about bad
input can catch one thing; the CLI maps these to exit code 1.
"""


class PathSpaceError(ValueError):
    """Base class for validation failures raised by this package."""


class HorizonError(PathSpaceError):
    """A time lies outside a horizon, or two horizons do not match."""


class BoundViolation(PathSpaceError):
    """A bounded function produced a value above its declared bound."""


class SeparationError(PathSpaceError):
    """A function family failed to separate two sample points."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NotConstructiveError(PathSpaceError):
    """A function has no construction record inside the generated algebra."""


class TrivialMeasureError(PathSpaceError):
    """An operation would produce a measure of zero total mass."""
