"""Exception types shared across the pipeline.

The CLI maps these onto exit codes: parse/validation -> 2, empty
result -> 3, I/O (plain OSError) -> 4.
"""

from __future__ import annotations


class NavcurateError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(NavcurateError):
    """A file line could not be parsed into a record."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class ValidationError(NavcurateError):
    """A value violates a documented invariant."""


class GimbalDegenerate(NavcurateError):
    """Yaw is undefined: the camera forward vector is (near) vertical."""


class EmptyResult(NavcurateError):
    """An operation produced nothing (e.g. trajectory shorter than one clip)."""


class TooShort(NavcurateError):
    """A clip is shorter than one sliding window."""


class Infeasible(NavcurateError):
    """No valid start frame exists for a landmark under the sampler config."""


class OutOfBounds(NavcurateError):
    """A requested frame range runs past the end of the clip."""


class LengthMismatch(NavcurateError):
    """Two sequences that must have equal length do not."""


class ShapeMismatch(NavcurateError):
    """Two arrays that must have identical shape do not."""


class AllUndefined(NavcurateError):
    """Every step of a waypoint pair has (near) zero displacement on one side."""


class EmptyInput(NavcurateError):
    """An aggregate operation received zero records."""


class InvalidSpec(NavcurateError):
    """A synthetic-data spec is internally inconsistent."""
