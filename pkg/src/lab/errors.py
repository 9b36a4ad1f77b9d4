"""Exception hierarchy for the lab"""

from typing import Optional, Sequence


class LabError(Exception):
    """Base class for every error raised by the lab."""


class ConfigError(LabError):
    """Configuration could not be parsed or validated.

    ``location`` is either ``file:line:column`` for syntax errors or a dotted
    field path such as ``process.alpha`` for schema errors.
    """

    def __init__(self, message: str, location: Optional[str] = None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class PreconditionError(LabError, ValueError):
    """An operation was called with arguments outside its domain."""


class QuadratureError(LabError):
    """A quadrature or grid search failed to converge.

    The last two estimates are kept so callers can report the bracket.
    """

    def __init__(self, message: str, estimates: Sequence[float] = ()):
        self.estimates = tuple(estimates)
        if self.estimates:
            message = f"{message} (estimates: {', '.join(f'{e:.10g}' for e in self.estimates)})"
        super().__init__(message)


class SimulationError(LabError):
    """A simulator produced unusable output (non-finite values, degenerate thinning, overflow)."""


class ResourceCapError(LabError):
    """A configured size cap (cells, quadrature nodes) would be exceeded."""


class CoverValidityError(LabError, AssertionError):
    """A covering construction failed its post-hoc validity check."""
