"""
Error types shared across the toolkit.

Every error carries the process exit code the CLI uses when it surfaces:
0 success, 3 validation, 4 parse, 5 estimation/convergence, 6 output.
"""

from typing import Optional, Sequence


class GyroError(Exception):
    """Base class for all toolkit errors."""

    exit_code: int = 1


class ValidationError(GyroError, ValueError):
    """An input violates a documented precondition."""

    exit_code = 3


class ProfileRangeError(ValidationError):
    """A time lies outside the rotation profile."""


class UnsortedStreamError(ValidationError):
    """An event stream is not time-sorted."""


class AmbiguousBranchError(ValidationError):
    """The branch center sits on a fringe extremum, so no monotonic branch is selected."""


class NoSignalError(ValidationError):
    """The model has no fringe amplitude (M = 0)."""


class FileParseError(GyroError):
    """A data file could not be parsed."""

    exit_code = 4

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        line: Optional[int] = None,
        offset: Optional[int] = None,
    ):
        self.path = path
        self.line = line
        self.offset = offset
        location = []
        if path:
            location.append(str(path))
        if line is not None:
            location.append(f"line {line}")
        if offset is not None:
            location.append(f"byte offset {offset}")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")


class EstimationError(GyroError):
    """Base class for fitting and resampling failures."""

    exit_code = 5


class IdentifiabilityError(EstimationError):
    """The series does not constrain the fringe model."""


class RankDeficiencyError(EstimationError):
    """The normal matrix is singular along a parameter direction."""

    def __init__(self, message: str, direction: Sequence[str] = ()):
        self.direction = tuple(direction)
        super().__init__(message)


class ConvergenceError(EstimationError):
    """A fit required to be converged is not."""


class ResamplingError(EstimationError):
    """Too many bootstrap or Monte-Carlo refits failed."""

    def __init__(self, message: str, failures: int = 0, total: int = 0):
        self.failures = failures
        self.total = total
        super().__init__(message)


class OutputError(GyroError):
    """An output file could not be written."""

    exit_code = 6
