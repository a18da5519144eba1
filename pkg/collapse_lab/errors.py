"""
Exception hierarchy.

Every failure the library reports on purpose derives from CollapseLabError,
so the CLI can turn it into a single machine-parsable error line.
"""

from pathlib import Path
from typing import Optional, Union


class CollapseLabError(Exception):
    """Base class for all library errors."""


class ConfigError(CollapseLabError, ValueError):
    """Invalid hyperparameters, train settings or config file contents."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class ShapeError(CollapseLabError, ValueError):
    """Array dimensions do not agree."""


class StateError(CollapseLabError, ValueError):
    """Model state with non-finite entries."""


class LabelError(CollapseLabError, ValueError):
    """Label outside [0, K)."""


class MetricError(CollapseLabError, ValueError):
    """Metric preconditions not met."""


class SolverError(CollapseLabError, RuntimeError):
    """A root finder or minimizer could not produce a result."""


class FeatureFileError(CollapseLabError, ValueError):
    """Malformed feature or classifier file."""

    def __init__(
        self,
        path: Union[str, Path],
        message: str,
        line_number: Optional[int] = None,
    ):
        self.path = Path(path)
        self.line_number = line_number
        where = f"{self.path}" if line_number is None else f"{self.path}:{line_number}"
        super().__init__(f"{where}: {message}")
