"""Exception hierarchy: every error knows the CLI exit code it maps to."""

from __future__ import annotations


class SyncError(Exception):
    exit_code = 1


class DimensionError(SyncError, ValueError):
    """Length or shape mismatch between inputs."""
    exit_code = 2


class ParameterError(SyncError, ValueError):
    exit_code = 2


class DegenerateDegreeError(SyncError):
    """A node with zero degree where the degree gets inverted."""
    exit_code = 2

    def __init__(self, node: int, message: str | None = None):
        self.node = int(node)
        super().__init__(message or f"node {self.node} has zero degree")


class DegenerateAnchorError(SyncError):
    exit_code = 2


class SizeLimitError(SyncError):
    exit_code = 2


class UsageError(SyncError):
    exit_code = 2


class ConvergenceError(SyncError):
    """Iterative solver gave up. Carries the residual and the best iterate."""
    exit_code = 3

    def __init__(self, message: str, residual: float = float("nan"), best=None):
        self.residual = float(residual)
        self.best = best
        super().__init__(f"{message} (residual {self.residual:.3e})")


class FormatError(SyncError):
    exit_code = 4
