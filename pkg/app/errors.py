"""Domain errors.

Every failure the library reports on purpose derives from ``JointRegError``;
the CLI turns these into exit code 1 and prints the class name.
"""

from __future__ import annotations

from typing import Any, Dict, List, Optional


class JointRegError(Exception):
    """Base class for all domain errors."""

    @property
    def name(self) -> str:
        return type(self).__name__


class EmptyInput(JointRegError):
    pass


class DuplicateDesignPoint(JointRegError):
    pass


class DesignPointOutOfRange(JointRegError):
    pass


class ScaleNotPositive(JointRegError):
    pass


class IndexOutOfRange(JointRegError):
    pass


class LengthMismatch(JointRegError):
    pass


class TooFewPoints(JointRegError):
    pass


class InfeasibleTube(JointRegError):
    pass


class NoJointApproximation(JointRegError):
    """The merged interpolant already violates some sample's region."""

    def __init__(self, message: str, failing_samples: Optional[List[str]] = None) -> None:
        super().__init__(message)
        self.failing_samples = failing_samples or []


class MaxRoundsExceeded(JointRegError):
    def __init__(self, message: str, diagnostics: Optional[List[Dict[str, Any]]] = None) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics or []


class SupportMismatch(JointRegError):
    pass


class DeltaOutOfRange(JointRegError):
    pass


class InvalidScenario(JointRegError):
    pass


class MissingCalibration(JointRegError):
    pass


class InvalidRequest(JointRegError):
    pass
