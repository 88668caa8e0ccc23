"""Exception hierarchy shared by every stage of the pipeline."""
from __future__ import annotations

from typing import TYPE_CHECKING, Optional

if TYPE_CHECKING:  # pragma: no cover
    from .solver.problem import SolverReport


class CraneBehaviorError(RuntimeError):
    """Base class for all domain failures raised by this package."""


class NonFiniteState(CraneBehaviorError):
    """Raised when the crane integration diverges."""


class DegenerateSignal(CraneBehaviorError):
    """Raised when an excitation draw keeps producing an all-zero signal."""


class TooShort(CraneBehaviorError):
    """Raised when a sequence is shorter than an operation requires."""


class OutOfBounds(CraneBehaviorError):
    """Raised when an index set reaches outside the trajectory it selects from."""


class ChannelMismatch(CraneBehaviorError):
    """Raised when trajectories disagree on channel layout or sampling rate."""


class DimensionMismatch(CraneBehaviorError):
    """Raised when matrices and vectors of a problem do not line up."""


class DegenerateNullspace(CraneBehaviorError):
    """Raised when the restricted Hankel matrix leaves no freedom to optimise over."""


class TuningError(CraneBehaviorError):
    """Raised when a hyperparameter grid has no usable cell."""


class ConfigError(CraneBehaviorError):
    """Raised for malformed or inconsistent run configuration files."""


class InfeasibleProblem(CraneBehaviorError):
    """Raised when a constrained problem admits no feasible point."""

    def __init__(self, message: str, report: Optional["SolverReport"] = None) -> None:
        super().__init__(message)
        self.report = report


class SolverMaxIterations(CraneBehaviorError):
    """Raised by callers that insist on a certified optimum."""

    def __init__(self, message: str, report: Optional["SolverReport"] = None) -> None:
        super().__init__(message)
        self.report = report
