"""Hyperparameter searches and trajectory-quality metrics."""

from .grid import (
    SimScoreRow,
    SimTuneGrid,
    SimTuneResult,
    SimulationTuner,
    TrajScoreRow,
    TrajTuneGrid,
    TrajTuneResult,
    TrajectoryTuner,
    combined_objective,
    tune_simulation,
    tune_trajectory,
)
from .metrics import (
    OBJECTIVE_METRICS,
    TrajectoryQuality,
    overshoot_integral,
    rollout_error,
    score_trajectory,
    smoothness,
    time_to_target,
)

__all__ = [
    "OBJECTIVE_METRICS",
    "SimScoreRow",
    "SimTuneGrid",
    "SimTuneResult",
    "SimulationTuner",
    "TrajScoreRow",
    "TrajTuneGrid",
    "TrajTuneResult",
    "TrajectoryQuality",
    "TrajectoryTuner",
    "combined_objective",
    "overshoot_integral",
    "rollout_error",
    "score_trajectory",
    "smoothness",
    "time_to_target",
    "tune_simulation",
    "tune_trajectory",
]
