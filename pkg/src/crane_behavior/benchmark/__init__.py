"""Model-based waypoint benchmark and method comparison."""

from .comparison import (
    ComparisonReport,
    MethodOutcome,
    compare,
    outcome_from_generation,
    outcome_from_waypoints,
)
from .waypoints import (
    Bounds,
    FiniteDifference,
    NLPMethod,
    NLPReport,
    WaypointPlanner,
    WaypointProblem,
    WaypointSolution,
    plan_trajectory,
    propagate_sway,
    segment_transition,
    solve_waypoint_nlp,
    waypoint_playback,
)

__all__ = [
    "Bounds",
    "ComparisonReport",
    "FiniteDifference",
    "MethodOutcome",
    "NLPMethod",
    "NLPReport",
    "WaypointPlanner",
    "WaypointProblem",
    "WaypointSolution",
    "compare",
    "outcome_from_generation",
    "outcome_from_waypoints",
    "plan_trajectory",
    "propagate_sway",
    "segment_transition",
    "solve_waypoint_nlp",
    "waypoint_playback",
]
