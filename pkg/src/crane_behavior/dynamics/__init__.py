"""Crane model, simulator and accessibility analysis."""

from .controllability import (
    AccessibilitySurvey,
    accessibility_survey,
    controllability_matrix,
    det_formula,
    linearized_controllability_rank,
)
from .model import CraneParams, CraneState, NoiseSpec, state_derivative
from .simulation import integrate_states, rollout_boom_input, simulate

__all__ = [
    "AccessibilitySurvey",
    "CraneParams",
    "CraneState",
    "NoiseSpec",
    "accessibility_survey",
    "controllability_matrix",
    "det_formula",
    "integrate_states",
    "linearized_controllability_rank",
    "rollout_boom_input",
    "simulate",
    "state_derivative",
]
