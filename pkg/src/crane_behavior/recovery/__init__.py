"""Recovery, nonparametric simulation and trajectory generation."""

from .generation import assemble_generation_qp, generate_trajectory, trajectory_bounds
from .indirect import IndirectResult, indirect_generate
from .models import (
    GeneratedTrajectory,
    RecoveryProblem,
    RecoveryResult,
    SimulationSpec,
    TrajectoryGenSpec,
)
from .operators import (
    build_reference,
    build_total_variation_operator,
    endpoint_indices,
    rest_sample,
)
from .recover import nonparametric_simulate, recover

__all__ = [
    "GeneratedTrajectory",
    "IndirectResult",
    "RecoveryProblem",
    "RecoveryResult",
    "SimulationSpec",
    "TrajectoryGenSpec",
    "assemble_generation_qp",
    "build_reference",
    "build_total_variation_operator",
    "endpoint_indices",
    "generate_trajectory",
    "indirect_generate",
    "nonparametric_simulate",
    "recover",
    "rest_sample",
    "trajectory_bounds",
]
