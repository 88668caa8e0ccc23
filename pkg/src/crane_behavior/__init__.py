"""
Crane Behavior - data-driven slewing trajectories for a rotary crane.

Hankel-matrix behavior models are built from recorded crane data and used for
missing-data recovery, nonparametric simulation and sway-limited trajectory
generation, with a model-based waypoint planner as the benchmark.
"""

__version__ = "0.1.0"

from .behavior import BehaviorModel, IndexSet, Trajectory, build_hankel, truncate
from .channels import ChannelMode
from .config import RunConfig, config_hash, load_run_config
from .dynamics import CraneParams, CraneState, NoiseSpec, simulate
from .errors import (
    CraneBehaviorError,
    DegenerateNullspace,
    InfeasibleProblem,
    SolverMaxIterations,
    TuningError,
)
from .excitation import SumOfSinesSpec, generate_excitation
from .recovery import (
    RecoveryProblem,
    SimulationSpec,
    TrajectoryGenSpec,
    generate_trajectory,
    indirect_generate,
    nonparametric_simulate,
    recover,
)
from .solver import CompositeQP, SolverSettings, solve

__all__ = [
    "BehaviorModel",
    "ChannelMode",
    "CompositeQP",
    "CraneBehaviorError",
    "CraneParams",
    "CraneState",
    "DegenerateNullspace",
    "IndexSet",
    "InfeasibleProblem",
    "NoiseSpec",
    "RecoveryProblem",
    "RunConfig",
    "SimulationSpec",
    "SolverMaxIterations",
    "SolverSettings",
    "SumOfSinesSpec",
    "Trajectory",
    "TrajectoryGenSpec",
    "TuningError",
    "build_hankel",
    "config_hash",
    "generate_excitation",
    "generate_trajectory",
    "indirect_generate",
    "load_run_config",
    "nonparametric_simulate",
    "recover",
    "simulate",
    "solve",
    "truncate",
]
