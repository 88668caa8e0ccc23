"""Composite quadratic programs and their splitting solver."""

from .admm import SplittingSolver, equilibrate, soft_threshold, solve
from .archive import load_problem, save_problem
from .assembly import BoxConstraint, WeightSpec, assemble_recovery_qp, box_rows, signed_selection
from .kkt import KKTResidual, kkt_residual
from .problem import CompositeQP, SolverReport, SolverSettings, SolverStatus

__all__ = [
    "BoxConstraint",
    "CompositeQP",
    "KKTResidual",
    "SolverReport",
    "SolverSettings",
    "SolverStatus",
    "SplittingSolver",
    "WeightSpec",
    "assemble_recovery_qp",
    "box_rows",
    "equilibrate",
    "kkt_residual",
    "load_problem",
    "save_problem",
    "signed_selection",
    "soft_threshold",
    "solve",
]
