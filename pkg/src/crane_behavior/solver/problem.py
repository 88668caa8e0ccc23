"""Problem and report containers for the composite quadratic program.

The problem reads::

    minimize    1/2 g'Pg + q'g + lam * ||g||_1 + offset
    subject to  A_eq g == b_eq
                A_in g <= b_in
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

import numpy as np

from ..errors import DimensionMismatch, InfeasibleProblem

SYMMETRY_TOLERANCE = 1e-10


def _as_matrix(value: Optional[np.ndarray], n: int) -> np.ndarray:
    if value is None:
        return np.zeros((0, n))
    matrix = np.array(value, dtype=float)
    if matrix.ndim == 1 and matrix.size == n:
        matrix = matrix.reshape(1, n)
    if matrix.ndim != 2:
        raise DimensionMismatch("constraint matrices must be 2-D")
    return matrix


def _as_vector(value: Optional[np.ndarray]) -> np.ndarray:
    if value is None:
        return np.zeros(0)
    return np.array(value, dtype=float).ravel()


@dataclass(frozen=True, slots=True, eq=False)
class CompositeQP:
    """Quadratic plus L1 objective with linear equality and inequality constraints."""

    P: np.ndarray
    q: np.ndarray
    lam: float = 0.0
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    A_in: Optional[np.ndarray] = None
    b_in: Optional[np.ndarray] = None
    offset: float = 0.0

    def __post_init__(self) -> None:
        P = np.array(self.P, dtype=float)
        q = np.array(self.q, dtype=float).ravel()
        n = q.size
        if P.shape != (n, n):
            raise DimensionMismatch(f"P has shape {P.shape}, expected ({n}, {n})")
        scale = max(float(np.max(np.abs(P))) if P.size else 0.0, 1.0)
        if P.size and float(np.max(np.abs(P - P.T))) > SYMMETRY_TOLERANCE * scale:
            raise ValueError("P must be symmetric")
        P = 0.5 * (P + P.T)
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        A_eq, b_eq = _as_matrix(self.A_eq, n), _as_vector(self.b_eq)
        A_in, b_in = _as_matrix(self.A_in, n), _as_vector(self.b_in)
        for name, A, b in (("equality", A_eq, b_eq), ("inequality", A_in, b_in)):
            if A.shape[1] != n or A.shape[0] != b.size:
                raise DimensionMismatch(
                    f"{name} block has shape {A.shape} with {b.size} right-hand sides for n={n}"
                )
        for name, value in (("P", P), ("q", q), ("A_eq", A_eq), ("b_eq", b_eq), ("A_in", A_in)):
            if not np.all(np.isfinite(value)):
                raise ValueError(f"{name} must be finite")
        if np.any(np.isnan(b_in)):
            raise ValueError("b_in must not contain NaN")
        arrays = {"P": P, "q": q, "A_eq": A_eq, "b_eq": b_eq, "A_in": A_in, "b_in": b_in}
        for name, value in arrays.items():
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def n(self) -> int:
        return self.q.size

    @property
    def n_eq(self) -> int:
        return self.b_eq.size

    @property
    def n_in(self) -> int:
        return self.b_in.size

    def objective(self, g: np.ndarray) -> float:
        x = np.asarray(g, dtype=float)
        return float(0.5 * x @ self.P @ x + self.q @ x + self.lam * np.sum(np.abs(x)) + self.offset)

    def constraint_violation(self, g: np.ndarray) -> float:
        x = np.asarray(g, dtype=float)
        worst = 0.0
        if self.n_eq:
            worst = max(worst, float(np.max(np.abs(self.A_eq @ x - self.b_eq))))
        if self.n_in:
            worst = max(worst, float(np.max(self.A_in @ x - self.b_in, initial=0.0)))
        return worst


class SolverStatus(str, Enum):
    """Termination states of the solver."""

    OPTIMAL = "optimal"
    MAX_ITERS = "max-iters"
    INFEASIBLE = "infeasible"


@dataclass(slots=True)
class SolverSettings:
    """Tuning knobs of the splitting solver.

    Attributes:
        eps_abs: Absolute tolerance on residuals and on the optimality certificate.
        eps_rel: Relative tolerance on residuals and on the optimality certificate.
        max_iters: Iteration cap.
        rho: Initial penalty for inequality and L1 rows.
        rho_eq_scale: Penalty multiplier for equality rows.
        sigma: Proximal regularisation of the linear system.
        alpha: Over-relaxation factor in (0, 2).
        scaling_iters: Ruiz equilibration passes; 0 disables scaling.
        adaptive_rho: Rebalance the penalty from the residual ratio.
        adaptive_rho_interval: Iterations between penalty updates.
        check_every: Iterations between termination checks.
        eps_pinf: Tolerance of the primal infeasibility certificate.
        polish: Try an active-set refinement of ADMM iterates.
        polish_interval: Iterations before the first refinement attempt; doubles on rejection.
        polish_delta: Regularisation of the refinement system.
        refine_iters: Iterative refinement steps of the refinement solve.
        polish_passes: Active-set updates per refinement attempt.
        max_tightenings: Times a converged but uncertified run may tighten its tolerances.
        log_every: Iterations between debug log lines.
    """

    eps_abs: float = 1e-8
    eps_rel: float = 1e-6
    max_iters: int = 200_000
    rho: float = 0.1
    rho_eq_scale: float = 1e3
    sigma: float = 1e-6
    alpha: float = 1.6
    scaling_iters: int = 10
    adaptive_rho: bool = True
    adaptive_rho_interval: int = 25
    check_every: int = 10
    eps_pinf: float = 1e-5
    polish: bool = True
    polish_interval: int = 200
    polish_delta: float = 1e-9
    refine_iters: int = 5
    polish_passes: int = 10
    max_tightenings: int = 3
    log_every: int = 5000

    def __post_init__(self) -> None:
        if self.eps_abs < 0 or self.eps_rel < 0:
            raise ValueError("tolerances must be non-negative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not 0 < self.alpha < 2:
            raise ValueError("alpha must be in (0, 2)")
        if self.rho <= 0 or self.sigma <= 0:
            raise ValueError("rho and sigma must be positive")
        if self.polish_passes < 1 or self.max_tightenings < 0:
            raise ValueError("polish_passes must be positive and max_tightenings non-negative")


@dataclass(slots=True)
class SolverReport:
    """Outcome of a solve; residuals always refer to the returned point."""

    g: np.ndarray
    status: SolverStatus
    primal_residual: float
    dual_residual: float
    iterations: int
    objective: float
    y_eq: np.ndarray = field(default_factory=lambda: np.zeros(0))
    y_in: np.ndarray = field(default_factory=lambda: np.zeros(0))
    polished: bool = False
    kkt: Optional[float] = None
    solve_seconds: float = 0.0

    @property
    def optimal(self) -> bool:
        return self.status is SolverStatus.OPTIMAL

    def require_feasible(self) -> "SolverReport":
        if self.status is SolverStatus.INFEASIBLE:
            raise InfeasibleProblem(
                f"problem is infeasible (primal residual {self.primal_residual:.3e})", self
            )
        return self

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": self.status.value,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "iterations": self.iterations,
            "objective": self.objective,
            "polished": self.polished,
            "kkt_residual": self.kkt,
            "solve_seconds": round(self.solve_seconds, 6),
            "n": int(self.g.size),
            "nnz": int(np.count_nonzero(self.g)),
        }
