"""A-posteriori optimality certificate for composite quadratic programs."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .problem import CompositeQP

ZERO_TOLERANCE = 1e-10


@dataclass(frozen=True, slots=True)
class KKTResidual:
    """Worst-case violations of the first-order optimality conditions.

    Attributes:
        primal: Largest equality residual or inequality excess.
        stationarity: Largest deviation of the gradient from the L1 subdifferential.
        dual_sign: Largest negative inequality multiplier.
        complementarity: Largest product of multiplier and slack.
    """

    primal: float
    stationarity: float
    dual_sign: float
    complementarity: float

    @property
    def worst(self) -> float:
        return max(self.primal, self.stationarity, self.dual_sign, self.complementarity)


def kkt_residual(
    problem: CompositeQP,
    g: np.ndarray,
    y_eq: Optional[np.ndarray] = None,
    y_in: Optional[np.ndarray] = None,
    *,
    zero_tolerance: float = ZERO_TOLERANCE,
) -> KKTResidual:
    """Measure how far ``(g, y_eq, y_in)`` is from satisfying the KKT conditions.

    Entries with ``|g_i| <= zero_tolerance`` are checked against the subgradient
    interval ``[-lam, lam]``; the rest against ``-lam * sign(g_i)``.
    """
    x = np.asarray(g, dtype=float)
    y_eq = np.zeros(problem.n_eq) if y_eq is None else np.asarray(y_eq, dtype=float)
    y_in = np.zeros(problem.n_in) if y_in is None else np.asarray(y_in, dtype=float)

    gradient = problem.P @ x + problem.q
    if problem.n_eq:
        gradient = gradient + problem.A_eq.T @ y_eq
    if problem.n_in:
        gradient = gradient + problem.A_in.T @ y_in

    zero = np.abs(x) <= zero_tolerance
    stationarity = np.where(
        zero,
        np.maximum(np.abs(gradient) - problem.lam, 0.0),
        np.abs(gradient + problem.lam * np.sign(x)),
    )

    primal = problem.constraint_violation(x)
    dual_sign = 0.0
    complementarity = 0.0
    if problem.n_in:
        slack = problem.A_in @ x - problem.b_in
        finite = np.isfinite(slack)
        dual_sign = float(np.max(-y_in, initial=0.0))
        complementarity = float(np.max(np.abs(y_in[finite] * slack[finite]), initial=0.0))
    return KKTResidual(
        primal=primal,
        stationarity=float(np.max(stationarity, initial=0.0)),
        dual_sign=dual_sign,
        complementarity=complementarity,
    )
