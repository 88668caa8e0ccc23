"""Missing-data recovery and nonparametric simulation."""
from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from ..behavior.hankel import BehaviorModel
from ..errors import DimensionMismatch, InfeasibleProblem, SolverMaxIterations
from ..solver.admm import SplittingSolver
from ..solver.assembly import BoxConstraint, WeightSpec, assemble_recovery_qp
from ..solver.problem import SolverSettings, SolverStatus
from .models import RecoveryProblem, RecoveryResult, SimulationSpec

LOGGER = logging.getLogger(__name__)


def recover(problem: RecoveryProblem, settings: Optional[SolverSettings] = None) -> RecoveryResult:
    """Fit the known elements with a sparse combination of model columns.

    Returns:
        Coefficients ``g``, the full window ``M g`` and the solver report.
    """
    qp = assemble_recovery_qp(
        problem.model,
        problem.known_idx,
        problem.known_vals,
        weights=problem.weights,
        lam=problem.lam,
    )
    report = SplittingSolver(settings).solve(qp).require_feasible()
    return RecoveryResult(g=report.g, w_hat=problem.model.predict(report.g), report=report)


def nonparametric_simulate(
    model: BehaviorModel,
    spec: SimulationSpec,
    lam: float = 0.0,
    settings: Optional[SolverSettings] = None,
) -> RecoveryResult:
    """Predict the outputs that follow ``spec.initial`` under ``spec.inputs``.

    Every known element is matched in the least-squares sense and additionally kept
    within ``spec.epsilon`` of its value. The solver starts from the minimum-norm
    least-squares fit of the known elements.

    Raises:
        InfeasibleProblem: If no model window stays within ``epsilon`` of the data.
        SolverMaxIterations: If the solver stops with a known element further than
            ``epsilon`` from its value.
    """
    if spec.depth != model.depth:
        raise DimensionMismatch(
            f"simulation spans {spec.depth} samples, model depth is {model.depth}"
        )
    idx, values = spec.known(model.q, model.m)
    box = BoxConstraint(idx, values - spec.epsilon, values + spec.epsilon)
    qp = assemble_recovery_qp(model, idx, values, weights=WeightSpec(), lam=lam, boxes=box)
    start = np.linalg.lstsq(model.matrix[idx.indices], values, rcond=None)[0]
    solver = SplittingSolver(settings)
    report = solver.solve(qp, warm_start=start)
    if report.status is SolverStatus.INFEASIBLE:
        raise InfeasibleProblem(
            f"no model window matches the initial samples and inputs within {spec.epsilon:g}",
            report,
        )
    w_hat = model.predict(report.g)
    deviation = float(np.max(np.abs(w_hat.data[idx.indices] - values)))
    slack = max(solver.settings.eps_abs, solver.settings.eps_rel)
    if deviation > spec.epsilon + slack:
        raise SolverMaxIterations(
            f"solver stopped ({report.status.value}) with a known element {deviation:.3e} "
            f"from its value, tolerance {spec.epsilon:g}",
            report,
        )
    if not report.optimal:
        LOGGER.warning(
            "nonparametric simulation returned an uncertified point after %d iterations "
            "(largest deviation on known elements %.2e)",
            report.iterations,
            deviation,
        )
    else:
        LOGGER.debug(
            "nonparametric simulation: largest deviation on known elements %.2e", deviation
        )
    return RecoveryResult(g=report.g, w_hat=w_hat, report=report)
