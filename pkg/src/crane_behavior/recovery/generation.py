"""Optimal rest-to-rest trajectory generation from a behavior model."""
from __future__ import annotations

import logging
from typing import List, Optional

import numpy as np

from ..behavior.hankel import BehaviorModel
from ..behavior.trajectory import IndexSet, truncate
from ..channels import SWAY_CHANNELS
from ..errors import DimensionMismatch, InfeasibleProblem, SolverMaxIterations
from ..solver.admm import SplittingSolver
from ..solver.assembly import BoxConstraint, assemble_recovery_qp
from ..solver.problem import CompositeQP, SolverSettings, SolverStatus
from .models import GeneratedTrajectory, TrajectoryGenSpec
from .operators import build_reference, build_total_variation_operator, endpoint_indices

LOGGER = logging.getLogger(__name__)

ENDPOINT_TOLERANCE = 1e-6


def _channel_box(model: BehaviorModel, name: str, bound: float) -> BoxConstraint:
    position = model.channel_names.index(name)
    idx = IndexSet.channels(range(model.depth), [position], model.q)
    return BoxConstraint.symmetric(idx, bound)


def trajectory_bounds(model: BehaviorModel, spec: TrajectoryGenSpec) -> List[BoxConstraint]:
    """Input, sway and optional boom-velocity bounds on every sample."""
    input_name = model.channel_names[0]
    boxes = [_channel_box(model, input_name, spec.input_bound)]
    boxes.extend(_channel_box(model, name, spec.sway_bound) for name in SWAY_CHANNELS)
    if spec.velocity_bound is not None and "dtheta4" in model.channel_names[model.m :]:
        boxes.append(_channel_box(model, "dtheta4", spec.velocity_bound))
    return boxes


def assemble_generation_qp(model: BehaviorModel, spec: TrajectoryGenSpec) -> CompositeQP:
    """Composite QP of the trajectory-generation cost with endpoint and bound constraints."""
    if model.depth != spec.depth:
        raise DimensionMismatch(f"model depth {model.depth} does not match L = {spec.depth}")
    reference = build_reference(model, spec)
    known, pinned = endpoint_indices(spec, model.q)
    difference = (
        build_total_variation_operator(model, spec.tv_channels) if spec.sigma > 0 else None
    )
    return assemble_recovery_qp(
        model,
        known,
        truncate(reference, known),
        weights=spec.weights,
        lam=spec.lam,
        mu=spec.mu,
        sigma=spec.sigma,
        w_ref=reference.data,
        difference_operator=difference,
        eq_idx=pinned,
        eq_vals=truncate(reference, pinned),
        boxes=trajectory_bounds(model, spec),
    )


def generate_trajectory(
    model: BehaviorModel,
    spec: TrajectoryGenSpec,
    settings: Optional[SolverSettings] = None,
) -> GeneratedTrajectory:
    """Generate a bounded, smooth slewing trajectory between two rest positions.

    The first and last samples are pinned to the rest samples, the first and last
    ``n_given`` samples are fitted, and the whole window is pulled towards the
    step reference.

    The solver starts from the minimum-norm window that meets the pinned samples.

    Raises:
        InfeasibleProblem: If the bounds cannot be met by any model window.
        SolverMaxIterations: If the returned window misses a pinned sample by more
            than ``ENDPOINT_TOLERANCE``.
    """
    qp = assemble_generation_qp(model, spec)
    reference = build_reference(model, spec)
    _, pinned = endpoint_indices(spec, model.q)
    pinned_values = truncate(reference, pinned)
    start = np.linalg.lstsq(model.matrix[pinned.indices], pinned_values, rcond=None)[0]
    report = SplittingSolver(settings).solve(qp, warm_start=start)
    if report.status is SolverStatus.INFEASIBLE:
        raise InfeasibleProblem(
            "bounds are too tight for the behaviors captured by the model", report
        )
    w_hat = model.predict(report.g)
    endpoint_residual = float(np.max(np.abs(truncate(w_hat, pinned) - pinned_values)))
    if endpoint_residual > ENDPOINT_TOLERANCE:
        raise SolverMaxIterations(
            f"generated window misses the rest samples by {endpoint_residual:.3e} "
            f"({report.status.value} after {report.iterations} iterations)",
            report,
        )
    if not report.optimal:
        LOGGER.warning(
            "trajectory returned without an optimality certificate after %d iterations",
            report.iterations,
        )
    inputs = w_hat.input_values()[:, 0].copy()
    LOGGER.info(
        "generated trajectory %.4f -> %.4f rad: %s, endpoint residual %.2e",
        spec.theta4_start,
        spec.theta4_target,
        report.status.value,
        endpoint_residual,
    )
    return GeneratedTrajectory(
        g=report.g,
        w_hat=w_hat,
        report=report,
        reference=reference,
        inputs=inputs,
        endpoint_residual=endpoint_residual,
    )
