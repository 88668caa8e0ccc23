"""Nonlinear accessibility of the slewing crane.

The closed-form Lie-bracket matrix below stacks the input vector field and its
brackets with the drift up to order five. Its determinant only vanishes on a
measure-zero set, whereas the linearisation about the hanging equilibrium loses
rank.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

from .model import CraneParams, CraneState

LOGGER = logging.getLogger(__name__)

SINGULAR_TOLERANCE = 1e-10


def controllability_matrix(state: CraneState, params: CraneParams) -> np.ndarray:
    """Return the 6x6 Lie-bracket matrix at ``state`` (bracket order 0 to 5 by column)."""
    a = params.alpha1_squared
    b = params.alpha2
    theta2 = state.theta2
    dtheta2 = state.dtheta2
    dtheta4 = state.dtheta4
    d1 = 4.0 * dtheta2 - b * dtheta4
    d2 = 2.0 * dtheta2 - b * dtheta4
    return np.array(
        [
            [0.0, 0.0, 2.0 * dtheta2, -4.0 * a * theta2, -2.0 * a * d1, 16.0 * a * a * theta2],
            [
                0.0,
                -2.0 * dtheta2,
                2.0 * a * theta2,
                2.0 * a * d2,
                -8.0 * a * a * theta2,
                -4.0 * a * a * d1,
            ],
            [0.0, b, 0.0, -a * b, 0.0, a * a * b],
            [-b, 0.0, a * b, 0.0, -a * a * b, 0.0],
            [0.0, -1.0, 0.0, 0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        ]
    )


def det_formula(state: CraneState, params: CraneParams) -> float:
    """Closed-form determinant of :func:`controllability_matrix`."""
    a1 = params.alpha1
    a2 = params.alpha2
    bracket = (
        18.0 * params.alpha1_squared * state.theta2**2
        + a2**2 * state.dtheta4**2
        - 9.0 * a2 * state.dtheta2 * state.dtheta4
        + 18.0 * state.dtheta2**2
    )
    return 4.0 * a1**10 * a2**2 * bracket


def linearized_controllability_rank(params: CraneParams) -> int:
    """Kalman rank of the linearisation about the hanging equilibrium."""
    a = params.alpha1_squared
    A = np.zeros((6, 6))
    A[0:3, 3:6] = np.eye(3)
    A[3, 0] = -a
    A[4, 1] = -a
    b = np.array([0.0, 0.0, 0.0, 0.0, -params.alpha2, 1.0])
    columns = [b]
    for _ in range(5):
        columns.append(A @ columns[-1])
    return int(np.linalg.matrix_rank(np.column_stack(columns)))


@dataclass(frozen=True, slots=True)
class AccessibilitySurvey:
    """Statistics of the Lie-bracket determinant over random states."""

    n_states: int
    min_abs_det: float
    median_abs_det: float
    max_abs_det: float
    max_relative_mismatch: float
    near_singular_fraction: float
    singular_set_det: float
    singular_set_vanishes: bool
    linearized_rank: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_states": self.n_states,
            "min_abs_det": self.min_abs_det,
            "median_abs_det": self.median_abs_det,
            "max_abs_det": self.max_abs_det,
            "max_relative_mismatch": self.max_relative_mismatch,
            "near_singular_fraction": self.near_singular_fraction,
            "singular_set_det": self.singular_set_det,
            "singular_set_vanishes": self.singular_set_vanishes,
            "linearized_rank": self.linearized_rank,
        }


def accessibility_survey(
    n_states: int,
    params: CraneParams,
    *,
    seed: int = 0,
    scale: float = 1.0,
    singular_threshold: float = 1e-6,
) -> AccessibilitySurvey:
    """Compare both determinant forms on uniformly drawn states in ``[-scale, scale]^6``."""
    if n_states < 1:
        raise ValueError("n_states must be at least 1")
    rng = np.random.default_rng(seed)
    draws = rng.uniform(-scale, scale, size=(n_states, 6))
    numeric = np.empty(n_states)
    closed = np.empty(n_states)
    for i, row in enumerate(draws):
        state = CraneState.from_array(row)
        numeric[i] = np.linalg.det(controllability_matrix(state, params))
        closed[i] = det_formula(state, params)
    mismatch = np.abs(numeric - closed) / np.maximum(np.abs(closed), np.finfo(float).tiny)

    singular_state = CraneState(
        theta1=float(draws[0, 0]), theta4=float(draws[0, 2]), dtheta1=float(draws[0, 3])
    )
    singular_det = float(np.linalg.det(controllability_matrix(singular_state, params)))
    magnitudes = np.abs(numeric)
    survey = AccessibilitySurvey(
        n_states=n_states,
        min_abs_det=float(magnitudes.min()),
        median_abs_det=float(np.median(magnitudes)),
        max_abs_det=float(magnitudes.max()),
        max_relative_mismatch=float(mismatch.max()),
        near_singular_fraction=float(np.mean(magnitudes <= singular_threshold * magnitudes.max())),
        singular_set_det=singular_det,
        singular_set_vanishes=abs(singular_det) <= SINGULAR_TOLERANCE,
        linearized_rank=linearized_controllability_rank(params),
    )
    LOGGER.info(
        "accessibility survey over %d states: min |det| %.3e, mismatch %.2e",
        n_states,
        survey.min_abs_det,
        survey.max_relative_mismatch,
    )
    return survey
