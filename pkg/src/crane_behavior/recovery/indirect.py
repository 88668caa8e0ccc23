"""Closed-form generation over the affine set of consistent trajectories.

For a noise-free Hankel model every window that matches the known elements is
``w_p + N beta``, where ``w_p`` is one matching window and the columns of ``N`` span
``H null(H_I)``. The window closest to a reference is then a projection.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ..behavior.hankel import RANK_TOLERANCE, BehaviorModel
from ..behavior.trajectory import IndexSet, Trajectory, truncate
from ..errors import DegenerateNullspace, DimensionMismatch

LOGGER = logging.getLogger(__name__)


@dataclass(slots=True)
class IndirectResult:
    """Projection of the reference onto the consistent trajectories."""

    w_hat: Trajectory
    w_particular: np.ndarray
    basis: np.ndarray
    beta: np.ndarray


def indirect_generate(
    model: BehaviorModel,
    known_idx: IndexSet,
    known_vals: np.ndarray,
    w_ref: np.ndarray,
) -> IndirectResult:
    """Project ``w_ref`` onto the windows of ``model`` that match the known elements.

    Raises:
        DegenerateNullspace: If the known elements determine the window uniquely.
    """
    H = model.matrix
    values = np.asarray(known_vals, dtype=float).ravel()
    reference = np.asarray(w_ref, dtype=float).ravel()
    if values.size != len(known_idx):
        raise DimensionMismatch(f"{len(known_idx)} known indices but {values.size} values")
    if reference.size != model.n_rows:
        raise DimensionMismatch(
            f"reference has {reference.size} elements, expected {model.n_rows}"
        )
    if not model.is_hankel:
        LOGGER.warning("indirect generation assumes an exact Hankel model")

    H_known = truncate(H, known_idx)
    g_particular, *_ = np.linalg.lstsq(H_known, values, rcond=None)
    w_particular = H @ g_particular
    kernel = scipy.linalg.null_space(H_known, rcond=RANK_TOLERANCE)
    if kernel.shape[1] == 0:
        raise DegenerateNullspace("the known elements leave no free coefficients")
    U, s, _ = scipy.linalg.svd(H @ kernel, full_matrices=False)
    scale = scipy.linalg.svdvals(H)[0] if H.size else 0.0
    basis = U[:, s > RANK_TOLERANCE * scale]
    if basis.shape[1] == 0:
        raise DegenerateNullspace("free coefficients do not move the trajectory")
    beta = basis.T @ (reference - w_particular)
    w_hat = w_particular + basis @ beta
    LOGGER.debug("indirect generation over a %d-dimensional affine set", basis.shape[1])
    return IndirectResult(
        w_hat=model.trajectory(w_hat),
        w_particular=w_particular,
        basis=basis,
        beta=beta,
    )
