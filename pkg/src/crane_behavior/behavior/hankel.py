"""Hankel-matrix behavior models.

Each column of a model is a length-``L`` window of recorded data, flattened
sample-major. Linear combinations of the columns span the windows the system can
produce once the identifiability rank condition holds. Column selection and
singular-value truncation trade that structure for compactness and noise rejection.
"""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterable, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from ..errors import ChannelMismatch, DimensionMismatch, TooShort
from .trajectory import Trajectory

LOGGER = logging.getLogger(__name__)

RANK_TOLERANCE = 1e-10
COLUMN_RULE_OF_THUMB = 15.0


class ThresholdMode(str, Enum):
    """How the singular-value threshold is interpreted."""

    RELATIVE = "relative"
    ABSOLUTE = "absolute"


@dataclass(frozen=True, slots=True, eq=False)
class BehaviorModel:
    """Trajectory matrix of depth ``L`` plus the metadata needed to interpret it."""

    matrix: np.ndarray
    depth: int
    q: int
    m: int
    rate: float
    channel_names: Tuple[str, ...]
    is_hankel: bool = True
    columns_kept: Optional[int] = None
    delta: Optional[float] = None
    threshold_mode: ThresholdMode = ThresholdMode.RELATIVE
    retained_rank: Optional[int] = None

    def __post_init__(self) -> None:
        matrix = np.array(self.matrix, dtype=float)
        if matrix.ndim != 2:
            raise DimensionMismatch("behavior matrix must be 2-D")
        if matrix.shape[0] != self.q * self.depth:
            raise DimensionMismatch(
                f"matrix has {matrix.shape[0]} rows, expected q*L = {self.q * self.depth}"
            )
        if matrix.shape[1] < 1:
            raise DimensionMismatch("behavior matrix needs at least one column")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("behavior matrix must be finite")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "channel_names", tuple(self.channel_names))
        object.__setattr__(self, "threshold_mode", ThresholdMode(self.threshold_mode))

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_columns(self) -> int:
        return self.matrix.shape[1]

    @property
    def columns_per_row(self) -> float:
        return self.n_columns / self.n_rows

    def trajectory(self, data: np.ndarray) -> Trajectory:
        """Wrap a flat length-``qL`` vector with this model's channel layout."""
        return Trajectory(
            np.asarray(data, dtype=float), self.q, self.m, self.rate, self.channel_names
        )

    def predict(self, g: np.ndarray) -> Trajectory:
        return self.trajectory(self.matrix @ np.asarray(g, dtype=float))

    def fit(self, w: np.ndarray) -> Tuple[np.ndarray, float]:
        """Least-squares coefficients for ``w`` and the residual norm."""
        target = np.asarray(w, dtype=float).ravel()
        if target.size != self.n_rows:
            raise DimensionMismatch(f"expected a length-{self.n_rows} vector, got {target.size}")
        g, *_ = np.linalg.lstsq(self.matrix, target, rcond=None)
        return g, float(np.linalg.norm(self.matrix @ g - target))

    def channel_rows(self, name: str) -> np.ndarray:
        """Row positions of one channel across all ``L`` samples."""
        position = self.channel_names.index(name)
        return np.arange(self.depth) * self.q + position

    def sidecar(self) -> dict[str, Any]:
        return {
            "L": self.depth,
            "q": self.q,
            "m": self.m,
            "rate": self.rate,
            "nu": self.columns_kept,
            "delta": self.delta,
            "threshold_mode": self.threshold_mode.value,
            "retained_rank": self.retained_rank,
            "is_hankel": self.is_hankel,
            "channel_names": list(self.channel_names),
            "n_columns": self.n_columns,
        }


def hankel_block(trajectory: Trajectory, depth: int) -> np.ndarray:
    """Columns are the flattened windows starting at each sample."""
    if trajectory.n_samples < depth:
        raise TooShort(
            f"trajectory has {trajectory.n_samples} samples, depth {depth} requested"
        )
    q = trajectory.q
    windows = np.lib.stride_tricks.sliding_window_view(trajectory.data, q * depth)[::q]
    return np.ascontiguousarray(windows.T)


def build_hankel(trajectories: Trajectory | Sequence[Trajectory], depth: int) -> BehaviorModel:
    """Build a (mosaic) Hankel model from one or more recordings.

    Raises:
        TooShort: If any recording has fewer than ``depth`` samples.
        ChannelMismatch: If the recordings disagree on layout or rate.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    items = [trajectories] if isinstance(trajectories, Trajectory) else list(trajectories)
    if not items:
        raise ValueError("at least one trajectory is required")
    first = items[0]
    for other in items[1:]:
        if not first.layout_matches(other):
            raise ChannelMismatch("all trajectories must share channels, inputs and rate")
    matrix = np.hstack([hankel_block(item, depth) for item in items])
    model = BehaviorModel(matrix, depth, first.q, first.m, first.rate, first.channel_names)
    LOGGER.info(
        "built Hankel model: %d x %d from %d sequence(s), %.1f columns per row",
        model.n_rows,
        model.n_columns,
        len(items),
        model.columns_per_row,
    )
    if model.columns_per_row < COLUMN_RULE_OF_THUMB:
        LOGGER.warning(
            "only %.1f columns per row; about %.0f are recommended for noisy data",
            model.columns_per_row,
            COLUMN_RULE_OF_THUMB,
        )
    return model


def numerical_rank(matrix: np.ndarray, tolerance: float = RANK_TOLERANCE) -> int:
    singular = scipy.linalg.svdvals(matrix)
    if singular.size == 0 or singular[0] == 0.0:
        return 0
    return int(np.count_nonzero(singular > tolerance * singular[0]))


def identifiability_rank(model: BehaviorModel, n_hypothesis: int) -> Tuple[int, bool]:
    """Numerical rank and whether it equals ``m * L + n_hypothesis``."""
    if not model.is_hankel:
        LOGGER.warning("rank condition checked on a model that is no longer Hankel")
    rank = numerical_rank(model.matrix)
    expected = model.m * model.depth + n_hypothesis
    satisfied = rank == expected
    log = LOGGER.info if satisfied else LOGGER.warning
    log("identifiability rank %d (m*L + n = %d)", rank, expected)
    return rank, satisfied


def qr_pivots(model: BehaviorModel) -> np.ndarray:
    """Column order of a rank-revealing QR factorisation."""
    _, pivots = scipy.linalg.qr(model.matrix, mode="r", pivoting=True)
    return np.asarray(pivots)


def keep_columns(model: BehaviorModel, columns: Iterable[int], nu: int) -> BehaviorModel:
    """Keep ``columns`` (already ordered by priority) and tag the model with ``nu``."""
    chosen = np.asarray(list(columns), dtype=np.int64)
    return dataclasses.replace(
        model,
        matrix=model.matrix[:, chosen],
        is_hankel=False,
        columns_kept=nu,
    )


def select_columns_qr(
    model: BehaviorModel, nu: int, pivots: Optional[np.ndarray] = None
) -> BehaviorModel:
    """Keep the ``nu`` most informative columns in pivot order.

    Args:
        model: Source model.
        nu: Number of columns to keep; capped at the column count.
        pivots: Precomputed :func:`qr_pivots`, reused across grid cells.
    """
    if nu < 1:
        raise ValueError("nu must be at least 1")
    order = qr_pivots(model) if pivots is None else np.asarray(pivots)
    return keep_columns(model, order[: min(nu, model.n_columns)], nu)


def denoise_svd(
    model: BehaviorModel,
    delta: float,
    mode: ThresholdMode | str = ThresholdMode.RELATIVE,
) -> BehaviorModel:
    """Zero the singular values below the threshold and rebuild the matrix.

    In relative mode the threshold is ``delta * sigma_max`` and ``delta`` must lie in
    ``[0, 1)``; in absolute mode ``delta`` is used as is. ``delta == 0`` returns the
    matrix untouched.
    """
    mode = ThresholdMode(mode)
    if mode is ThresholdMode.RELATIVE and not 0 <= delta < 1:
        raise ValueError("delta must be in [0, 1)")
    if mode is ThresholdMode.ABSOLUTE and delta < 0:
        raise ValueError("delta must be non-negative")
    if delta == 0:
        return dataclasses.replace(model, delta=0.0, threshold_mode=mode)
    u, singular, vt = scipy.linalg.svd(model.matrix, full_matrices=False)
    threshold = delta * singular[0] if mode is ThresholdMode.RELATIVE else delta
    kept = singular >= threshold
    rank = int(np.count_nonzero(kept))
    rebuilt = (u[:, kept] * singular[kept]) @ vt[kept]
    LOGGER.debug("SVD truncation kept %d of %d singular values", rank, singular.size)
    return dataclasses.replace(
        model,
        matrix=rebuilt,
        is_hankel=False,
        delta=float(delta),
        threshold_mode=mode,
        retained_rank=rank,
    )


def hankel_from_matrix(
    matrix: np.ndarray,
    depth: int,
    *,
    m: int,
    rate: float,
    channel_names: Sequence[str],
    is_hankel: bool = False,
) -> BehaviorModel:
    """Validate a raw trajectory matrix and wrap it as a model."""
    names = tuple(channel_names)
    if depth < 1:
        raise ValueError("depth must be at least 1")
    return BehaviorModel(
        np.asarray(matrix, dtype=float),
        depth,
        len(names),
        m,
        rate,
        names,
        is_hankel=is_hankel,
    )
