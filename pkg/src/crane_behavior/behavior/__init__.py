"""Trajectory algebra and Hankel behavior models."""

from .hankel import (
    BehaviorModel,
    ThresholdMode,
    build_hankel,
    denoise_svd,
    hankel_block,
    hankel_from_matrix,
    identifiability_rank,
    keep_columns,
    numerical_rank,
    qr_pivots,
    select_columns_qr,
)
from .trajectory import IndexSet, Trajectory, truncate

__all__ = [
    "BehaviorModel",
    "IndexSet",
    "ThresholdMode",
    "Trajectory",
    "build_hankel",
    "denoise_svd",
    "hankel_block",
    "hankel_from_matrix",
    "identifiability_rank",
    "keep_columns",
    "numerical_rank",
    "qr_pivots",
    "select_columns_qr",
    "truncate",
]
