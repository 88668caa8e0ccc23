"""Expansion of weighted behavior-fitting costs into :class:`CompositeQP` form.

The cost being expanded is::

    ||w_I - H_I g||_W^2 + mu ||w_ref - H g||_R^2 + sigma ||D H g||^2 + lam ||g||_1

where ``H_I`` keeps the rows of the known elements, ``W`` and ``R`` are diagonal and
``D`` is a difference operator acting on trajectories.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..behavior.hankel import BehaviorModel
from ..behavior.trajectory import IndexSet, truncate
from ..errors import DimensionMismatch
from .problem import CompositeQP


@dataclass(frozen=True, slots=True, eq=False)
class WeightSpec:
    """Diagonal weights; ``None`` means identity."""

    W: Optional[np.ndarray] = None
    R: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        for name in ("W", "R"):
            value = getattr(self, name)
            if value is None:
                continue
            array = np.array(value, dtype=float).ravel()
            if np.any(array < 0) or not np.all(np.isfinite(array)):
                raise ValueError(f"{name} weights must be finite and non-negative")
            object.__setattr__(self, name, array)

    @classmethod
    def uniform(cls, known_weight: float = 1.0, reference_weight: float = 1.0) -> "WeightSpec":
        """Scalar weights broadcast to every element."""
        return cls(np.array([known_weight]), np.array([reference_weight]))

    def known(self, size: int) -> np.ndarray:
        return _diagonal(self.W, size, "W")

    def reference(self, size: int) -> np.ndarray:
        return _diagonal(self.R, size, "R")


def _diagonal(weights: Optional[np.ndarray], size: int, name: str) -> np.ndarray:
    if weights is None:
        return np.ones(size)
    if weights.size == 1:
        return np.full(size, float(weights[0]))
    if weights.size != size:
        raise DimensionMismatch(f"{name} has {weights.size} entries, residual has {size}")
    return weights


@dataclass(frozen=True, slots=True, eq=False)
class BoxConstraint:
    """Elementwise bounds ``lower <= (H g)[idx] <= upper``; infinite sides are dropped."""

    idx: IndexSet
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        size = len(self.idx)
        lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (size,)).copy()
        upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (size,)).copy()
        if np.any(lower > upper):
            raise ValueError("lower bounds must not exceed upper bounds")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def symmetric(cls, idx: IndexSet, bound: float | np.ndarray) -> "BoxConstraint":
        magnitude = np.abs(np.asarray(bound, dtype=float))
        return cls(idx, -magnitude, magnitude)


def signed_selection(idx: IndexSet, signs: np.ndarray, size: int) -> np.ndarray:
    """Matrix whose row ``r`` picks element ``idx[r]`` with sign ``signs[r]``."""
    idx.check(size)
    signs = np.broadcast_to(np.asarray(signs, dtype=float), (len(idx),))
    matrix = np.zeros((len(idx), size))
    matrix[np.arange(len(idx)), idx.indices] = signs
    return matrix


def box_rows(H: np.ndarray, box: BoxConstraint) -> Tuple[np.ndarray, np.ndarray]:
    """Paired inequality rows ``S H g <= b`` for a box on selected trajectory elements."""
    size = H.shape[0]
    n = len(box.idx)
    selection = np.vstack(
        [signed_selection(box.idx, np.ones(n), size), signed_selection(box.idx, -np.ones(n), size)]
    )
    bounds = np.concatenate([box.upper, -box.lower])
    keep = np.isfinite(bounds)
    return selection[keep] @ H, bounds[keep]


def assemble_recovery_qp(
    model: BehaviorModel,
    known_idx: IndexSet,
    known_vals: np.ndarray,
    weights: Optional[WeightSpec] = None,
    lam: float = 0.0,
    mu: float = 0.0,
    sigma: float = 0.0,
    w_ref: Optional[np.ndarray] = None,
    difference_operator: Optional[np.ndarray] = None,
    eq_idx: Optional[IndexSet] = None,
    eq_vals: Optional[np.ndarray] = None,
    boxes: Optional[BoxConstraint | list[BoxConstraint]] = None,
) -> CompositeQP:
    """Build the composite QP of a weighted recovery or trajectory-generation cost.

    Args:
        model: Behavior model ``H``.
        known_idx: Rows of the known elements.
        known_vals: Values of the known elements.
        weights: Diagonal ``W`` (known residual) and ``R`` (reference residual).
        lam: L1 weight.
        mu: Reference-tracking weight; requires ``w_ref`` when positive.
        sigma: Weight of the difference penalty; requires ``difference_operator``.
        w_ref: Full-length reference trajectory.
        difference_operator: Matrix ``D`` with ``qL`` columns.
        eq_idx: Elements pinned exactly.
        eq_vals: Values of the pinned elements.
        boxes: Bounds on trajectory elements, turned into paired inequality rows.

    Raises:
        DimensionMismatch: On inconsistent sizes.
    """
    weights = weights or WeightSpec()
    if mu < 0 or sigma < 0:
        raise ValueError("mu and sigma must be non-negative")
    H = model.matrix
    rows, n = H.shape
    known_vals = np.asarray(known_vals, dtype=float).ravel()
    if known_vals.size != len(known_idx):
        raise DimensionMismatch(f"{len(known_idx)} known indices but {known_vals.size} values")
    known_idx.check(rows)

    H_known = truncate(H, known_idx)
    W = weights.known(len(known_idx))
    P = H_known.T @ (W[:, None] * H_known)
    linear = H_known.T @ (W * known_vals)
    offset = float(known_vals @ (W * known_vals))

    if mu > 0:
        if w_ref is None:
            raise DimensionMismatch("mu > 0 needs a reference trajectory")
        reference = np.asarray(w_ref, dtype=float).ravel()
        if reference.size != rows:
            raise DimensionMismatch(f"reference has {reference.size} elements, expected {rows}")
        R = weights.reference(rows)
        P = P + mu * (H.T @ (R[:, None] * H))
        linear = linear + mu * (H.T @ (R * reference))
        offset += mu * float(reference @ (R * reference))

    if sigma > 0:
        if difference_operator is None:
            raise DimensionMismatch("sigma > 0 needs a difference operator")
        D = np.asarray(difference_operator, dtype=float)
        if D.ndim != 2 or D.shape[1] != rows:
            raise DimensionMismatch(f"difference operator must have {rows} columns")
        DH = D @ H
        P = P + sigma * (DH.T @ DH)

    A_eq = b_eq = None
    if eq_idx is not None and len(eq_idx):
        eq_vals = np.asarray(eq_vals, dtype=float).ravel() if eq_vals is not None else None
        if eq_vals is None or eq_vals.size != len(eq_idx):
            raise DimensionMismatch("equality values must match the equality index set")
        A_eq = truncate(H, eq_idx)
        b_eq = eq_vals

    A_in = b_in = None
    box_list = [boxes] if isinstance(boxes, BoxConstraint) else list(boxes or [])
    if box_list:
        blocks = [box_rows(H, box) for box in box_list]
        A_in = np.vstack([block[0] for block in blocks])
        b_in = np.concatenate([block[1] for block in blocks])

    return CompositeQP(
        P=2.0 * P,
        q=-2.0 * linear,
        lam=lam,
        A_eq=A_eq,
        b_eq=b_eq,
        A_in=A_in if A_in is not None else np.zeros((0, n)),
        b_in=b_in,
        offset=offset,
    )
