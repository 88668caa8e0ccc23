"""Difference operators and reference trajectories on flattened windows."""
from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np

from ..behavior.hankel import BehaviorModel
from ..behavior.trajectory import IndexSet, Trajectory
from ..errors import ChannelMismatch
from .models import TrajectoryGenSpec


def build_total_variation_operator(model: BehaviorModel, channels: Sequence[str]) -> np.ndarray:
    """Forward differences along time of the selected channels, zero-padded at both ends.

    Each channel contributes ``L + 1`` rows: ``x[0] - 0``, ``x[k] - x[k-1]`` for the
    interior, and ``0 - x[L-1]``.
    """
    blocks = []
    for name in channels:
        if name not in model.channel_names:
            raise ChannelMismatch(f"model has no channel {name!r}")
        rows = model.channel_rows(name)
        block = np.zeros((model.depth + 1, model.n_rows))
        step = np.arange(model.depth)
        block[step, rows] = 1.0
        block[step + 1, rows] -= 1.0
        blocks.append(block)
    if not blocks:
        return np.zeros((0, model.n_rows))
    return np.vstack(blocks)


def rest_sample(channel_names: Tuple[str, ...], theta4: float) -> np.ndarray:
    """A sample of the crane at rest with the boom at ``theta4``."""
    sample = np.zeros(len(channel_names))
    sample[channel_names.index("theta4")] = theta4
    return sample


def build_reference(model: BehaviorModel, spec: TrajectoryGenSpec) -> Trajectory:
    """Rest at the start for ``n_given`` samples, then rest at the target."""
    start = rest_sample(model.channel_names, spec.theta4_start)
    target = rest_sample(model.channel_names, spec.theta4_target)
    samples = np.vstack(
        [np.tile(start, (spec.n_given, 1)), np.tile(target, (spec.depth - spec.n_given, 1))]
    )
    return model.trajectory(samples.ravel())


def endpoint_indices(spec: TrajectoryGenSpec, q: int) -> Tuple[IndexSet, IndexSet]:
    """Known elements (first and last ``n_given`` samples) and pinned samples (first, last)."""
    depth = spec.depth
    known = IndexSet.samples(range(spec.n_given), q).union(
        IndexSet.samples(range(depth - spec.n_given, depth), q)
    )
    pinned = IndexSet.samples([0, depth - 1], q)
    return known, pinned
