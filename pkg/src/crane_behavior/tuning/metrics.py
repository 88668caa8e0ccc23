"""Quality metrics of a slewing trajectory."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any, Mapping, Optional, Tuple

import numpy as np

from ..behavior.trajectory import Trajectory
from ..errors import ChannelMismatch

TARGET_TOLERANCE = 0.035
HOLD_SECONDS = 5.0

# Metrics that enter the combined tuning objective, in table order.
OBJECTIVE_METRICS: Tuple[str, ...] = (
    "time_to_target",
    "max_sway",
    "mean_sway",
    "max_smooth",
    "mean_smooth",
    "overshoot_integral",
    "rollout_error",
)


@dataclass(frozen=True, slots=True)
class TrajectoryQuality:
    """Metric bundle of one trajectory.

    Attributes:
        time_to_target: First time after which the boom holds within the tolerance
            band for the hold duration; the horizon when that never happens.
        reached: Whether the hold condition was met.
        max_sway: Largest sway magnitude ``hypot(theta1, theta2)``.
        mean_sway: Mean sway magnitude.
        max_theta1: Largest ``|theta1|``.
        max_theta2: Largest ``|theta2|``.
        max_smooth: Largest central difference of the zero-padded boom velocity.
        mean_smooth: Mean absolute central difference of the zero-padded boom velocity.
        overshoot_integral: Time integral of the boom angle beyond the target.
        final_error: ``|theta4[-1] - target|``.
        rollout_error: Norm of the difference to an open-loop rollout, 0 without one.
    """

    time_to_target: float
    reached: bool
    max_sway: float
    mean_sway: float
    max_theta1: float
    max_theta2: float
    max_smooth: float
    mean_smooth: float
    overshoot_integral: float
    final_error: float
    rollout_error: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    def metric(self, name: str) -> float:
        return float(getattr(self, name))


def time_to_target(
    theta4: np.ndarray,
    target: float,
    rate: float,
    *,
    tolerance: float = TARGET_TOLERANCE,
    hold: float = HOLD_SECONDS,
) -> Tuple[float, bool]:
    """First time ``t`` with ``|theta4 - target| <= tolerance`` on all of ``[t, t + hold]``."""
    values = np.asarray(theta4, dtype=float)
    horizon = values.size / rate
    span = int(round(hold * rate)) + 1
    if values.size < span:
        return horizon, False
    inside = np.abs(values - target) <= tolerance
    windows = np.lib.stride_tricks.sliding_window_view(inside, span)
    hits = np.flatnonzero(windows.all(axis=1))
    if hits.size == 0:
        return horizon, False
    return hits[0] / rate, True


def smoothness(velocity: np.ndarray) -> np.ndarray:
    """Absolute central differences of the velocity padded with one zero at each end."""
    padded = np.concatenate([[0.0], np.asarray(velocity, dtype=float), [0.0]])
    return np.abs(padded[2:] - padded[:-2]) / 2.0


def overshoot_integral(theta4: np.ndarray, target: float, rate: float) -> float:
    """Rectangle-rule integral of the boom angle past the target, in the direction of travel."""
    values = np.asarray(theta4, dtype=float)
    direction = np.sign(target - values[0])
    if direction == 0:
        excess = np.abs(values - target)
    else:
        excess = np.maximum(direction * (values - target), 0.0)
    return float(np.sum(excess) / rate)


def rollout_error(
    predicted: Trajectory,
    rollout: Trajectory,
    weights: Optional[Mapping[str, float]] = None,
) -> float:
    """Weighted 2-norm of the difference on the channels both trajectories record."""
    if predicted.n_samples != rollout.n_samples:
        raise ChannelMismatch(
            f"rollout has {rollout.n_samples} samples, prediction has {predicted.n_samples}"
        )
    shared = [name for name in predicted.channel_names if name in rollout.channel_names]
    if not shared:
        raise ChannelMismatch("prediction and rollout share no channels")
    total = 0.0
    for name in shared:
        weight = 1.0 if weights is None else float(weights.get(name, 0.0))
        diff = predicted.channel(name) - rollout.channel(name)
        total += weight * float(diff @ diff)
    return math.sqrt(total)


def score_trajectory(
    predicted: Trajectory,
    target: float,
    rollout: Optional[Trajectory] = None,
    *,
    tolerance: float = TARGET_TOLERANCE,
    hold: float = HOLD_SECONDS,
    rollout_weights: Optional[Mapping[str, float]] = None,
) -> TrajectoryQuality:
    """Evaluate the slewing metrics of ``predicted``.

    Args:
        predicted: Trajectory with ``theta1``, ``theta2``, ``theta4`` and ``dtheta4``.
        target: Target boom angle in rad.
        rollout: Optional open-loop playback of the same input on the crane model.
        tolerance: Half-width of the target band in rad.
        hold: Seconds the boom must stay inside the band.
        rollout_weights: Per-channel weights of the rollout norm.
    """
    for name in ("theta1", "theta2", "theta4", "dtheta4"):
        if name not in predicted.channel_names:
            raise ChannelMismatch(f"trajectory has no {name!r} channel")
    theta1 = predicted.channel("theta1")
    theta2 = predicted.channel("theta2")
    theta4 = predicted.channel("theta4")
    sway = np.hypot(theta1, theta2)
    smooth = smoothness(predicted.channel("dtheta4"))
    reach_time, reached = time_to_target(
        theta4, target, predicted.rate, tolerance=tolerance, hold=hold
    )
    return TrajectoryQuality(
        time_to_target=float(reach_time),
        reached=reached,
        max_sway=float(sway.max()),
        mean_sway=float(sway.mean()),
        max_theta1=float(np.abs(theta1).max()),
        max_theta2=float(np.abs(theta2).max()),
        max_smooth=float(smooth.max()),
        mean_smooth=float(smooth.mean()),
        overshoot_integral=overshoot_integral(theta4, target, predicted.rate),
        final_error=float(abs(theta4[-1] - target)),
        rollout_error=(
            0.0 if rollout is None else rollout_error(predicted, rollout, rollout_weights)
        ),
    )
