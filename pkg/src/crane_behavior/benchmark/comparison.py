"""Side-by-side evaluation of the data-driven and the model-based slewing plans."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from ..behavior.trajectory import Trajectory
from ..channels import ChannelMode
from ..dynamics.model import CraneParams
from ..dynamics.simulation import rollout_boom_input
from ..recovery.models import GeneratedTrajectory, TrajectoryGenSpec
from ..tuning.metrics import TrajectoryQuality, score_trajectory
from .waypoints import WaypointSolution, plan_trajectory

RATIO_FIELDS = ("time_to_target", "max_theta1", "max_theta2", "final_error")


@dataclass(slots=True)
class MethodOutcome:
    """Input sequence of one method, its crane rollout and the rollout quality."""

    name: str
    inputs: np.ndarray
    rollout: Trajectory
    quality: TrajectoryQuality
    predicted: Optional[Trajectory] = None
    planned_time: Optional[float] = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "n_inputs": int(self.inputs.size),
            "planned_time": self.planned_time,
            "quality": self.quality.to_dict(),
        }


def _ratio(numerator: float, denominator: float) -> float:
    if denominator == 0.0:
        return 1.0 if numerator == 0.0 else math.inf
    return numerator / denominator


@dataclass(slots=True)
class ComparisonReport:
    """Ratios are ``first / second``; values below one favour the first method."""

    first: MethodOutcome
    second: MethodOutcome
    ratios: Dict[str, float]

    def to_dict(self) -> dict[str, Any]:
        return {
            "methods": [self.first.to_dict(), self.second.to_dict()],
            "ratios": dict(self.ratios),
        }

    def rows(self) -> list[dict[str, Any]]:
        """One CSV row per method with the raw metrics."""
        return [
            {"method": outcome.name, **outcome.quality.to_dict()}
            for outcome in (self.first, self.second)
        ]


def compare(first: MethodOutcome, second: MethodOutcome) -> ComparisonReport:
    """Ratios of time-to-target, peak sway angles and final boom error."""
    ratios = {
        name: _ratio(first.quality.metric(name), second.quality.metric(name))
        for name in RATIO_FIELDS
    }
    return ComparisonReport(first=first, second=second, ratios=ratios)


def outcome_from_generation(
    generated: GeneratedTrajectory,
    spec: TrajectoryGenSpec,
    params: Optional[CraneParams] = None,
    name: str = "data-driven",
) -> MethodOutcome:
    """Play a generated trajectory's input back on the crane and score the rollout."""
    predicted = generated.w_hat
    rollout = rollout_boom_input(
        generated.inputs,
        params or CraneParams(),
        theta4_start=spec.theta4_start,
        mode=ChannelMode.from_channel_names(predicted.channel_names),
        rate=predicted.rate,
    )
    return MethodOutcome(
        name=name,
        inputs=generated.inputs,
        rollout=rollout,
        quality=score_trajectory(rollout, spec.theta4_target),
        predicted=predicted,
    )


def outcome_from_waypoints(
    solution: WaypointSolution,
    start: float,
    target: float,
    params: Optional[CraneParams] = None,
    rate: float = 20.0,
    name: str = "model-based",
) -> MethodOutcome:
    rollout = plan_trajectory(solution, start, params, rate)
    return MethodOutcome(
        name=name,
        inputs=np.asarray(rollout.input_values()[:, 0]),
        rollout=rollout,
        quality=score_trajectory(rollout, target),
        planned_time=solution.total_time,
    )
