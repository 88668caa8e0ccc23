"""Problem specifications and results of the behavior-based recovery tasks."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional, Tuple

import numpy as np

from ..behavior.hankel import BehaviorModel
from ..behavior.trajectory import IndexSet, Trajectory
from ..channels import BOOM_CHANNELS
from ..errors import DimensionMismatch
from ..solver.assembly import WeightSpec
from ..solver.problem import SolverReport


@dataclass(frozen=True, slots=True, eq=False)
class RecoveryProblem:
    """Known elements of a length-``L`` window to be completed from the model."""

    model: BehaviorModel
    known_idx: IndexSet
    known_vals: np.ndarray
    weights: WeightSpec = field(default_factory=WeightSpec)
    lam: float = 0.0

    def __post_init__(self) -> None:
        values = np.array(self.known_vals, dtype=float).ravel()
        if values.size != len(self.known_idx):
            raise DimensionMismatch(
                f"{len(self.known_idx)} known indices but {values.size} known values"
            )
        if values.size > self.model.n_rows:
            raise DimensionMismatch("more known elements than the window holds")
        self.known_idx.check(self.model.n_rows)
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        object.__setattr__(self, "known_vals", values)

    @classmethod
    def from_partial(
        cls,
        model: BehaviorModel,
        w: np.ndarray,
        known_idx: IndexSet,
        *,
        weights: Optional[WeightSpec] = None,
        lam: float = 0.0,
    ) -> "RecoveryProblem":
        """Take the known values from a full-length vector."""
        full = np.asarray(w, dtype=float).ravel()
        if full.size != model.n_rows:
            raise DimensionMismatch(f"expected {model.n_rows} elements, got {full.size}")
        return cls(model, known_idx, full[known_idx.indices], weights or WeightSpec(), lam)


@dataclass(frozen=True, slots=True, eq=False)
class SimulationSpec:
    """Initial samples and the future inputs of a nonparametric simulation.

    Attributes:
        n_ini: Number of leading samples known in full.
        initial: ``(n_ini, q)`` array of the leading samples.
        inputs: ``(L - n_ini, m)`` array of the later input values.
        epsilon: Infinity-norm slack on every known element.
    """

    n_ini: int
    initial: np.ndarray
    inputs: np.ndarray
    epsilon: float = 1e-6

    def __post_init__(self) -> None:
        if self.n_ini < 1:
            raise ValueError("n_ini must be at least 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        initial = np.atleast_2d(np.array(self.initial, dtype=float))
        inputs = np.array(self.inputs, dtype=float)
        if inputs.ndim == 1:
            inputs = inputs[:, None]
        if initial.shape[0] != self.n_ini:
            raise DimensionMismatch(
                f"initial block has {initial.shape[0]} samples, expected {self.n_ini}"
            )
        object.__setattr__(self, "initial", initial)
        object.__setattr__(self, "inputs", inputs)

    @property
    def depth(self) -> int:
        return self.n_ini + self.inputs.shape[0]

    @classmethod
    def from_trajectory(
        cls, trajectory: Trajectory, n_ini: int, epsilon: float = 1e-6
    ) -> "SimulationSpec":
        samples = trajectory.samples()
        return cls(n_ini, samples[:n_ini], samples[n_ini:, : trajectory.m], epsilon)

    def known(self, q: int, m: int) -> Tuple[IndexSet, np.ndarray]:
        """Index set and values of the known elements for a ``q``-channel window."""
        if self.initial.shape[1] != q or self.inputs.shape[1] != m:
            raise DimensionMismatch("simulation spec does not match the model channel layout")
        depth = self.depth
        idx = IndexSet.samples(range(self.n_ini), q).union(
            IndexSet.channels(range(self.n_ini, depth), range(m), q)
        )
        full = np.zeros(q * depth)
        full[: q * self.n_ini] = self.initial.ravel()
        later = np.arange(self.n_ini, depth)[:, None] * q + np.arange(m)[None, :]
        full[later.ravel()] = self.inputs.ravel()
        return idx, full[idx.indices]


@dataclass(frozen=True, slots=True, eq=False)
class TrajectoryGenSpec:
    """Rest-to-rest slewing manoeuvre and the weights of the generation cost.

    Attributes:
        theta4_start: Initial boom angle in rad.
        theta4_target: Final boom angle in rad.
        n_given: Samples pinned at rest at each end.
        depth: Window length ``L`` in samples.
        weights: Diagonal ``W`` and ``R``.
        lam: L1 weight.
        mu: Reference-tracking weight.
        sigma: Total-variation weight.
        tv_channels: Channels the total-variation operator acts on.
        sway_bound: Bound on both sway angles in rad.
        input_bound: Bound on the input channel.
        velocity_bound: Optional bound on the boom velocity when it is an output.
    """

    theta4_start: float
    theta4_target: float
    n_given: int = 10
    depth: int = 500
    weights: WeightSpec = field(default_factory=WeightSpec)
    lam: float = 0.0064
    mu: float = 14.3214
    sigma: float = 2.5877
    tv_channels: Tuple[str, ...] = BOOM_CHANNELS
    sway_bound: float = 0.035
    input_bound: float = 0.6
    velocity_bound: Optional[float] = None

    def __post_init__(self) -> None:
        if self.n_given < 1:
            raise ValueError("n_given must be at least 1")
        if 2 * self.n_given >= self.depth:
            raise ValueError("2 * n_given must be smaller than depth")
        if not (self.sway_bound > 0 and self.input_bound > 0):
            raise ValueError("bounds must be positive")
        if self.velocity_bound is not None and not self.velocity_bound > 0:
            raise ValueError("velocity_bound must be positive")
        if min(self.lam, self.mu, self.sigma) < 0:
            raise ValueError("lam, mu and sigma must be non-negative")
        object.__setattr__(self, "tv_channels", tuple(self.tv_channels))

    def to_dict(self) -> dict[str, Any]:
        return {
            "theta4_start": self.theta4_start,
            "theta4_target": self.theta4_target,
            "n_given": self.n_given,
            "L": self.depth,
            "lam": self.lam,
            "mu": self.mu,
            "sigma": self.sigma,
            "tv_channels": list(self.tv_channels),
            "sway_bound": self.sway_bound,
            "input_bound": self.input_bound,
            "velocity_bound": self.velocity_bound,
        }


@dataclass(slots=True)
class RecoveryResult:
    """Coefficients, reconstructed window and solver report."""

    g: np.ndarray
    w_hat: Trajectory
    report: SolverReport

    @property
    def objective(self) -> float:
        return self.report.objective


@dataclass(slots=True)
class GeneratedTrajectory(RecoveryResult):
    """Trajectory-generation result with the reference and the playback input."""

    reference: Optional[Trajectory] = None
    inputs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    endpoint_residual: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "solver": self.report.to_dict(),
            "endpoint_residual": self.endpoint_residual,
            "max_abs_input": float(np.max(np.abs(self.inputs))) if self.inputs.size else 0.0,
        }
