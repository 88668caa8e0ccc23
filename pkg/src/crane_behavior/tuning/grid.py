"""Exhaustive hyperparameter searches for model reduction and trajectory generation.

Both searches evaluate every cell of a Cartesian grid on a thread pool and return
the rows in grid order, so a score table is reproducible regardless of scheduling.
"""
from __future__ import annotations

import dataclasses
import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..behavior.hankel import (
    BehaviorModel,
    ThresholdMode,
    denoise_svd,
    qr_pivots,
    select_columns_qr,
)
from ..behavior.trajectory import Trajectory
from ..channels import ChannelMode
from ..dynamics.model import CraneParams
from ..dynamics.simulation import rollout_boom_input
from ..errors import (
    ChannelMismatch,
    CraneBehaviorError,
    InfeasibleProblem,
    SolverMaxIterations,
    TooShort,
    TuningError,
)
from ..events import StageEmitter, StageEventKind, StageObserver
from ..recovery.generation import generate_trajectory
from ..recovery.models import GeneratedTrajectory, SimulationSpec, TrajectoryGenSpec
from ..recovery.recover import nonparametric_simulate
from ..solver.problem import SolverSettings
from .metrics import OBJECTIVE_METRICS, TrajectoryQuality, score_trajectory

LOGGER = logging.getLogger(__name__)


def _require_values(name: str, values: Sequence[float]) -> Tuple[float, ...]:
    items = tuple(values)
    if not items:
        raise ValueError(f"{name} must not be empty")
    return items


# --------------------------------------------------------------------------------------
# Simulation-error search over (delta, lambda, nu)
# --------------------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class SimTuneGrid:
    """Candidate reductions and the held-out trajectories they are scored on.

    Attributes:
        deltas: SVD thresholds.
        lams: L1 weights of the nonparametric simulation.
        nus: Numbers of QR-selected columns.
        test: Held-out trajectories, each at least ``L`` samples long.
        n_ini: Leading samples known in full.
        epsilon: Slack on the known elements.
        threshold_mode: Interpretation of ``deltas``.
    """

    deltas: Tuple[float, ...]
    lams: Tuple[float, ...]
    nus: Tuple[int, ...]
    test: Tuple[Trajectory, ...]
    n_ini: int = 10
    epsilon: float = 1e-6
    threshold_mode: ThresholdMode = ThresholdMode.RELATIVE

    def __post_init__(self) -> None:
        object.__setattr__(self, "deltas", _require_values("deltas", self.deltas))
        object.__setattr__(self, "lams", _require_values("lams", self.lams))
        nus = tuple(int(nu) for nu in _require_values("nus", self.nus))
        object.__setattr__(self, "nus", nus)
        object.__setattr__(self, "test", _require_values("test", self.test))
        object.__setattr__(self, "threshold_mode", ThresholdMode(self.threshold_mode))
        if min(self.nus) < 1:
            raise ValueError("nus must be at least 1")
        if min(self.lams) < 0:
            raise ValueError("lams must be non-negative")

    @property
    def size(self) -> int:
        return len(self.deltas) * len(self.lams) * len(self.nus)

    def cells(self) -> List[Tuple[float, float, int]]:
        """Grid cells ``(delta, lam, nu)`` in table order."""
        return list(itertools.product(self.deltas, self.lams, self.nus))


@dataclass(frozen=True, slots=True)
class SimScoreRow:
    """Summed squared simulation error of one grid cell on the test set."""

    delta: float
    lam: float
    nu: int
    score: float
    channel_scores: Mapping[str, float] = field(default_factory=dict)
    feasible: bool = True

    def to_dict(self) -> dict[str, Any]:
        row: dict[str, Any] = {
            "delta": self.delta,
            "lam": self.lam,
            "nu": self.nu,
            "score": self.score,
            "feasible": self.feasible,
        }
        row.update({f"score_{name}": value for name, value in self.channel_scores.items()})
        return row


@dataclass(slots=True)
class SimTuneResult:
    best: SimScoreRow
    rows: List[SimScoreRow]

    @property
    def table(self) -> List[dict[str, Any]]:
        return [row.to_dict() for row in self.rows]


def _sim_key(row: SimScoreRow) -> Tuple[float, int, float, float]:
    return (row.score, row.nu, -row.delta, -row.lam)


class SimulationTuner(StageEmitter):
    """Grid search of model reductions scored by nonparametric-simulation error."""

    stage = "tune-sim"

    def __init__(
        self,
        settings: Optional[SolverSettings] = None,
        *,
        max_workers: Optional[int] = None,
        observer: StageObserver | None = None,
    ) -> None:
        super().__init__(observer)
        self.settings = settings
        self.max_workers = max_workers

    def _specs(
        self, model: BehaviorModel, grid: SimTuneGrid
    ) -> List[Tuple[SimulationSpec, Trajectory]]:
        specs = []
        for trajectory in grid.test:
            if trajectory.channel_names != model.channel_names or trajectory.m != model.m:
                raise ChannelMismatch("test trajectories must share the model channel layout")
            if trajectory.n_samples < model.depth:
                raise TooShort(
                    f"test trajectory has {trajectory.n_samples} samples, "
                    f"model depth is {model.depth}"
                )
            window = trajectory.window(0, model.depth)
            specs.append((SimulationSpec.from_trajectory(window, grid.n_ini, grid.epsilon), window))
        return specs

    def _score_cell(
        self,
        reduced: BehaviorModel,
        delta: float,
        lam: float,
        nu: int,
        specs: Sequence[Tuple[SimulationSpec, Trajectory]],
    ) -> SimScoreRow:
        per_channel = np.zeros(reduced.q)
        for spec, window in specs:
            try:
                result = nonparametric_simulate(reduced, spec, lam=lam, settings=self.settings)
            except (InfeasibleProblem, SolverMaxIterations) as exc:
                LOGGER.debug("cell delta=%g lam=%g nu=%d rejected: %s", delta, lam, nu, exc)
                return SimScoreRow(
                    delta=delta,
                    lam=lam,
                    nu=nu,
                    score=math.inf,
                    channel_scores={name: math.inf for name in reduced.channel_names},
                    feasible=False,
                )
            residual = (window.data - result.w_hat.data).reshape(-1, reduced.q)
            per_channel += np.sum(residual**2, axis=0)
        return SimScoreRow(
            delta=delta,
            lam=lam,
            nu=nu,
            score=float(per_channel.sum()),
            channel_scores=dict(zip(reduced.channel_names, per_channel.tolist())),
        )

    def _score_group(
        self,
        model: BehaviorModel,
        pivots: np.ndarray,
        delta: float,
        nu: int,
        grid: SimTuneGrid,
        specs: Sequence[Tuple[SimulationSpec, Trajectory]],
    ) -> List[SimScoreRow]:
        reduced = denoise_svd(select_columns_qr(model, nu, pivots), delta, grid.threshold_mode)
        return [self._score_cell(reduced, delta, lam, nu, specs) for lam in grid.lams]

    def run(self, model: BehaviorModel, grid: SimTuneGrid) -> SimTuneResult:
        specs = self._specs(model, grid)
        self.emit(
            StageEventKind.STAGE_STARTED,
            f"scoring {grid.size} cells on {len(specs)} test trajectories",
            data={"cells": grid.size},
        )
        pivots = qr_pivots(model)
        groups = list(itertools.product(grid.deltas, grid.nus))
        scored: Dict[Tuple[float, float, int], SimScoreRow] = {}
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            futures = [
                pool.submit(self._score_group, model, pivots, delta, nu, grid, specs)
                for delta, nu in groups
            ]
            for index, future in enumerate(futures):
                for row in future.result():
                    scored[(row.delta, row.lam, row.nu)] = row
                delta, nu = groups[index]
                self.emit(
                    StageEventKind.CELL_FINISHED,
                    f"delta={delta:g} nu={nu} scored for {len(grid.lams)} lambda values",
                    index=index,
                )
        rows = [scored[cell] for cell in grid.cells()]
        best = min(rows, key=_sim_key)
        LOGGER.info(
            "best reduction: delta=%g lam=%g nu=%d score=%.6g",
            best.delta,
            best.lam,
            best.nu,
            best.score,
        )
        return SimTuneResult(best=best, rows=rows)


def tune_simulation(
    model: BehaviorModel,
    grid: SimTuneGrid,
    settings: Optional[SolverSettings] = None,
    *,
    max_workers: Optional[int] = None,
    observer: StageObserver | None = None,
) -> SimTuneResult:
    """Pick ``(delta, lam, nu)`` minimising the summed squared simulation error.

    Infeasible cells score ``inf``. Ties go to the smaller ``nu``, then the larger
    ``delta``, then the larger ``lam``.
    """
    return SimulationTuner(settings, max_workers=max_workers, observer=observer).run(model, grid)


# --------------------------------------------------------------------------------------
# Trajectory-quality search over (lambda, mu, sigma)
# --------------------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class TrajTuneGrid:
    """Candidate generation weights and the weighting of the normalised metrics."""

    lams: Tuple[float, ...]
    mus: Tuple[float, ...]
    sigmas: Tuple[float, ...]
    metric_weights: Mapping[str, float] = field(
        default_factory=lambda: {name: 1.0 for name in OBJECTIVE_METRICS}
    )
    use_rollout: bool = True

    def __post_init__(self) -> None:
        for name in ("lams", "mus", "sigmas"):
            values = _require_values(name, getattr(self, name))
            if min(values) < 0:
                raise ValueError(f"{name} must be non-negative")
            object.__setattr__(self, name, values)
        unknown = set(self.metric_weights) - set(OBJECTIVE_METRICS)
        if unknown:
            raise ValueError(f"unknown metrics in metric_weights: {sorted(unknown)}")
        if any(weight < 0 for weight in self.metric_weights.values()):
            raise ValueError("metric weights must be non-negative")
        object.__setattr__(self, "metric_weights", dict(self.metric_weights))

    @property
    def size(self) -> int:
        return len(self.lams) * len(self.mus) * len(self.sigmas)

    def cells(self) -> List[Tuple[float, float, float]]:
        return list(itertools.product(self.lams, self.mus, self.sigmas))

    def active_metrics(self) -> Tuple[str, ...]:
        names = [name for name in OBJECTIVE_METRICS if self.metric_weights.get(name, 0.0) > 0]
        if not self.use_rollout:
            names = [name for name in names if name != "rollout_error"]
        return tuple(names)


@dataclass(frozen=True, slots=True)
class TrajScoreRow:
    """Metrics and combined objective of one ``(lam, mu, sigma)`` cell."""

    lam: float
    mu: float
    sigma: float
    quality: Optional[TrajectoryQuality]
    objective: float = math.inf

    @property
    def feasible(self) -> bool:
        return self.quality is not None

    def to_dict(self) -> dict[str, Any]:
        row: dict[str, Any] = {
            "lam": self.lam,
            "mu": self.mu,
            "sigma": self.sigma,
            "feasible": self.feasible,
            "objective": self.objective,
        }
        if self.quality is not None:
            row.update(self.quality.to_dict())
        return row


@dataclass(slots=True)
class TrajTuneResult:
    """Best cell, full table, normalisation constants and 1-D slices through the optimum."""

    best: TrajScoreRow
    rows: List[TrajScoreRow]
    normalization: Dict[str, float]
    slices: Dict[str, List[Tuple[float, float]]]

    @property
    def table(self) -> List[dict[str, Any]]:
        return [row.to_dict() for row in self.rows]

    def slice_table(self) -> List[dict[str, Any]]:
        return [
            {"parameter": name, "value": value, "objective": objective}
            for name, points in self.slices.items()
            for value, objective in points
        ]


def combined_objective(
    quality: TrajectoryQuality,
    normalization: Mapping[str, float],
    weights: Mapping[str, float],
) -> float:
    """Weighted sum of metrics divided by their normalisation constants."""
    return float(
        sum(
            weights.get(name, 0.0) * quality.metric(name) / normalization[name]
            for name in normalization
        )
    )


def _normalization(
    qualities: Sequence[TrajectoryQuality], metrics: Sequence[str]
) -> Dict[str, float]:
    constants = {}
    for name in metrics:
        largest = max(quality.metric(name) for quality in qualities)
        constants[name] = largest if largest > 0 else 1.0
    return constants


def _slices(
    rows: Sequence[TrajScoreRow], best: TrajScoreRow
) -> Dict[str, List[Tuple[float, float]]]:
    slices: Dict[str, List[Tuple[float, float]]] = {}
    for name in ("lam", "mu", "sigma"):
        others = [other for other in ("lam", "mu", "sigma") if other != name]
        points = [
            (getattr(row, name), row.objective)
            for row in rows
            if all(getattr(row, other) == getattr(best, other) for other in others)
        ]
        slices[name] = sorted(points)
    return slices


class TrajectoryTuner(StageEmitter):
    """Grid search of the generation weights scored by trajectory quality."""

    stage = "tune-traj"

    def __init__(
        self,
        params: Optional[CraneParams] = None,
        settings: Optional[SolverSettings] = None,
        *,
        max_workers: Optional[int] = None,
        observer: StageObserver | None = None,
    ) -> None:
        super().__init__(observer)
        self.params = params or CraneParams()
        self.settings = settings
        self.max_workers = max_workers

    def evaluate(
        self,
        model: BehaviorModel,
        scenario: TrajectoryGenSpec,
        use_rollout: bool = True,
    ) -> Tuple[GeneratedTrajectory, TrajectoryQuality]:
        """Generate one trajectory and score it, with an optional crane rollout."""
        generated = generate_trajectory(model, scenario, self.settings)
        rollout = None
        if use_rollout:
            rollout = rollout_boom_input(
                generated.inputs,
                self.params,
                theta4_start=scenario.theta4_start,
                mode=ChannelMode.from_channel_names(model.channel_names),
                rate=model.rate,
            )
        return generated, score_trajectory(generated.w_hat, scenario.theta4_target, rollout)

    def _score_cell(
        self,
        model: BehaviorModel,
        scenario: TrajectoryGenSpec,
        cell: Tuple[float, float, float],
        use_rollout: bool,
    ) -> TrajScoreRow:
        lam, mu, sigma = cell
        spec = dataclasses.replace(scenario, lam=lam, mu=mu, sigma=sigma)
        try:
            _, quality = self.evaluate(model, spec, use_rollout)
        except CraneBehaviorError as exc:
            LOGGER.debug("cell lam=%g mu=%g sigma=%g failed: %s", lam, mu, sigma, exc)
            return TrajScoreRow(lam=lam, mu=mu, sigma=sigma, quality=None)
        return TrajScoreRow(lam=lam, mu=mu, sigma=sigma, quality=quality)

    def run(
        self, model: BehaviorModel, scenario: TrajectoryGenSpec, grid: TrajTuneGrid
    ) -> TrajTuneResult:
        cells = grid.cells()
        self.emit(
            StageEventKind.STAGE_STARTED,
            f"scoring {len(cells)} generation cells",
            data={"cells": len(cells)},
        )
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            futures = [
                pool.submit(self._score_cell, model, scenario, cell, grid.use_rollout)
                for cell in cells
            ]
            raw = []
            for index, future in enumerate(futures):
                row = future.result()
                raw.append(row)
                self.emit(
                    StageEventKind.CELL_FINISHED,
                    f"lam={row.lam:g} mu={row.mu:g} sigma={row.sigma:g}"
                    + ("" if row.feasible else " infeasible"),
                    index=index,
                )

        feasible = [row.quality for row in raw if row.quality is not None]
        if not feasible:
            raise TuningError("every cell of the trajectory grid was infeasible")
        normalization = _normalization(feasible, grid.active_metrics())
        rows = [
            row
            if row.quality is None
            else dataclasses.replace(
                row,
                objective=combined_objective(row.quality, normalization, grid.metric_weights),
            )
            for row in raw
        ]
        best = min(rows, key=lambda row: row.objective)
        self.emit(
            StageEventKind.METRIC_RECORDED,
            "best generation weights",
            data={
                "lam": best.lam,
                "mu": best.mu,
                "sigma": best.sigma,
                "objective": best.objective,
            },
        )
        LOGGER.info(
            "best generation weights: lam=%g mu=%g sigma=%g objective=%.4f (%d/%d feasible)",
            best.lam,
            best.mu,
            best.sigma,
            best.objective,
            len(feasible),
            len(rows),
        )
        return TrajTuneResult(
            best=best,
            rows=rows,
            normalization=normalization,
            slices=_slices(rows, best),
        )


def tune_trajectory(
    model: BehaviorModel,
    scenario: TrajectoryGenSpec,
    grid: TrajTuneGrid,
    params: Optional[CraneParams] = None,
    settings: Optional[SolverSettings] = None,
    *,
    max_workers: Optional[int] = None,
    observer: StageObserver | None = None,
) -> TrajTuneResult:
    """Pick ``(lam, mu, sigma)`` minimising the normalised trajectory-quality objective.

    Metrics are divided by their largest value over the feasible cells.

    Raises:
        TuningError: If no cell produces a trajectory.
    """
    tuner = TrajectoryTuner(params, settings, max_workers=max_workers, observer=observer)
    return tuner.run(model, scenario, grid)
