"""Model-based waypoint planner used as the benchmark for data-driven generation.

The boom path is discretised into ``N`` waypoints a common segment duration ``tau``
apart. Boom angle, rate and acceleration at every waypoint are decision variables
tied together by finite differences. Load sway is propagated over each segment with
the linear load dynamics under piecewise-constant boom rate and acceleration.
"""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, List, Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.optimize

from ..behavior.trajectory import Trajectory
from ..channels import ChannelMode
from ..dynamics.model import CraneParams
from ..dynamics.simulation import DEFAULT_RATE, rollout_boom_input
from ..errors import InfeasibleProblem, SolverMaxIterations
from ..events import StageEmitter, StageEventKind, StageObserver

LOGGER = logging.getLogger(__name__)

EQUALITY_TOLERANCE = 1e-8
SWAY_TOLERANCE = 1e-4
ROLLOUT_TOLERANCE = 5e-3


class FiniteDifference(str, Enum):
    """Index convention of the kinematic consistency constraints.

    ``backward`` ties ``rate[k]`` to ``angle[k] - angle[k-1]``; ``printed`` ties
    ``rate[k+1]`` to the same difference.
    """

    BACKWARD = "backward"
    PRINTED = "printed"


class NLPMethod(str, Enum):
    SLSQP = "slsqp"
    AUGLAG = "auglag"


@dataclass(frozen=True, slots=True)
class Bounds:
    """Boom and sway limits of the waypoint plan (rad, rad/s, rad/s^2)."""

    max_acceleration: float = 0.01724
    max_velocity: float = 0.1724
    sway: float = 0.0349
    sway_rate: float = 0.0175
    final_sway: float = 0.0017
    final_sway_rate: float = 0.0087

    def __post_init__(self) -> None:
        values = (
            self.max_acceleration,
            self.max_velocity,
            self.sway,
            self.sway_rate,
            self.final_sway,
            self.final_sway_rate,
        )
        if not all(value > 0 for value in values):
            raise ValueError("all bounds must be positive")
        if self.final_sway > self.sway or self.final_sway_rate > self.sway_rate:
            raise ValueError("final bounds must not exceed the path bounds")

    def to_dict(self) -> dict[str, Any]:
        return {
            "max_acceleration": self.max_acceleration,
            "max_velocity": self.max_velocity,
            "sway": self.sway,
            "sway_rate": self.sway_rate,
            "final_sway": self.final_sway,
            "final_sway_rate": self.final_sway_rate,
        }


@dataclass(frozen=True, slots=True)
class WaypointProblem:
    """Rest-to-rest slewing manoeuvre planned over ``n_waypoints`` waypoints.

    Attributes:
        start: Initial boom angle in rad.
        target: Final boom angle in rad.
        bounds: Boom and sway limits.
        n_waypoints: Number of waypoints including both ends.
        sigma_ref: Weight of the deviation from the straight-line reference, in 1/rad.
        tau_bounds: Search interval of the segment duration in seconds.
        tau_guess: Segment duration of the first start.
        convention: Finite-difference index convention.
        substeps: Sway checkpoints per segment.
    """

    start: float
    target: float
    bounds: Bounds = field(default_factory=Bounds)
    n_waypoints: int = 16
    sigma_ref: float = 10.0
    tau_bounds: Tuple[float, float] = (0.2, 10.0)
    tau_guess: float = 2.5
    convention: FiniteDifference = FiniteDifference.BACKWARD
    substeps: int = 4

    def __post_init__(self) -> None:
        if self.n_waypoints < 3:
            raise ValueError("n_waypoints must be at least 3")
        low, high = self.tau_bounds
        if not 0 < low < high:
            raise ValueError("tau_bounds must satisfy 0 < low < high")
        if not low <= self.tau_guess <= high:
            raise ValueError("tau_guess must lie inside tau_bounds")
        if self.sigma_ref < 0:
            raise ValueError("sigma_ref must be non-negative")
        if self.substeps < 1:
            raise ValueError("substeps must be at least 1")
        object.__setattr__(self, "convention", FiniteDifference(self.convention))

    def reference(self) -> np.ndarray:
        return np.linspace(self.start, self.target, self.n_waypoints)

    def to_dict(self) -> dict[str, Any]:
        return {
            "start": self.start,
            "target": self.target,
            "bounds": self.bounds.to_dict(),
            "n_waypoints": self.n_waypoints,
            "sigma_ref": self.sigma_ref,
            "tau_bounds": list(self.tau_bounds),
            "tau_guess": self.tau_guess,
            "convention": self.convention.value,
            "substeps": self.substeps,
        }


@dataclass(slots=True)
class NLPReport:
    """Outcome of the multi-start solve and of the feasibility checks."""

    method: str
    success: bool
    message: str
    iterations: int
    starts: int
    objective: float
    equality_residual: float
    sway_violation: float
    rollout_max_sway: Optional[float] = None
    rollout_verified: Optional[bool] = None
    solve_seconds: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "success": self.success,
            "message": self.message,
            "iterations": self.iterations,
            "starts": self.starts,
            "objective": self.objective,
            "equality_residual": self.equality_residual,
            "sway_violation": self.sway_violation,
            "rollout_max_sway": self.rollout_max_sway,
            "rollout_verified": self.rollout_verified,
            "solve_seconds": self.solve_seconds,
        }


@dataclass(slots=True)
class WaypointSolution:
    """Waypoint angles, rates and accelerations with the common segment duration."""

    theta4: np.ndarray
    dtheta4: np.ndarray
    ddtheta4: np.ndarray
    tau: float
    sway: np.ndarray
    report: NLPReport

    @property
    def total_time(self) -> float:
        return (self.theta4.size - 1) * self.tau

    def to_dict(self) -> dict[str, Any]:
        return {
            "tau": self.tau,
            "total_time": self.total_time,
            "theta4": self.theta4.tolist(),
            "dtheta4": self.dtheta4.tolist(),
            "ddtheta4": self.ddtheta4.tolist(),
            "report": self.report.to_dict(),
        }


class _Layout:
    """Slices of the decision vector ``[theta4, dtheta4, ddtheta4, tau]``."""

    def __init__(self, n: int) -> None:
        self.n = n
        self.angle = slice(0, n)
        self.rate = slice(n, 2 * n)
        self.accel = slice(2 * n, 3 * n)
        self.tau = 3 * n
        self.size = 3 * n + 1

    def split(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
        return x[self.angle], x[self.rate], x[self.accel], float(x[self.tau])


def segment_transition(
    params: CraneParams, rate: float, accel: float, duration: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Exact transition of ``(theta1, theta2, dtheta1, dtheta2)`` over one held segment.

    Returns ``(Phi, gamma)`` such that ``s(duration) = Phi s(0) + gamma``.
    """
    a1sq = params.alpha1_squared
    a2 = params.alpha2
    augmented = np.zeros((5, 5))
    augmented[0, 2] = 1.0
    augmented[1, 3] = 1.0
    augmented[2, 0] = -a1sq
    augmented[2, 3] = 2.0 * rate
    augmented[3, 1] = -a1sq
    augmented[2, 4] = a2 * rate * rate
    augmented[3, 4] = -a2 * accel
    exponential = scipy.linalg.expm(augmented * duration)
    return exponential[:4, :4], exponential[:4, 4]


def propagate_sway(
    params: CraneParams,
    dtheta4: np.ndarray,
    ddtheta4: np.ndarray,
    tau: float,
    substeps: int = 4,
) -> np.ndarray:
    """Sway states at ``substeps`` checkpoints per segment, starting at rest.

    Segment ``k`` holds the mean of the rates at its two waypoints and the
    acceleration of its end waypoint.
    """
    n_segments = dtheta4.size - 1
    states = np.zeros((n_segments * substeps + 1, 4))
    current = np.zeros(4)
    row = 1
    for k in range(n_segments):
        rate = 0.5 * (dtheta4[k] + dtheta4[k + 1])
        phi, gamma = segment_transition(params, rate, ddtheta4[k + 1], tau / substeps)
        for _ in range(substeps):
            current = phi @ current + gamma
            states[row] = current
            row += 1
    return states


def _difference_pairs(problem: WaypointProblem) -> List[Tuple[int, int]]:
    """``(derivative index, difference index)`` pairs of the consistency constraints."""
    n = problem.n_waypoints
    if problem.convention is FiniteDifference.BACKWARD:
        return [(k, k) for k in range(1, n)]
    return [(k + 1, k) for k in range(1, n - 1)]


class _WaypointNLP:
    """Objective, constraints and their derivatives for one problem instance."""

    def __init__(self, problem: WaypointProblem, params: CraneParams) -> None:
        self.problem = problem
        self.params = params
        self.layout = _Layout(problem.n_waypoints)
        self.reference = problem.reference()
        self.pairs = _difference_pairs(problem)
        self.weight = problem.sigma_ref**2 / problem.n_waypoints

    def objective(self, x: np.ndarray) -> float:
        angle, _, _, tau = self.layout.split(x)
        return tau + self.weight * float(np.sum((angle - self.reference) ** 2))

    def objective_grad(self, x: np.ndarray) -> np.ndarray:
        angle, _, _, _ = self.layout.split(x)
        grad = np.zeros(self.layout.size)
        grad[self.layout.angle] = 2.0 * self.weight * (angle - self.reference)
        grad[self.layout.tau] = 1.0
        return grad

    def equalities(self, x: np.ndarray) -> np.ndarray:
        angle, rate, accel, tau = self.layout.split(x)
        last = self.layout.n - 1
        boundary = [
            angle[0] - self.reference[0],
            angle[last] - self.reference[last],
            rate[0],
            rate[last],
            accel[0],
            accel[last],
        ]
        velocity = [rate[i] * tau - (angle[j] - angle[j - 1]) for i, j in self.pairs]
        acceleration = [accel[i] * tau - (rate[j] - rate[j - 1]) for i, j in self.pairs]
        return np.array(boundary + velocity + acceleration)

    def equalities_jac(self, x: np.ndarray) -> np.ndarray:
        layout = self.layout
        _, rate, accel, tau = layout.split(x)
        n = layout.n
        jac = np.zeros((6 + 2 * len(self.pairs), layout.size))
        jac[0, 0] = 1.0
        jac[1, n - 1] = 1.0
        jac[2, n] = 1.0
        jac[3, 2 * n - 1] = 1.0
        jac[4, 2 * n] = 1.0
        jac[5, 3 * n - 1] = 1.0
        row = 6
        for base, derivative, values in ((0, n, rate), (n, 2 * n, accel)):
            for i, j in self.pairs:
                jac[row, derivative + i] = tau
                jac[row, base + j] = -1.0
                jac[row, base + j - 1] = 1.0
                jac[row, layout.tau] = values[i]
                row += 1
        return jac

    def sway(self, x: np.ndarray) -> np.ndarray:
        _, rate, accel, tau = self.layout.split(x)
        return propagate_sway(self.params, rate, accel, tau, self.problem.substeps)

    def inequalities(self, x: np.ndarray) -> np.ndarray:
        """Non-negative when every sway checkpoint respects its bound."""
        bounds = self.problem.bounds
        states = self.sway(x)
        path, final = states[1:-1], states[-1]
        path_limits = np.array([bounds.sway, bounds.sway, bounds.sway_rate, bounds.sway_rate])
        final_limits = np.array(
            [bounds.final_sway, bounds.final_sway, bounds.final_sway_rate, bounds.final_sway_rate]
        )
        return np.concatenate(
            [
                (path_limits - path).ravel(),
                (path_limits + path).ravel(),
                final_limits - final,
                final_limits + final,
            ]
        )

    def variable_bounds(self) -> List[Tuple[Optional[float], Optional[float]]]:
        bounds = self.problem.bounds
        n = self.layout.n
        return (
            [(None, None)] * n
            + [(-bounds.max_velocity, bounds.max_velocity)] * n
            + [(-bounds.max_acceleration, bounds.max_acceleration)] * n
            + [self.problem.tau_bounds]
        )

    def initial_guess(self, tau: float) -> np.ndarray:
        """Straight-line angles with rates and accelerations from the difference relations."""
        layout = self.layout
        bounds = self.problem.bounds
        x = np.zeros(layout.size)
        x[layout.angle] = self.reference
        rate = np.zeros(layout.n)
        accel = np.zeros(layout.n)
        for i, j in self.pairs:
            rate[i] = (self.reference[j] - self.reference[j - 1]) / tau
        rate[[0, -1]] = 0.0
        for i, j in self.pairs:
            accel[i] = (rate[j] - rate[j - 1]) / tau
        accel[[0, -1]] = 0.0
        x[layout.rate] = np.clip(rate, -bounds.max_velocity, bounds.max_velocity)
        x[layout.accel] = np.clip(accel, -bounds.max_acceleration, bounds.max_acceleration)
        x[layout.tau] = tau
        return x

    def violations(self, x: np.ndarray) -> Tuple[float, float]:
        """Largest equality residual and largest sway-bound excess."""
        equality = float(np.max(np.abs(self.equalities(x))))
        sway = float(max(0.0, -np.min(self.inequalities(x))))
        return equality, sway


@dataclass(slots=True)
class _Attempt:
    x: np.ndarray
    objective: float
    equality: float
    sway: float
    iterations: int
    message: str
    hit_limit: bool

    @property
    def feasible(self) -> bool:
        return self.equality <= EQUALITY_TOLERANCE and self.sway <= SWAY_TOLERANCE


def _run_slsqp(nlp: _WaypointNLP, x0: np.ndarray, max_iters: int) -> _Attempt:
    result = scipy.optimize.minimize(
        nlp.objective,
        x0,
        jac=nlp.objective_grad,
        method="SLSQP",
        bounds=nlp.variable_bounds(),
        constraints=[
            {"type": "eq", "fun": nlp.equalities, "jac": nlp.equalities_jac},
            {"type": "ineq", "fun": nlp.inequalities},
        ],
        options={"maxiter": max_iters, "ftol": 1e-12},
    )
    equality, sway = nlp.violations(result.x)
    return _Attempt(
        x=result.x,
        objective=nlp.objective(result.x),
        equality=equality,
        sway=sway,
        iterations=int(result.nit),
        message=str(result.message),
        hit_limit=result.status == 9,
    )


def _augmented_lagrangian(
    nlp: _WaypointNLP, eq_mult: np.ndarray, in_mult: np.ndarray, penalty: float
) -> Callable[[np.ndarray], float]:
    def lagrangian(z: np.ndarray) -> float:
        eq = nlp.equalities(z)
        ineq = nlp.inequalities(z)
        shifted = np.maximum(0.0, in_mult - penalty * ineq)
        return (
            nlp.objective(z)
            + float(eq_mult @ eq)
            + 0.5 * penalty * float(eq @ eq)
            + float(shifted @ shifted - in_mult @ in_mult) / (2.0 * penalty)
        )

    return lagrangian


def _run_auglag(nlp: _WaypointNLP, x0: np.ndarray, max_iters: int) -> _Attempt:
    """Augmented Lagrangian with an L-BFGS-B inner solver."""
    n_eq = nlp.equalities(x0).size
    n_in = nlp.inequalities(x0).size
    eq_mult = np.zeros(n_eq)
    in_mult = np.zeros(n_in)
    penalty = 10.0
    x = x0.copy()
    previous = math.inf
    iterations = 0
    outer = 0
    for outer in range(1, max(2, max_iters // 20) + 1):
        inner = scipy.optimize.minimize(
            _augmented_lagrangian(nlp, eq_mult, in_mult, penalty),
            x,
            method="L-BFGS-B",
            bounds=nlp.variable_bounds(),
            options={"maxiter": 500, "ftol": 1e-15, "gtol": 1e-10},
        )
        x = inner.x
        iterations += int(inner.nit)
        eq = nlp.equalities(x)
        ineq = nlp.inequalities(x)
        eq_mult = eq_mult + penalty * eq
        in_mult = np.maximum(0.0, in_mult - penalty * ineq)
        violation = max(float(np.max(np.abs(eq))), float(max(0.0, -np.min(ineq))))
        LOGGER.debug("auglag outer %d: violation %.2e, penalty %.1e", outer, violation, penalty)
        if violation <= 0.1 * EQUALITY_TOLERANCE:
            break
        if violation > 0.25 * previous:
            penalty = min(penalty * 10.0, 1e10)
        previous = violation
    equality, sway = nlp.violations(x)
    return _Attempt(
        x=x,
        objective=nlp.objective(x),
        equality=equality,
        sway=sway,
        iterations=iterations,
        message=f"augmented Lagrangian stopped after {outer} outer iterations",
        hit_limit=equality > EQUALITY_TOLERANCE and outer >= max(2, max_iters // 20),
    )


_RUNNERS: dict[NLPMethod, Callable[[_WaypointNLP, np.ndarray, int], _Attempt]] = {
    NLPMethod.SLSQP: _run_slsqp,
    NLPMethod.AUGLAG: _run_auglag,
}


def _tau_starts(problem: WaypointProblem, count: int) -> List[float]:
    low, high = problem.tau_bounds
    starts = [problem.tau_guess]
    for value in np.geomspace(low, high, count + 1)[1:-1]:
        if len(starts) >= count:
            break
        starts.append(float(value))
    return starts[:count]


class WaypointPlanner(StageEmitter):
    """Multi-start solver of the waypoint program."""

    stage = "benchmark"

    def __init__(
        self,
        params: Optional[CraneParams] = None,
        *,
        method: NLPMethod | str = NLPMethod.SLSQP,
        n_starts: int = 3,
        max_iters: int = 500,
        max_workers: Optional[int] = None,
        observer: StageObserver | None = None,
    ) -> None:
        super().__init__(observer)
        if n_starts < 1:
            raise ValueError("n_starts must be at least 1")
        self.params = params or CraneParams()
        self.method = NLPMethod(method)
        self.n_starts = n_starts
        self.max_iters = max_iters
        self.max_workers = max_workers

    def _trivial(self, problem: WaypointProblem) -> WaypointSolution:
        n = problem.n_waypoints
        tau = problem.tau_bounds[0]
        report = NLPReport(
            method=self.method.value,
            success=True,
            message="start equals target",
            iterations=0,
            starts=0,
            objective=tau,
            equality_residual=0.0,
            sway_violation=0.0,
        )
        return WaypointSolution(
            theta4=np.full(n, problem.start),
            dtheta4=np.zeros(n),
            ddtheta4=np.zeros(n),
            tau=tau,
            sway=np.zeros(((n - 1) * problem.substeps + 1, 4)),
            report=report,
        )

    def solve(self, problem: WaypointProblem) -> WaypointSolution:
        if problem.start == problem.target:
            return self._trivial(problem)
        started = time.perf_counter()
        nlp = _WaypointNLP(problem, self.params)
        runner = _RUNNERS[self.method]
        starts = _tau_starts(problem, self.n_starts)
        self.emit(
            StageEventKind.STAGE_STARTED,
            f"{self.method.value} from {len(starts)} segment-duration guesses",
            data={"tau_starts": starts},
        )
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            futures = [
                pool.submit(runner, nlp, nlp.initial_guess(tau), self.max_iters) for tau in starts
            ]
            attempts = []
            for index, future in enumerate(futures):
                attempt = future.result()
                attempts.append(attempt)
                self.emit(
                    StageEventKind.CELL_FINISHED,
                    f"tau0={starts[index]:g}: objective {attempt.objective:.4f}, "
                    f"equality {attempt.equality:.1e}, sway excess {attempt.sway:.1e}",
                    index=index,
                )

        feasible = [attempt for attempt in attempts if attempt.feasible]
        if not feasible:
            if all(attempt.hit_limit for attempt in attempts):
                raise SolverMaxIterations(
                    f"waypoint program hit {self.max_iters} iterations from every start"
                )
            worst = min(attempts, key=lambda attempt: attempt.equality + attempt.sway)
            raise InfeasibleProblem(
                "no feasible waypoint plan found "
                f"(equality {worst.equality:.1e}, sway excess {worst.sway:.1e})"
            )
        best = min(feasible, key=lambda attempt: attempt.objective)
        angle, rate, accel, tau = nlp.layout.split(best.x)
        report = NLPReport(
            method=self.method.value,
            success=True,
            message=best.message,
            iterations=sum(attempt.iterations for attempt in attempts),
            starts=len(attempts),
            objective=best.objective,
            equality_residual=best.equality,
            sway_violation=best.sway,
            solve_seconds=time.perf_counter() - started,
        )
        solution = WaypointSolution(
            theta4=angle.copy(),
            dtheta4=rate.copy(),
            ddtheta4=accel.copy(),
            tau=tau,
            sway=nlp.sway(best.x),
            report=report,
        )
        LOGGER.info(
            "waypoint plan: tau=%.3f s, total %.2f s, objective %.4f",
            tau,
            solution.total_time,
            best.objective,
        )
        return solution


def solve_waypoint_nlp(
    start: float,
    target: float,
    bounds: Optional[Bounds] = None,
    params: Optional[CraneParams] = None,
    *,
    method: NLPMethod | str = NLPMethod.SLSQP,
    n_starts: int = 3,
    max_iters: int = 500,
    convention: FiniteDifference | str = FiniteDifference.BACKWARD,
    rate: float = DEFAULT_RATE,
    verify: bool = True,
    observer: StageObserver | None = None,
) -> WaypointSolution:
    """Plan a rest-to-rest slew with the model-based waypoint program.

    The returned plan satisfies the boundary and difference equalities to 1e-8 and
    the sway bounds at every checkpoint to 1e-4 rad. With ``verify`` the plan is also
    played back on the crane simulator and the report records whether the rollout
    keeps the sway within 5e-3 rad of the path bound.

    Raises:
        InfeasibleProblem: If no start reaches a feasible point.
        SolverMaxIterations: If every start ran out of iterations.
    """
    problem = WaypointProblem(
        start, target, bounds or Bounds(), convention=FiniteDifference(convention)
    )
    params = params or CraneParams()
    planner = WaypointPlanner(
        params, method=method, n_starts=n_starts, max_iters=max_iters, observer=observer
    )
    solution = planner.solve(problem)
    if verify:
        rollout = plan_trajectory(solution, start, params, rate)
        max_sway = float(
            max(np.abs(rollout.channel("theta1")).max(), np.abs(rollout.channel("theta2")).max())
        )
        solution.report.rollout_max_sway = max_sway
        solution.report.rollout_verified = max_sway <= problem.bounds.sway + ROLLOUT_TOLERANCE
        if not solution.report.rollout_verified:
            LOGGER.warning(
                "rollout sway %.4f rad exceeds the path bound %.4f rad",
                max_sway,
                problem.bounds.sway,
            )
    return solution


def waypoint_playback(
    solution: WaypointSolution, rate: float = DEFAULT_RATE, hold: float = 10.0
) -> np.ndarray:
    """Boom acceleration input at ``rate`` that follows the planned rate profile.

    The rate is interpolated linearly between waypoints, so every input sample is the
    exact mean acceleration over its interval. The plan is followed by ``hold``
    seconds of zero input.
    """
    if hold < 0:
        raise ValueError("hold must be non-negative")
    knots = np.arange(solution.theta4.size) * solution.tau
    n_samples = int(math.ceil(solution.total_time * rate)) + int(round(hold * rate)) + 1
    times = np.arange(n_samples + 1) / rate
    velocity = np.interp(times, knots, solution.dtheta4, right=0.0)
    return np.diff(velocity) * rate


def plan_trajectory(
    solution: WaypointSolution,
    start: float,
    params: Optional[CraneParams] = None,
    rate: float = DEFAULT_RATE,
    hold: float = 10.0,
) -> Trajectory:
    """Noise-free simulator rollout of the played-back plan."""
    return rollout_boom_input(
        waypoint_playback(solution, rate, hold),
        params or CraneParams(),
        theta4_start=start,
        mode=ChannelMode.SIMULATION,
        rate=rate,
    )

