"""Operator-splitting solver for composite quadratic programs.

The iteration follows the OSQP scheme: one cached factorisation of
``P + sigma*I + rho*A'RA`` per penalty value, a projection onto the constraint box
and dual ascent. The L1 term gets its own copy of the variables and is handled by
soft-thresholding. Problems are Ruiz-equilibrated before iterating, and promising
iterates are refined on their guessed active set. A point is reported optimal only
when the unscaled residuals of :func:`kkt_residual` meet the tolerances.
"""
from __future__ import annotations

import dataclasses
import logging
import time
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from ..errors import DimensionMismatch
from .kkt import KKTResidual, kkt_residual
from .problem import CompositeQP, SolverReport, SolverSettings, SolverStatus

LOGGER = logging.getLogger(__name__)

MIN_SCALING = 1e-4
MAX_SCALING = 1e4
RHO_MIN = 1e-6
RHO_MAX = 1e6
RHO_REFACTOR_RATIO = 5.0
TIGHTENING_FACTOR = 0.1
REFINE_TOLERANCE = 1e-10


def _inf_norm(values: np.ndarray) -> float:
    if values.size == 0:
        return 0.0
    finite = values[np.isfinite(values)]
    return float(np.max(np.abs(finite))) if finite.size else 0.0


def soft_threshold(values: np.ndarray, threshold: np.ndarray | float) -> np.ndarray:
    """Proximal operator of ``threshold * |.|``."""
    return np.sign(values) * np.maximum(np.abs(values) - threshold, 0.0)


def _scaling_factors(norms: np.ndarray) -> np.ndarray:
    norms = np.where(norms < MIN_SCALING, 1.0, norms)
    return 1.0 / np.sqrt(np.clip(norms, MIN_SCALING, MAX_SCALING))


@dataclass(slots=True)
class ScaledProblem:
    """Equilibrated copy of a problem: ``g = D * x`` and unscaled duals ``E * y / c``."""

    P: np.ndarray
    q: np.ndarray
    A: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    lam: np.ndarray
    D: np.ndarray
    E: np.ndarray
    c: float
    n_eq: int


def equilibrate(problem: CompositeQP, iterations: int) -> ScaledProblem:
    """Ruiz equilibration of the KKT matrix followed by cost scaling."""
    n = problem.n
    P = problem.P.copy()
    q = problem.q.copy()
    A = np.vstack([problem.A_eq, problem.A_in])
    D = np.ones(n)
    E = np.ones(A.shape[0])
    for _ in range(iterations):
        col = np.max(np.abs(P), axis=0) if n else np.zeros(0)
        if A.shape[0]:
            col = np.maximum(col, np.max(np.abs(A), axis=0))
        d = _scaling_factors(col)
        e = _scaling_factors(np.max(np.abs(A), axis=1)) if A.shape[0] else np.ones(0)
        P = d[:, None] * P * d[None, :]
        q = d * q
        A = e[:, None] * A * d[None, :]
        D *= d
        E *= e
    mean_col = float(np.mean(np.max(np.abs(P), axis=0))) if n else 0.0
    cost_norm = max(mean_col, _inf_norm(q))
    c = 1.0 if cost_norm < MIN_SCALING else 1.0 / min(cost_norm, MAX_SCALING)
    lower = np.concatenate([problem.b_eq, np.full(problem.n_in, -np.inf)]) * E
    upper = np.concatenate([problem.b_eq, problem.b_in]) * E
    return ScaledProblem(
        P=P * c,
        q=q * c,
        A=A,
        lower=lower,
        upper=upper,
        lam=c * problem.lam * D,
        D=D,
        E=E,
        c=c,
        n_eq=problem.n_eq,
    )


@dataclass(slots=True)
class _Iterate:
    x: np.ndarray
    zc: np.ndarray
    z1: np.ndarray
    yc: np.ndarray
    y1: np.ndarray

    def copy(self) -> "_Iterate":
        return _Iterate(
            self.x.copy(), self.zc.copy(), self.z1.copy(), self.yc.copy(), self.y1.copy()
        )


@dataclass(slots=True)
class _Residuals:
    primal: float
    dual: float
    eps_primal: float
    eps_dual: float

    @property
    def converged(self) -> bool:
        return self.primal <= self.eps_primal and self.dual <= self.eps_dual

    @property
    def badness(self) -> float:
        primal = self.primal / max(self.eps_primal, 1e-300)
        return max(primal, self.dual / max(self.eps_dual, 1e-300))


@dataclass(frozen=True, slots=True)
class _Candidate:
    g: np.ndarray
    y_eq: np.ndarray
    y_in: np.ndarray
    residual: KKTResidual
    polished: bool


class SplittingSolver:
    """ADMM solver for :class:`CompositeQP` instances.

    ``OPTIMAL`` is only reported for points that pass the unscaled certificate of
    :meth:`certified`; converged iterates that fail it make the solver tighten its
    internal tolerances and keep iterating.

    Instances hold only settings, so one solver may serve many problems, also from
    several threads.
    """

    def __init__(self, settings: Optional[SolverSettings] = None) -> None:
        self.settings = settings or SolverSettings()

    def solve(self, problem: CompositeQP, warm_start: Optional[np.ndarray] = None) -> SolverReport:
        s = self.settings
        started = time.perf_counter()
        sp = equilibrate(problem, s.scaling_iters)
        n, mc = problem.n, sp.A.shape[0]
        weights = np.ones(mc)
        weights[: sp.n_eq] = s.rho_eq_scale
        gram = sp.A.T @ (weights[:, None] * sp.A) + np.eye(n)
        rho = s.rho
        factor = self._factor(sp, gram, rho)

        it = self._initial_iterate(sp, warm_start)
        best: Tuple[float, _Iterate, Optional[_Residuals]] = (np.inf, it.copy(), None)
        status = SolverStatus.MAX_ITERS
        tightening = 1.0
        tightenings = 0
        polish_wait = s.polish_interval
        next_polish = polish_wait
        iteration = 0
        residuals: Optional[_Residuals] = None

        for iteration in range(1, s.max_iters + 1):
            rho_c = rho * weights
            rhs = s.sigma * it.x - sp.q + sp.A.T @ (rho_c * it.zc - it.yc) + (rho * it.z1 - it.y1)
            x_tilde = scipy.linalg.cho_solve(factor, rhs, check_finite=False)
            z_tilde = sp.A @ x_tilde
            it.x = s.alpha * x_tilde + (1.0 - s.alpha) * it.x
            vc = s.alpha * z_tilde + (1.0 - s.alpha) * it.zc
            v1 = s.alpha * x_tilde + (1.0 - s.alpha) * it.z1
            zc = np.clip(vc + it.yc / rho_c, sp.lower, sp.upper) if mc else vc
            z1 = soft_threshold(v1 + it.y1 / rho, sp.lam / rho)
            delta_yc = rho_c * (vc - zc)
            it.yc = it.yc + delta_yc
            it.y1 = it.y1 + rho * (v1 - z1)
            it.zc, it.z1 = zc, z1

            if iteration % s.check_every and iteration != s.max_iters:
                continue
            residuals = self._residuals(sp, it, tightening)
            if residuals.badness < best[0]:
                best = (residuals.badness, it.copy(), residuals)
            if iteration % s.log_every < s.check_every:
                LOGGER.debug(
                    "iter %d: primal %.3e (eps %.1e) dual %.3e (eps %.1e) rho %.2e",
                    iteration,
                    residuals.primal,
                    residuals.eps_primal,
                    residuals.dual,
                    residuals.eps_dual,
                    rho,
                )
            if residuals.converged:
                candidate = self._certify(problem, sp, it)
                if candidate is not None:
                    return self._report_certified(problem, candidate, iteration, started)
                if tightenings >= s.max_tightenings:
                    LOGGER.warning(
                        "converged iterate failed the optimality check %d times; giving up",
                        tightenings + 1,
                    )
                    break
                tightenings += 1
                tightening *= TIGHTENING_FACTOR
                best = (np.inf, it.copy(), None)
                LOGGER.debug(
                    "iter %d: iterate not certified, tightening tolerances by %.0e",
                    iteration,
                    tightening,
                )
                continue
            if mc and self._primal_infeasible(sp, delta_yc):
                status = SolverStatus.INFEASIBLE
                break
            near = residuals.primal <= 1e3 * residuals.eps_primal and (
                residuals.dual <= 1e3 * residuals.eps_dual
            )
            if s.polish and near and iteration >= next_polish:
                polished = self._polish(problem, sp, it)
                if polished is not None:
                    return self._report_certified(problem, polished, iteration, started)
                polish_wait *= 2
                next_polish = iteration + polish_wait
            if s.adaptive_rho and iteration % s.adaptive_rho_interval < s.check_every:
                new_rho = self._balanced_rho(sp, it, rho)
                if new_rho > rho * RHO_REFACTOR_RATIO or new_rho < rho / RHO_REFACTOR_RATIO:
                    rho = new_rho
                    factor = self._factor(sp, gram, rho)

        if status is SolverStatus.INFEASIBLE:
            assert residuals is not None
            LOGGER.info("primal infeasibility certified after %d iterations", iteration)
            return self._report(problem, sp, it, residuals, status, iteration, started)

        if best[2] is not None:
            _, it, residuals = best
        assert residuals is not None
        candidate = self._certify(problem, sp, it)
        if candidate is not None:
            return self._report_certified(problem, candidate, iteration, started)
        LOGGER.warning(
            "solver stopped after %d iterations without a certified point "
            "(primal %.3e, dual %.3e); returning best iterate",
            iteration,
            residuals.primal,
            residuals.dual,
        )
        return self._report(problem, sp, it, residuals, status, iteration, started)

    def certified(
        self,
        problem: CompositeQP,
        g: np.ndarray,
        y_eq: np.ndarray,
        y_in: np.ndarray,
        residual: Optional[KKTResidual] = None,
    ) -> bool:
        """Check a point against the unscaled optimality certificate.

        Equalities must hold to ``max(eps_abs, eps_rel * (1 + |b_eq|_inf))``, inequalities
        to ``max(eps_abs, eps_rel)``; stationarity and dual sign are measured relative
        to the largest term of the gradient.
        """
        s = self.settings
        if residual is None:
            residual = kkt_residual(problem, g, y_eq, y_in)
        eq_tol = max(s.eps_abs, s.eps_rel * (1.0 + _inf_norm(problem.b_eq)))
        in_tol = max(s.eps_abs, s.eps_rel)
        dual_tol = self._dual_tolerance(problem, g, y_eq, y_in)
        equality = _inf_norm(problem.A_eq @ g - problem.b_eq) if problem.n_eq else 0.0
        inequality = (
            float(np.max(problem.A_in @ g - problem.b_in, initial=0.0)) if problem.n_in else 0.0
        )
        return (
            equality <= eq_tol
            and inequality <= in_tol
            and residual.stationarity <= dual_tol
            and residual.dual_sign <= dual_tol
            and residual.complementarity <= max(in_tol, dual_tol) * max(1.0, _inf_norm(y_in))
        )

    # Internals -----------------------------------------------------------
    def _initial_iterate(self, sp: ScaledProblem, warm_start: Optional[np.ndarray]) -> _Iterate:
        n, mc = sp.P.shape[0], sp.A.shape[0]
        if warm_start is None:
            x = np.zeros(n)
        else:
            start = np.asarray(warm_start, dtype=float).ravel()
            if start.size != n:
                raise DimensionMismatch(f"warm start has {start.size} entries, expected {n}")
            x = start / sp.D
        return _Iterate(
            x=x,
            zc=np.clip(sp.A @ x, sp.lower, sp.upper) if mc else np.zeros(0),
            z1=x.copy(),
            yc=np.zeros(mc),
            y1=np.zeros(n),
        )

    def _factor(self, sp: ScaledProblem, gram: np.ndarray, rho: float):
        system = sp.P + self.settings.sigma * np.eye(sp.P.shape[0]) + rho * gram
        return scipy.linalg.cho_factor(system, check_finite=False)

    def _residuals(self, sp: ScaledProblem, it: _Iterate, tightening: float) -> _Residuals:
        s = self.settings
        eps_abs, eps_rel = s.eps_abs * tightening, s.eps_rel * tightening
        Ax = sp.A @ it.x
        Px = sp.P @ it.x
        Aty = sp.A.T @ it.yc
        primal = max(_inf_norm((Ax - it.zc) / sp.E), _inf_norm(sp.D * (it.x - it.z1)))
        eps_primal = eps_abs + eps_rel * max(
            _inf_norm(Ax / sp.E), _inf_norm(it.zc / sp.E), _inf_norm(sp.D * it.x)
        )
        dual = _inf_norm((Px + sp.q + Aty + it.y1) / sp.D) / sp.c
        dual_scale = max(
            _inf_norm(Px / sp.D),
            _inf_norm(Aty / sp.D),
            _inf_norm(it.y1 / sp.D),
            _inf_norm(sp.q / sp.D),
        )
        eps_dual = eps_abs + eps_rel * dual_scale / sp.c
        return _Residuals(primal, dual, eps_primal, eps_dual)

    @staticmethod
    def _balanced_rho(sp: ScaledProblem, it: _Iterate, rho: float) -> float:
        tiny = 1e-30
        Ax = sp.A @ it.x
        primal = max(_inf_norm(Ax - it.zc), _inf_norm(it.x - it.z1))
        primal_scale = max(_inf_norm(Ax), _inf_norm(it.zc), _inf_norm(it.x), _inf_norm(it.z1))
        Px = sp.P @ it.x
        Aty = sp.A.T @ it.yc + it.y1
        dual = _inf_norm(Px + sp.q + Aty)
        dual_scale = max(_inf_norm(Px), _inf_norm(Aty), _inf_norm(sp.q))
        ratio = (primal / (primal_scale + tiny)) / (dual / (dual_scale + tiny) + tiny)
        return float(np.clip(rho * np.sqrt(ratio), RHO_MIN, RHO_MAX))

    def _primal_infeasible(self, sp: ScaledProblem, delta_y: np.ndarray) -> bool:
        eps = self.settings.eps_pinf
        norm = _inf_norm(sp.E * delta_y)
        if norm <= 1e-12:
            return False
        if _inf_norm((sp.A.T @ delta_y) / sp.D) > eps * norm:
            return False
        positive = np.maximum(delta_y, 0.0)
        negative = np.minimum(delta_y, 0.0)
        upper_open = ~np.isfinite(sp.upper)
        lower_open = ~np.isfinite(sp.lower)
        if np.any(sp.E[upper_open] * positive[upper_open] > eps * norm):
            return False
        if np.any(-sp.E[lower_open] * negative[lower_open] > eps * norm):
            return False
        support = float(
            np.sum(np.where(upper_open, 0.0, sp.upper) * positive)
            + np.sum(np.where(lower_open, 0.0, sp.lower) * negative)
        )
        return support < -eps * norm

    def _dual_tolerance(
        self, problem: CompositeQP, g: np.ndarray, y_eq: np.ndarray, y_in: np.ndarray
    ) -> float:
        s = self.settings
        scale = max(1.0, _inf_norm(problem.q), problem.lam, _inf_norm(problem.P @ g))
        if problem.n_eq:
            scale = max(scale, _inf_norm(problem.A_eq.T @ y_eq))
        if problem.n_in:
            scale = max(scale, _inf_norm(problem.A_in.T @ y_in))
        return max(s.eps_abs, s.eps_rel * scale)

    def _certify(
        self, problem: CompositeQP, sp: ScaledProblem, it: _Iterate
    ) -> Optional[_Candidate]:
        """Return the first certified point among the refined and the raw iterates."""
        if self.settings.polish:
            polished = self._polish(problem, sp, it)
            if polished is not None:
                return polished
        y = sp.E * it.yc / sp.c
        y_eq, y_in = y[: sp.n_eq], y[sp.n_eq :]
        points = [sp.D * it.z1, sp.D * it.x] if problem.lam > 0 else [sp.D * it.x]
        for g in points:
            residual = kkt_residual(problem, g, y_eq, y_in)
            if self.certified(problem, g, y_eq, y_in, residual):
                return _Candidate(g, y_eq, y_in, residual, polished=False)
        return None

    def _polish(
        self, problem: CompositeQP, sp: ScaledProblem, it: _Iterate
    ) -> Optional[_Candidate]:
        """Primal-dual active-set refinement seeded with the support of the iterate."""
        n, mc = problem.n, sp.A.shape[0]
        if problem.lam > 0:
            signs = np.sign(it.z1)
            free = signs != 0.0
        else:
            signs = np.zeros(n)
            free = np.ones(n, dtype=bool)
        active = np.zeros(mc, dtype=bool)
        active[: sp.n_eq] = True
        ineq = slice(sp.n_eq, None)
        active[ineq] = (
            (it.yc[ineq] > 0)
            & (sp.upper[ineq] - it.zc[ineq] < it.yc[ineq])
            & np.isfinite(sp.upper[ineq])
        )

        residual: Optional[KKTResidual] = None
        for _ in range(self.settings.polish_passes):
            solved = self._solve_active_set(sp, free, signs, active)
            if solved is None:
                return None
            x, y = solved
            g = sp.D * x
            y = sp.E * y / sp.c
            y_eq, y_in = y[: sp.n_eq], y[sp.n_eq :]
            residual = kkt_residual(problem, g, y_eq, y_in)
            if self.certified(problem, g, y_eq, y_in, residual):
                return _Candidate(g, y_eq, y_in, residual, polished=True)
            if not self._update_active_set(problem, sp, g, y_eq, y_in, free, signs, active):
                break
        if residual is not None:
            LOGGER.debug("active-set refinement rejected (worst KKT residual %.3e)", residual.worst)
        return None

    def _update_active_set(
        self,
        problem: CompositeQP,
        sp: ScaledProblem,
        g: np.ndarray,
        y_eq: np.ndarray,
        y_in: np.ndarray,
        free: np.ndarray,
        signs: np.ndarray,
        active: np.ndarray,
    ) -> bool:
        s = self.settings
        changed = False
        if problem.lam > 0:
            gradient = problem.P @ g + problem.q
            if problem.n_eq:
                gradient = gradient + problem.A_eq.T @ y_eq
            if problem.n_in:
                gradient = gradient + problem.A_in.T @ y_in
            dual_tol = self._dual_tolerance(problem, g, y_eq, y_in)
            leaving = free & (g * signs <= 0.0)
            entering = ~free & (np.abs(gradient) > problem.lam + dual_tol)
            free[leaving] = False
            signs[leaving] = 0.0
            free[entering] = True
            signs[entering] = -np.sign(gradient[entering])
            changed = bool(leaving.any() or entering.any())
        if problem.n_in:
            rows = active[sp.n_eq :]
            slack = problem.A_in @ g - problem.b_in
            leaving = rows & (y_in < 0.0)
            entering = ~rows & (slack > max(s.eps_abs, s.eps_rel))
            rows[leaving] = False
            rows[entering] = True
            changed = changed or bool(leaving.any() or entering.any())
        return changed

    def _solve_active_set(
        self, sp: ScaledProblem, free: np.ndarray, signs: np.ndarray, active: np.ndarray
    ) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        s = self.settings
        F = np.flatnonzero(free)
        A_act = sp.A[active][:, F]
        n_free, n_act = F.size, A_act.shape[0]
        size = n_free + n_act
        exact = np.zeros((size, size))
        exact[:n_free, :n_free] = sp.P[np.ix_(F, F)]
        exact[:n_free, n_free:] = A_act.T
        exact[n_free:, :n_free] = A_act
        rhs = np.concatenate([-sp.q[F] - sp.lam[F] * signs[F], sp.upper[active]])
        if size == 0:
            return np.zeros(sp.P.shape[0]), np.zeros(sp.A.shape[0])

        regularized = exact + np.diag(
            np.concatenate([np.full(n_free, s.polish_delta), np.full(n_act, -s.polish_delta)])
        )
        solution: Optional[np.ndarray] = None
        try:
            lu = scipy.linalg.lu_factor(regularized, check_finite=False)
            solution = scipy.linalg.lu_solve(lu, rhs, check_finite=False)
            for _ in range(s.refine_iters):
                correction = scipy.linalg.lu_solve(lu, rhs - exact @ solution, check_finite=False)
                solution = solution + correction
        except (np.linalg.LinAlgError, ValueError):
            solution = None
        scale = max(1.0, _inf_norm(rhs))
        if (
            solution is None
            or not np.all(np.isfinite(solution))
            or _inf_norm(rhs - exact @ solution) > REFINE_TOLERANCE * scale
        ):
            try:
                solution = scipy.linalg.lstsq(exact, rhs, check_finite=False)[0]
            except (np.linalg.LinAlgError, ValueError):
                return None
        if not np.all(np.isfinite(solution)):
            return None

        x = np.zeros(sp.P.shape[0])
        x[F] = solution[:n_free]
        y = np.zeros(sp.A.shape[0])
        y[active] = solution[n_free:]
        return x, y

    @staticmethod
    def _report_certified(
        problem: CompositeQP, candidate: _Candidate, iteration: int, started: float
    ) -> SolverReport:
        LOGGER.debug(
            "%s solution certified after %d iterations",
            "refined" if candidate.polished else "iterated",
            iteration,
        )
        return SolverReport(
            g=candidate.g,
            status=SolverStatus.OPTIMAL,
            primal_residual=candidate.residual.primal,
            dual_residual=candidate.residual.stationarity,
            iterations=iteration,
            objective=problem.objective(candidate.g),
            y_eq=candidate.y_eq,
            y_in=candidate.y_in,
            polished=candidate.polished,
            kkt=candidate.residual.worst,
            solve_seconds=time.perf_counter() - started,
        )

    @staticmethod
    def _report(
        problem: CompositeQP,
        sp: ScaledProblem,
        it: _Iterate,
        residuals: _Residuals,
        status: SolverStatus,
        iteration: int,
        started: float,
    ) -> SolverReport:
        g = sp.D * it.x
        y = sp.E * it.yc / sp.c
        y_eq, y_in = y[: sp.n_eq], y[sp.n_eq :]
        return SolverReport(
            g=g,
            status=status,
            primal_residual=residuals.primal,
            dual_residual=residuals.dual,
            iterations=iteration,
            objective=problem.objective(g),
            y_eq=y_eq,
            y_in=y_in,
            kkt=kkt_residual(problem, g, y_eq, y_in).worst,
            solve_seconds=time.perf_counter() - started,
        )


def solve(
    problem: CompositeQP,
    tol_abs: Optional[float] = None,
    tol_rel: Optional[float] = None,
    max_iters: Optional[int] = None,
    settings: Optional[SolverSettings] = None,
    warm_start: Optional[np.ndarray] = None,
) -> SolverReport:
    """Solve ``problem`` with the splitting solver.

    Args:
        problem: Composite quadratic program.
        tol_abs: Absolute residual tolerance (default 1e-8).
        tol_rel: Relative residual tolerance (default 1e-6).
        max_iters: Iteration cap (default 200000).
        settings: Full settings; explicit arguments above override its fields.
        warm_start: Initial primal point, e.g. a least-squares solution of the equalities.

    Returns:
        Report with status ``OPTIMAL`` (certified point), ``MAX_ITERS`` (best
        iterate) or ``INFEASIBLE``.
    """
    base = settings or SolverSettings()
    tuned = dataclasses.replace(
        base,
        eps_abs=base.eps_abs if tol_abs is None else tol_abs,
        eps_rel=base.eps_rel if tol_rel is None else tol_rel,
        max_iters=base.max_iters if max_iters is None else max_iters,
    )
    report = SplittingSolver(tuned).solve(problem, warm_start)
    LOGGER.debug(
        "solve finished: %s after %d iterations (objective %.6g)",
        report.status.value,
        report.iterations,
        report.objective,
    )
    return report
