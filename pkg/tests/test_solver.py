"""
Tests for the composite QP container, the splitting solver and its certificate.
"""

import itertools

import numpy as np
import pytest

from crane_behavior.behavior import IndexSet
from crane_behavior.errors import DimensionMismatch, InfeasibleProblem
from crane_behavior.solver import (
    BoxConstraint,
    CompositeQP,
    SolverSettings,
    SolverStatus,
    SplittingSolver,
    WeightSpec,
    assemble_recovery_qp,
    box_rows,
    kkt_residual,
    load_problem,
    save_problem,
    signed_selection,
    soft_threshold,
    solve,
)


def _random_qp(rng: np.random.Generator, n: int, n_eq: int, n_in: int, lam: float) -> CompositeQP:
    """Feasible random instance: the constraints hold at a random point."""
    root = rng.standard_normal((n, n))
    P = root @ root.T + 0.1 * np.eye(n)
    anchor = rng.standard_normal(n)
    A_eq = rng.standard_normal((n_eq, n))
    A_in = rng.standard_normal((n_in, n))
    return CompositeQP(
        P=P,
        q=rng.standard_normal(n),
        lam=lam,
        A_eq=A_eq,
        b_eq=A_eq @ anchor,
        A_in=A_in,
        b_in=A_in @ anchor + rng.uniform(0.0, 1.0, n_in),
    )


class TestCompositeQP:
    """Test cases for problem validation."""

    def test_shape_mismatch(self):
        """Test that P must match q."""
        with pytest.raises(DimensionMismatch):
            CompositeQP(P=np.eye(3), q=np.zeros(2))

    def test_asymmetric_rejected(self):
        """Test that a non-symmetric P is rejected."""
        with pytest.raises(ValueError, match="symmetric"):
            CompositeQP(P=np.array([[1.0, 2.0], [0.0, 1.0]]), q=np.zeros(2))

    def test_negative_lambda(self):
        """Test that a negative L1 weight is rejected."""
        with pytest.raises(ValueError, match="lam must be non-negative"):
            CompositeQP(P=np.eye(2), q=np.zeros(2), lam=-1.0)

    def test_objective_includes_offset(self):
        """Test that the constant offset enters the objective."""
        problem = CompositeQP(P=np.eye(2), q=np.array([1.0, 0.0]), lam=2.0, offset=3.0)
        g = np.array([1.0, -1.0])
        assert problem.objective(g) == pytest.approx(0.5 * 2 + 1.0 + 2.0 * 2 + 3.0)

    def test_constraint_violation(self):
        """Test the worst-case violation of equalities and inequalities."""
        problem = CompositeQP(
            P=np.eye(2),
            q=np.zeros(2),
            A_eq=np.array([[1.0, 1.0]]),
            b_eq=np.array([1.0]),
            A_in=np.array([[1.0, 0.0]]),
            b_in=np.array([0.0]),
        )
        assert problem.constraint_violation(np.array([0.5, 0.5])) == pytest.approx(0.5)
        assert problem.constraint_violation(np.array([0.0, 1.0])) == 0.0


class TestSplittingSolver:
    """Test cases for the ADMM solver on problems with known solutions."""

    def test_soft_threshold(self):
        """Test the L1 proximal operator."""
        np.testing.assert_allclose(soft_threshold(np.array([3.0, -0.5, -2.0]), 1.0), [2, 0, -1])

    def test_unconstrained_quadratic(self):
        """Test that an unconstrained problem returns -P^-1 q."""
        P = np.array([[4.0, 1.0], [1.0, 3.0]])
        q = np.array([1.0, -2.0])
        report = solve(CompositeQP(P=P, q=q))
        assert report.status is SolverStatus.OPTIMAL
        np.testing.assert_allclose(report.g, -np.linalg.solve(P, q), atol=1e-7)

    def test_scalar_lasso(self):
        """Test that 1/2 (g - 3)^2 + |g| is minimised at g = 2."""
        report = solve(CompositeQP(P=np.eye(1), q=np.array([-3.0]), lam=1.0))
        np.testing.assert_allclose(report.g, [2.0], atol=1e-7)

    def test_lasso_zeroes_small_coefficients(self):
        """Test that coefficients below the L1 weight vanish exactly."""
        report = solve(CompositeQP(P=np.eye(3), q=np.array([-0.5, 2.0, -4.0]), lam=1.0))
        np.testing.assert_allclose(report.g, [0.0, -1.0, 3.0], atol=1e-7)
        assert report.g[0] == 0.0

    def test_equality_constraint(self):
        """Test the minimum-norm point on a line."""
        problem = CompositeQP(
            P=np.eye(2), q=np.zeros(2), A_eq=np.array([[1.0, 1.0]]), b_eq=np.array([1.0])
        )
        report = solve(problem)
        np.testing.assert_allclose(report.g, [0.5, 0.5], atol=1e-7)
        assert report.y_eq[0] == pytest.approx(-0.5, abs=1e-6)

    def test_active_inequality(self):
        """Test a bound that cuts off the unconstrained optimum."""
        problem = CompositeQP(
            P=np.eye(2),
            q=np.array([-2.0, -2.0]),
            A_in=np.array([[1.0, 0.0]]),
            b_in=np.array([1.0]),
        )
        report = solve(problem)
        np.testing.assert_allclose(report.g, [1.0, 2.0], atol=1e-7)
        assert report.y_in[0] == pytest.approx(1.0, abs=1e-6)

    def test_infinite_bounds_are_ignored(self):
        """Test that +inf right-hand sides impose nothing."""
        problem = CompositeQP(
            P=np.eye(1), q=np.array([-1.0]), A_in=np.array([[1.0]]), b_in=np.array([np.inf])
        )
        np.testing.assert_allclose(solve(problem).g, [1.0], atol=1e-7)

    def test_infeasible_detected(self):
        """Test that g <= -1 and g >= 1 is certified infeasible."""
        problem = CompositeQP(
            P=np.eye(1),
            q=np.zeros(1),
            A_in=np.array([[1.0], [-1.0]]),
            b_in=np.array([-1.0, -1.0]),
        )
        report = solve(problem, max_iters=5000)
        assert report.status is SolverStatus.INFEASIBLE
        with pytest.raises(InfeasibleProblem, match="infeasible"):
            report.require_feasible()

    def test_max_iterations_returns_best_iterate(self):
        """Test that hitting the cap returns a report instead of raising."""
        rng = np.random.default_rng(3)
        problem = _random_qp(rng, 20, 3, 10, 0.5)
        report = solve(problem, max_iters=10, settings=SolverSettings(polish=False))
        assert report.status is SolverStatus.MAX_ITERS
        assert report.g.shape == (20,)

    def test_invalid_settings(self):
        """Test that the over-relaxation factor is range-checked."""
        with pytest.raises(ValueError, match="alpha must be in"):
            SolverSettings(alpha=2.5)

    @pytest.mark.parametrize("seed", range(20))
    def test_random_instances_certified(self, seed):
        """Test KKT certification on random feasible instances."""
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 30))
        problem = _random_qp(rng, n, int(rng.integers(0, 3)), int(rng.integers(0, 10)), 0.3)
        report = solve(problem)
        assert report.status is SolverStatus.OPTIMAL
        residual = kkt_residual(problem, report.g, report.y_eq, report.y_in)
        assert residual.worst <= 1e-5

    @pytest.mark.parametrize("seed", range(10))
    def test_small_instances_match_sign_enumeration(self, seed):
        """Test three-variable lasso instances against every support and sign pattern."""
        rng = np.random.default_rng(100 + seed)
        problem = _random_qp(rng, 3, 0, 0, 0.5)
        best = problem.objective(np.zeros(3))
        for pattern in itertools.product((-1, 0, 1), repeat=3):
            signs = np.array(pattern, dtype=float)
            support = np.flatnonzero(signs)
            if support.size == 0:
                continue
            g = np.zeros(3)
            g[support] = np.linalg.solve(
                problem.P[np.ix_(support, support)],
                -(problem.q[support] + problem.lam * signs[support]),
            )
            if np.all(np.sign(g[support]) == signs[support]):
                best = min(best, problem.objective(g))
        report = solve(problem)
        assert report.objective == pytest.approx(best, abs=1e-4)

    @pytest.mark.parametrize("seed", range(10))
    def test_optimal_reports_pass_the_certificate(self, seed):
        """Test that every optimal report meets the unscaled equality and KKT tolerances."""
        rng = np.random.default_rng(200 + seed)
        problem = _random_qp(rng, 15, 3, 8, 0.5)
        report = solve(problem)
        assert report.status is SolverStatus.OPTIMAL
        assert SplittingSolver().certified(problem, report.g, report.y_eq, report.y_in)
        equality = np.max(np.abs(problem.A_eq @ report.g - problem.b_eq))
        assert equality <= 1e-6 * (1.0 + np.max(np.abs(problem.b_eq)))
        assert report.kkt == pytest.approx(
            kkt_residual(problem, report.g, report.y_eq, report.y_in).worst
        )

    def test_lasso_keeps_equalities(self):
        """Test that sparse solutions still satisfy the equality constraints."""
        problem = CompositeQP(
            P=np.eye(3),
            q=np.array([-0.5, 2.0, -4.0]),
            lam=1.0,
            A_eq=np.array([[1.0, 1.0, 1.0]]),
            b_eq=np.array([1.0]),
        )
        report = solve(problem)
        assert report.status is SolverStatus.OPTIMAL
        assert abs(float(problem.A_eq[0] @ report.g) - 1.0) <= 2e-6
        assert SplittingSolver().certified(problem, report.g, report.y_eq, report.y_in)

    def test_uncertified_convergence_is_not_optimal(self, monkeypatch):
        """Test that converged iterates failing the certificate end as MAX_ITERS."""
        monkeypatch.setattr(SplittingSolver, "certified", lambda self, *args, **kwargs: False)
        problem = CompositeQP(P=np.eye(2), q=np.array([1.0, -1.0]))
        report = solve(problem, max_iters=5000, settings=SolverSettings(max_tightenings=1))
        assert report.status is SolverStatus.MAX_ITERS
        assert not report.polished
        assert report.iterations < 5000

    def test_warm_start_at_optimum(self):
        """Test that starting at the minimiser converges at the first check."""
        P = np.array([[4.0, 1.0], [1.0, 3.0]])
        q = np.array([1.0, -2.0])
        optimum = -np.linalg.solve(P, q)
        report = solve(CompositeQP(P=P, q=q), warm_start=optimum)
        assert report.status is SolverStatus.OPTIMAL
        assert report.iterations == SolverSettings().check_every
        np.testing.assert_allclose(report.g, optimum, atol=1e-9)

    def test_warm_start_size_checked(self):
        """Test that the warm start must have one entry per variable."""
        with pytest.raises(DimensionMismatch, match="warm start"):
            solve(CompositeQP(P=np.eye(2), q=np.zeros(2)), warm_start=np.zeros(3))

    def test_lasso_path_shrinks_l1_norm(self):
        """Test that a larger L1 weight never increases the L1 norm of the solution."""
        rng = np.random.default_rng(11)
        base = _random_qp(rng, 12, 2, 0, 0.0)
        norms = []
        for lam in (0.0, 0.1, 0.5, 1.0, 5.0):
            problem = CompositeQP(P=base.P, q=base.q, lam=lam, A_eq=base.A_eq, b_eq=base.b_eq)
            report = solve(problem)
            assert report.status is SolverStatus.OPTIMAL
            norms.append(float(np.sum(np.abs(report.g))))
        assert all(later <= earlier + 1e-6 for earlier, later in zip(norms, norms[1:]))

    def test_objective_beats_simple_feasible_points(self):
        """Test that the optimum is no worse than zero or the least-squares point."""
        rng = np.random.default_rng(12)
        root = rng.standard_normal((8, 8))
        target = rng.standard_normal(8)
        problem = CompositeQP(P=root.T @ root, q=-root.T @ target, lam=0.3)
        report = solve(problem)
        least_squares = np.linalg.lstsq(root, target, rcond=None)[0]
        assert report.objective <= problem.objective(np.zeros(8)) + 1e-8
        assert report.objective <= problem.objective(least_squares) + 1e-8


class TestKKT:
    """Test cases for the optimality certificate."""

    def test_zero_at_optimum(self):
        """Test that the exact lasso solution has zero residual."""
        problem = CompositeQP(P=np.eye(1), q=np.array([-3.0]), lam=1.0)
        assert kkt_residual(problem, np.array([2.0])).worst == pytest.approx(0.0, abs=1e-14)

    def test_subgradient_interval_at_zero(self):
        """Test that zero is optimal when the gradient fits in [-lam, lam]."""
        problem = CompositeQP(P=np.eye(1), q=np.array([-0.5]), lam=1.0)
        assert kkt_residual(problem, np.zeros(1)).stationarity == 0.0

    def test_detects_suboptimal_point(self):
        """Test that a wrong point shows a stationarity violation."""
        problem = CompositeQP(P=np.eye(1), q=np.array([-3.0]), lam=1.0)
        assert kkt_residual(problem, np.array([1.0])).stationarity == pytest.approx(1.0)


class TestAssembly:
    """Test cases for the recovery QP assembly."""

    def test_objective_equals_norm_cost(self, lti_model):
        """Test that the QP objective reproduces the weighted norm cost."""
        rng = np.random.default_rng(0)
        rows = lti_model.n_rows
        known = IndexSet.from_indices(range(0, rows, 3))
        known_vals = rng.standard_normal(len(known))
        w_ref = rng.standard_normal(rows)
        D = np.eye(rows) - np.eye(rows, k=1)
        problem = assemble_recovery_qp(
            lti_model,
            known,
            known_vals,
            weights=WeightSpec.uniform(2.0, 0.5),
            lam=0.1,
            mu=3.0,
            sigma=0.7,
            w_ref=w_ref,
            difference_operator=D,
        )
        g = rng.standard_normal(lti_model.n_columns)
        w = lti_model.matrix @ g
        direct = (
            2.0 * np.sum((known_vals - w[known.indices]) ** 2)
            + 3.0 * 0.5 * np.sum((w_ref - w) ** 2)
            + 0.7 * np.sum((D @ w) ** 2)
            + 0.1 * np.sum(np.abs(g))
        )
        assert problem.objective(g) == pytest.approx(direct, rel=1e-10)

    def test_known_value_count(self, lti_model):
        """Test that index and value counts must agree."""
        with pytest.raises(DimensionMismatch):
            assemble_recovery_qp(lti_model, IndexSet.from_indices([0, 1]), np.zeros(3))

    def test_reference_required(self, lti_model):
        """Test that mu > 0 needs a reference."""
        with pytest.raises(DimensionMismatch, match="reference"):
            assemble_recovery_qp(lti_model, IndexSet.from_indices([0]), [0.0], mu=1.0)

    def test_signed_selection(self):
        """Test the signed selection matrix."""
        matrix = signed_selection(IndexSet.from_indices([1, 3]), np.array([1.0, -1.0]), 4)
        np.testing.assert_array_equal(matrix, [[0, 1, 0, 0], [0, 0, 0, -1]])

    def test_box_rows_drop_infinite_sides(self):
        """Test that a one-sided box yields one row per element."""
        H = np.eye(3)
        box = BoxConstraint(IndexSet.from_indices([0, 2]), -np.inf, [1.0, 2.0])
        A, b = box_rows(H, box)
        np.testing.assert_array_equal(A, [[1, 0, 0], [0, 0, 1]])
        np.testing.assert_array_equal(b, [1.0, 2.0])

    def test_box_order_checked(self):
        """Test that lower bounds above upper bounds are rejected."""
        with pytest.raises(ValueError, match="lower bounds"):
            BoxConstraint(IndexSet.from_indices([0]), 1.0, 0.0)


def test_problem_archive_round_trip(tmp_path) -> None:
    """Test saving and loading a problem archive."""
    problem = _random_qp(np.random.default_rng(9), 4, 1, 2, 0.25)
    path = save_problem(problem, tmp_path / "qp.npz")
    loaded = load_problem(path)
    np.testing.assert_array_equal(loaded.P, problem.P)
    np.testing.assert_array_equal(loaded.b_in, problem.b_in)
    assert loaded.lam == problem.lam
    g = np.ones(4)
    assert loaded.objective(g) == pytest.approx(problem.objective(g))
