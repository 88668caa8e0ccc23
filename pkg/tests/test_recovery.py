"""
Tests for missing-data recovery, nonparametric simulation and trajectory generation.
"""

import dataclasses
import importlib
import logging

import numpy as np
import pytest

from crane_behavior.behavior import IndexSet, denoise_svd, hankel_from_matrix, truncate
from crane_behavior.channels import ChannelMode
from crane_behavior.dynamics import CraneParams, rollout_boom_input
from crane_behavior.errors import (
    ChannelMismatch,
    DegenerateNullspace,
    DimensionMismatch,
    SolverMaxIterations,
)
from crane_behavior.recovery import (
    RecoveryProblem,
    SimulationSpec,
    TrajectoryGenSpec,
    assemble_generation_qp,
    build_reference,
    build_total_variation_operator,
    endpoint_indices,
    generate_trajectory,
    indirect_generate,
    nonparametric_simulate,
    recover,
    trajectory_bounds,
)
from crane_behavior.recovery import generation as generation_module
from crane_behavior.solver import (
    SolverReport,
    SolverSettings,
    SolverStatus,
    SplittingSolver,
    WeightSpec,
    assemble_recovery_qp,
    solve,
)
from crane_behavior.tuning import score_trajectory

from .conftest import lti_trajectory

TIGHT = SolverSettings(eps_abs=1e-10, eps_rel=1e-9)

recover_module = importlib.import_module("crane_behavior.recovery.recover")


def _stopped_report(n: int) -> SolverReport:
    return SolverReport(
        g=np.zeros(n),
        status=SolverStatus.MAX_ITERS,
        primal_residual=1.0,
        dual_residual=1.0,
        iterations=7,
        objective=0.0,
    )


def _crane_layout_model(depth: int = 30, columns: int = 40):
    rng = np.random.default_rng(0)
    matrix = rng.standard_normal((5 * depth, columns))
    return hankel_from_matrix(
        matrix, depth, m=1, rate=20.0, channel_names=ChannelMode.SIMULATION.channel_names
    )


class TestRecover:
    """Test cases for recovery on an exact LTI model."""

    @pytest.mark.parametrize("seed", range(100, 120))
    def test_held_out_outputs(self, lti_model, seed):
        """Test that later outputs follow from three full samples and the inputs."""
        window = lti_trajectory(10, seed=seed)
        known = IndexSet.samples(range(3), 2).union(IndexSet.channels(range(3, 10), [0], 2))
        result = recover(RecoveryProblem.from_partial(lti_model, window.data, known), TIGHT)
        np.testing.assert_allclose(result.w_hat.data, window.data, atol=1e-6)

    def test_problem_validation(self, lti_model):
        """Test that index and value counts must agree."""
        with pytest.raises(DimensionMismatch):
            RecoveryProblem(lti_model, IndexSet.from_indices([0, 1]), np.zeros(3))

    def test_partial_length_checked(self, lti_model):
        """Test that the full-length vector must match the window."""
        with pytest.raises(DimensionMismatch):
            RecoveryProblem.from_partial(lti_model, np.zeros(5), IndexSet.from_indices([0]))


class TestNonparametricSimulation:
    """Test cases for simulation from initial samples and inputs."""

    def test_lti_prediction(self, lti_model):
        """Test that the simulation reproduces a held-out response."""
        window = lti_trajectory(10, seed=42)
        spec = SimulationSpec.from_trajectory(window, n_ini=3)
        result = nonparametric_simulate(lti_model, spec, settings=TIGHT)
        np.testing.assert_allclose(result.w_hat.data, window.data, atol=1e-6)
        assert result.report.optimal

    def test_known_elements_kept_within_epsilon(self, lti_model):
        """Test that the known elements stay inside the slack band."""
        window = lti_trajectory(10, seed=43)
        spec = SimulationSpec.from_trajectory(window, n_ini=3, epsilon=1e-4)
        result = nonparametric_simulate(lti_model, spec, settings=TIGHT)
        idx, values = spec.known(2, 1)
        assert np.max(np.abs(result.w_hat.data[idx.indices] - values)) <= 1e-4 + 1e-7

    def test_depth_mismatch(self, lti_model):
        """Test that the simulation spec must span the model depth."""
        window = lti_trajectory(8, seed=1)
        with pytest.raises(DimensionMismatch, match="model depth"):
            nonparametric_simulate(lti_model, SimulationSpec.from_trajectory(window, 3))

    def test_spec_validation(self):
        """Test that the initial block must have n_ini samples."""
        with pytest.raises(DimensionMismatch):
            SimulationSpec(3, np.zeros((2, 2)), np.zeros(5))

    def test_known_layout(self):
        """Test the index set of a simulation spec."""
        spec = SimulationSpec(2, np.ones((2, 3)), np.full(2, 5.0))
        idx, values = spec.known(3, 1)
        assert list(idx) == [0, 1, 2, 3, 4, 5, 6, 9]
        np.testing.assert_array_equal(values, [1, 1, 1, 1, 1, 1, 5, 5])

    def test_band_violation_raises(self, lti_model, monkeypatch):
        """Test that a stopped solver leaving known elements outside the band raises."""

        def stopped(self, problem, warm_start=None):
            return _stopped_report(problem.n)

        monkeypatch.setattr(recover_module.SplittingSolver, "solve", stopped)
        spec = SimulationSpec.from_trajectory(lti_trajectory(10, seed=44), n_ini=3)
        with pytest.raises(SolverMaxIterations, match="from its value") as excinfo:
            nonparametric_simulate(lti_model, spec)
        assert excinfo.value.report.status is SolverStatus.MAX_ITERS

    def test_starts_from_least_squares_fit(self, lti_model, monkeypatch):
        """Test that the solver is seeded with a combination matching the known elements."""
        starts = []
        real = SplittingSolver.solve

        def recording(self, problem, warm_start=None):
            starts.append(warm_start)
            return real(self, problem, warm_start)

        monkeypatch.setattr(recover_module.SplittingSolver, "solve", recording)
        spec = SimulationSpec.from_trajectory(lti_trajectory(10, seed=45), n_ini=3)
        nonparametric_simulate(lti_model, spec, settings=TIGHT)
        idx, values = spec.known(2, 1)
        np.testing.assert_allclose(lti_model.matrix[idx.indices] @ starts[0], values, atol=1e-8)


class TestIndirect:
    """Test cases for the closed-form projection onto consistent trajectories."""

    @staticmethod
    def _setup(lti_model):
        window = lti_trajectory(10, seed=7)
        known = IndexSet.samples(range(3), 2).union(IndexSet.samples(range(8, 10), 2))
        w_ref = np.random.default_rng(1).standard_normal(lti_model.n_rows)
        return known, truncate(window, known), w_ref

    def test_orthogonality(self, lti_model):
        """Test that the reference error is orthogonal to the free directions."""
        known, values, w_ref = self._setup(lti_model)
        result = indirect_generate(lti_model, known, values, w_ref)
        assert np.max(np.abs(result.basis.T @ (w_ref - result.w_hat.data))) <= 1e-8
        np.testing.assert_allclose(result.w_hat.data[known.indices], values, atol=1e-8)

    def test_matches_heavily_weighted_least_squares(self, lti_model):
        """Test equivalence with pinning the known elements by a large weight."""
        known, values, w_ref = self._setup(lti_model)
        result = indirect_generate(lti_model, known, values, w_ref)
        H = lti_model.matrix
        stacked = np.vstack([1e3 * truncate(H, known), H])
        rhs = np.concatenate([1e3 * values, w_ref])
        g, *_ = np.linalg.lstsq(stacked, rhs, rcond=None)
        np.testing.assert_allclose(H @ g, result.w_hat.data, atol=1e-3)

    def test_matches_direct_solver(self, lti_model):
        """Test equivalence with the splitting solver at W = 1e6 and mu = 1."""
        known, values, w_ref = self._setup(lti_model)
        result = indirect_generate(lti_model, known, values, w_ref)
        problem = assemble_recovery_qp(
            lti_model, known, values, weights=WeightSpec.uniform(1e6, 1.0), mu=1.0, w_ref=w_ref
        )
        report = solve(problem)
        np.testing.assert_allclose(lti_model.matrix @ report.g, result.w_hat.data, atol=1e-3)

    def test_fully_known_window(self, lti_model):
        """Test that a fully determined window has no free directions."""
        window = lti_trajectory(10, seed=8)
        known = IndexSet.full(lti_model.n_rows)
        with pytest.raises(DegenerateNullspace):
            indirect_generate(lti_model, known, window.data, window.data)

    def test_reference_length(self, lti_model):
        """Test that the reference must cover the whole window."""
        with pytest.raises(DimensionMismatch, match="reference"):
            indirect_generate(lti_model, IndexSet.from_indices([0]), [0.0], np.zeros(3))

    def test_warns_on_reduced_model(self, lti_model, caplog):
        """Test the warning for models that are no longer Hankel."""
        known, values, w_ref = self._setup(lti_model)
        with caplog.at_level(logging.WARNING):
            indirect_generate(denoise_svd(lti_model, 1e-9), known, values, w_ref)
        assert "exact Hankel model" in caplog.text


class TestOperators:
    """Test cases for the difference operator and the reference trajectory."""

    def test_total_variation_matches_direct_sum(self, lti_model):
        """Test the zero-padded first differences of one channel."""
        D = build_total_variation_operator(lti_model, ["y"])
        assert D.shape == (11, lti_model.n_rows)
        w = lti_trajectory(10, seed=3).data
        y = w[1::2]
        direct = y[0] ** 2 + np.sum(np.diff(y) ** 2) + y[-1] ** 2
        assert np.sum((D @ w) ** 2) == pytest.approx(direct, rel=1e-12)

    def test_total_variation_unknown_channel(self, lti_model):
        """Test that unknown channel names are rejected."""
        with pytest.raises(ChannelMismatch, match="no channel"):
            build_total_variation_operator(lti_model, ["theta4"])

    def test_reference_and_endpoints(self):
        """Test the step reference and the known and pinned index sets."""
        model = _crane_layout_model()
        spec = TrajectoryGenSpec(0.1, 0.5, n_given=5, depth=30)
        reference = build_reference(model, spec)
        theta4 = reference.channel("theta4")
        np.testing.assert_array_equal(theta4[:5], 0.1)
        np.testing.assert_array_equal(theta4[5:], 0.5)
        np.testing.assert_array_equal(reference.channel("theta1"), 0.0)
        known, pinned = endpoint_indices(spec, model.q)
        assert len(known) == 50
        assert list(pinned) == list(range(5)) + list(range(145, 150))

    def test_bounds_per_channel(self):
        """Test that the optional velocity bound adds a fourth box."""
        model = _crane_layout_model()
        spec = TrajectoryGenSpec(0.0, 0.3, n_given=5, depth=30)
        assert len(trajectory_bounds(model, spec)) == 3
        bounded = TrajectoryGenSpec(0.0, 0.3, n_given=5, depth=30, velocity_bound=0.2)
        assert len(trajectory_bounds(model, bounded)) == 4

    def test_generation_qp_shape(self):
        """Test the constraint blocks of the generation QP."""
        model = _crane_layout_model()
        problem = assemble_generation_qp(model, TrajectoryGenSpec(0.0, 0.3, n_given=5, depth=30))
        assert problem.n == 40
        assert problem.n_eq == 10
        assert problem.n_in == 2 * 3 * 30

    def test_generation_depth_mismatch(self):
        """Test that the model depth must equal L."""
        model = _crane_layout_model()
        with pytest.raises(DimensionMismatch):
            assemble_generation_qp(model, TrajectoryGenSpec(0.0, 0.3, n_given=5, depth=40))

    def test_spec_validation(self):
        """Test that the fitted ends must not overlap."""
        with pytest.raises(ValueError, match="n_given"):
            TrajectoryGenSpec(0.0, 1.0, n_given=10, depth=20)


class TestGeneration:
    """Test cases for rest-to-rest generation and its endpoint guarantee."""

    def test_missed_endpoint_raises(self, monkeypatch):
        """Test that a window missing the rest samples is reported as a solver stop."""

        def stopped(self, problem, warm_start=None):
            return _stopped_report(problem.n)

        monkeypatch.setattr(generation_module.SplittingSolver, "solve", stopped)
        spec = TrajectoryGenSpec(0.1, 0.5, n_given=5, depth=30)
        with pytest.raises(SolverMaxIterations, match="rest samples"):
            generate_trajectory(_crane_layout_model(), spec)

    def test_rest_at_target_needs_no_input(self, small_crane_model):
        """Test that starting at the target gives a motionless trajectory."""
        spec = TrajectoryGenSpec(0.0, 0.0, n_given=5, depth=60)
        generated = generate_trajectory(small_crane_model, spec)
        assert generated.report.optimal
        assert generated.endpoint_residual <= 1e-6
        assert np.max(np.abs(generated.inputs)) <= 1e-4


@pytest.mark.slow
def test_generation_on_crane_model(small_crane_model) -> None:
    """Test a short rest-to-rest slew on a model built from crane recordings."""
    spec = TrajectoryGenSpec(0.0, 0.1, n_given=5, depth=60)
    settings = SolverSettings(max_iters=50_000)
    generated = generate_trajectory(small_crane_model, spec, settings)
    report = generated.report
    assert report.optimal
    assert generated.endpoint_residual <= 1e-6
    qp = assemble_generation_qp(small_crane_model, spec)
    assert SplittingSolver(settings).certified(qp, report.g, report.y_eq, report.y_in)
    assert report.kkt is not None
    w = generated.w_hat
    assert np.max(np.abs(w.channel("theta1"))) <= spec.sway_bound + 1e-6
    assert np.max(np.abs(w.channel("theta2"))) <= spec.sway_bound + 1e-6
    assert np.max(np.abs(generated.inputs)) <= spec.input_bound + 1e-6
    assert generated.inputs.size == 60
    assert w.channel("theta4")[-1] == pytest.approx(0.1, abs=1e-6)


@pytest.mark.slow
class TestSlewScenario:
    """Test cases for a quarter-turn slew on a depth-500 crane model."""

    SPEC = TrajectoryGenSpec(3 * np.pi / 8, 5 * np.pi / 8, n_given=10, depth=500)

    @staticmethod
    def _rollout(generated, spec):
        return rollout_boom_input(
            generated.inputs,
            CraneParams(),
            theta4_start=spec.theta4_start,
            mode=ChannelMode.SIMULATION,
            rate=generated.w_hat.rate,
        )

    def test_quarter_turn(self, slew_model):
        """Test endpoints, bounds, time-to-target and final boom error of the rollout."""
        spec = self.SPEC
        generated = generate_trajectory(slew_model, spec)
        assert generated.endpoint_residual <= 1e-6
        w = generated.w_hat
        for name in ("theta1", "theta2"):
            assert np.max(np.abs(w.channel(name))) <= spec.sway_bound + 1e-6
        rollout = self._rollout(generated, spec)
        quality = score_trajectory(rollout, spec.theta4_target)
        assert quality.reached
        assert quality.time_to_target <= 20.0
        assert abs(rollout.channel("theta4")[-1] - spec.theta4_target) <= 5e-3

    def test_stronger_tracking_is_not_slower(self, slew_model):
        """Test that doubling the tracking weight does not delay reaching the target."""
        times = []
        for mu in (self.SPEC.mu, 2.0 * self.SPEC.mu):
            spec = dataclasses.replace(self.SPEC, mu=mu)
            generated = generate_trajectory(slew_model, spec)
            rollout = self._rollout(generated, spec)
            times.append(score_trajectory(rollout, spec.theta4_target).time_to_target)
        assert times[1] <= times[0] + 1.0 / slew_model.rate
