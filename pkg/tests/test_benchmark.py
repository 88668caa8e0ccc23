"""
Tests for the model-based waypoint benchmark and the method comparison.
"""

import math

import numpy as np
import pytest

from crane_behavior.benchmark import (
    Bounds,
    MethodOutcome,
    NLPReport,
    WaypointProblem,
    WaypointSolution,
    compare,
    outcome_from_generation,
    outcome_from_waypoints,
    plan_trajectory,
    propagate_sway,
    segment_transition,
    solve_waypoint_nlp,
    waypoint_playback,
)
from crane_behavior.dynamics import CraneParams, CraneState, integrate_states
from crane_behavior.events import RecordingObserver, StageEventKind
from crane_behavior.recovery import TrajectoryGenSpec, generate_trajectory
from crane_behavior.tuning import TrajectoryQuality


def _solution(dtheta4, tau: float = 1.0) -> WaypointSolution:
    rates = np.asarray(dtheta4, dtype=float)
    report = NLPReport("slsqp", True, "", 0, 1, 0.0, 0.0, 0.0)
    return WaypointSolution(
        theta4=np.zeros(rates.size),
        dtheta4=rates,
        ddtheta4=np.zeros(rates.size),
        tau=tau,
        sway=np.zeros((1, 4)),
        report=report,
    )


def _outcome(name: str, time_to_target: float, sway: float) -> MethodOutcome:
    quality = TrajectoryQuality(
        time_to_target=time_to_target,
        reached=True,
        max_sway=sway,
        mean_sway=sway,
        max_theta1=sway,
        max_theta2=0.0,
        max_smooth=0.0,
        mean_smooth=0.0,
        overshoot_integral=0.0,
        final_error=0.0,
    )
    return MethodOutcome(name=name, inputs=np.zeros(3), rollout=None, quality=quality)


class TestBounds:
    """Test cases for the benchmark limits."""

    def test_positive(self):
        """Test that every limit must be positive."""
        with pytest.raises(ValueError, match="all bounds must be positive"):
            Bounds(max_acceleration=0.0)

    def test_final_within_path(self):
        """Test that the final sway bounds cannot exceed the path bounds."""
        with pytest.raises(ValueError, match="final bounds"):
            Bounds(final_sway=0.1)

    def test_problem_validation(self):
        """Test waypoint-count and segment-duration checks."""
        with pytest.raises(ValueError, match="n_waypoints"):
            WaypointProblem(0.0, 1.0, n_waypoints=2)
        with pytest.raises(ValueError, match="tau_guess"):
            WaypointProblem(0.0, 1.0, tau_guess=20.0)


class TestSwayPropagation:
    """Test cases for the exact per-segment sway transition."""

    def test_free_pendulum(self):
        """Test that a segment without boom motion is a harmonic rotation."""
        params = CraneParams()
        phi, gamma = segment_transition(params, 0.0, 0.0, 0.7)
        angle = params.alpha1 * 0.7
        assert phi[0, 0] == pytest.approx(math.cos(angle))
        assert phi[2, 0] == pytest.approx(-params.alpha1 * math.sin(angle))
        np.testing.assert_allclose(gamma, 0.0, atol=1e-15)

    def test_constant_acceleration_from_rest(self):
        """Test the forced response of theta2 to a held boom acceleration."""
        params = CraneParams()
        _, gamma = segment_transition(params, 0.0, 0.02, 1.3)
        static = -params.alpha2 * 0.02 / params.alpha1_squared
        expected = static * (1.0 - math.cos(params.alpha1 * 1.3))
        assert gamma[1] == pytest.approx(expected, rel=1e-9)

    def test_matches_simulator_at_constant_rate(self):
        """Test that the transition agrees with the simulator while the boom rate is held."""
        params = CraneParams()
        initial = CraneState(theta1=0.01, dtheta2=0.02, dtheta4=0.1)
        states = integrate_states(initial, np.zeros(21), params)
        phi, gamma = segment_transition(params, 0.1, 0.0, 1.0)
        start = np.array([0.01, 0.0, 0.0, 0.02])
        np.testing.assert_allclose(states[-1, [0, 1, 3, 4]], phi @ start + gamma, atol=1e-9)

    def test_rest_stays_at_rest(self):
        """Test that a stationary boom leaves the load at rest."""
        states = propagate_sway(CraneParams(), np.zeros(5), np.zeros(5), 0.5, substeps=3)
        assert states.shape == (13, 4)
        np.testing.assert_array_equal(states, 0.0)


class TestPlayback:
    """Test cases for turning a plan into a sampled input."""

    def test_triangle_profile(self):
        """Test that a triangular rate profile slews by its area."""
        solution = _solution([0.0, 0.1, 0.0])
        inputs = waypoint_playback(solution, rate=20.0, hold=10.0)
        assert inputs.size == 241
        assert np.max(np.abs(inputs)) == pytest.approx(0.1)
        assert np.sum(inputs) / 20.0 == pytest.approx(0.0, abs=1e-12)
        rollout = plan_trajectory(solution, 0.3)
        assert rollout.channel("theta4")[-1] == pytest.approx(0.4, abs=1e-9)
        assert rollout.channel("dtheta4")[-1] == pytest.approx(0.0, abs=1e-12)

    def test_negative_hold(self):
        """Test that the hold time cannot be negative."""
        with pytest.raises(ValueError, match="hold"):
            waypoint_playback(_solution([0.0, 0.0]), hold=-1.0)


class TestWaypointSolve:
    """Test cases for the waypoint program."""

    def test_start_equals_target(self):
        """Test the trivial plan for a zero slew."""
        solution = solve_waypoint_nlp(0.3, 0.3)
        assert solution.tau == 0.2
        np.testing.assert_array_equal(solution.theta4, 0.3)
        np.testing.assert_array_equal(solution.ddtheta4, 0.0)
        assert solution.report.message == "start equals target"
        assert solution.report.rollout_verified

    def test_trivial_outcome(self):
        """Test scoring the played-back trivial plan."""
        solution = solve_waypoint_nlp(0.2, 0.2, verify=False)
        outcome = outcome_from_waypoints(solution, 0.2, 0.2)
        assert outcome.planned_time == pytest.approx(3.0)
        assert outcome.quality.reached
        assert outcome.quality.time_to_target == 0.0
        assert outcome.quality.max_sway == 0.0

    def test_invalid_method(self):
        """Test that unknown solver names are rejected."""
        with pytest.raises(ValueError):
            solve_waypoint_nlp(0.0, 0.1, method="ipopt")

    @pytest.mark.slow
    def test_small_slew(self):
        """Test that a feasible plan meets the equality and sway tolerances."""
        observer = RecordingObserver()
        solution = solve_waypoint_nlp(0.0, 0.1, observer=observer)
        report = solution.report
        assert report.success
        assert report.equality_residual <= 1e-8
        assert report.sway_violation <= 1e-4
        assert solution.theta4[0] == pytest.approx(0.0, abs=1e-8)
        assert solution.theta4[-1] == pytest.approx(0.1, abs=1e-8)
        assert np.max(np.abs(solution.ddtheta4)) <= Bounds().max_acceleration + 1e-9
        assert report.rollout_verified
        assert observer.events[0].kind is StageEventKind.STAGE_STARTED


class TestComparison:
    """Test cases for the ratio report."""

    def test_identical_methods(self):
        """Test that a method compared with itself has unit ratios."""
        outcome = _outcome("a", 12.0, 0.02)
        report = compare(outcome, outcome)
        assert report.ratios == {
            "time_to_target": 1.0,
            "max_theta1": 1.0,
            "max_theta2": 1.0,
            "final_error": 1.0,
        }

    def test_ratios(self):
        """Test ratios below one and a zero denominator."""
        report = compare(_outcome("fast", 6.0, 0.01), _outcome("slow", 12.0, 0.0))
        assert report.ratios["time_to_target"] == pytest.approx(0.5)
        assert math.isinf(report.ratios["max_theta1"])
        assert [row["method"] for row in report.rows()] == ["fast", "slow"]
        assert report.to_dict()["methods"][0]["name"] == "fast"


@pytest.mark.slow
def test_quarter_turn_against_generated_trajectory(slew_model) -> None:
    """Test the quarter-turn comparison of the waypoint plan and a generated trajectory."""
    solution = solve_waypoint_nlp(0.0, math.pi / 4)
    assert solution.report.success
    assert 20.0 <= solution.total_time <= 60.0
    spec = TrajectoryGenSpec(3 * math.pi / 8, 5 * math.pi / 8, n_given=10, depth=500)
    data_driven = outcome_from_generation(generate_trajectory(slew_model, spec), spec)
    model_based = outcome_from_waypoints(solution, 0.0, math.pi / 4)
    report = compare(data_driven, model_based)
    assert data_driven.quality.reached
    assert data_driven.quality.time_to_target / solution.total_time <= 0.8
    assert set(report.ratios) >= {"time_to_target", "max_theta2"}
