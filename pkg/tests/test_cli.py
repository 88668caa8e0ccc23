"""
Tests for the batch command line.
"""

import json
from types import SimpleNamespace

import numpy as np
import pytest

from crane_behavior import cli
from crane_behavior.artifacts import read_manifest, read_provenance, write_trajectory_csv
from crane_behavior.behavior.hankel import hankel_from_matrix
from crane_behavior.benchmark import NLPReport, WaypointSolution, plan_trajectory
from crane_behavior.channels import ChannelMode
from crane_behavior.errors import CraneBehaviorError, InfeasibleProblem

SMALL_DATA = [
    "--set",
    "excitation.duration=5",
    "--set",
    "data.n_sequences=2",
    "--set",
    "data.n_test=1",
    "--set",
    "model.depth=20",
]


def test_show_config(capsys) -> None:
    """Test that the resolved configuration is printed with its hash."""
    assert cli.main(["show-config", "--set", "model.depth=50", "--seed", "3"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["config"]["model"]["depth"] == 50
    assert payload["config"]["seed"] == 3
    assert len(payload["config_hash"]) == 64


def test_bad_override_exits_with_error() -> None:
    """Test that configuration errors give exit code 1."""
    assert cli.main(["show-config", "--set", "model.bogus=1"]) == 1


def test_unknown_command() -> None:
    """Test that argparse rejects unknown commands."""
    with pytest.raises(SystemExit):
        cli.main(["deploy"])


def test_infeasible_exit_code(monkeypatch, tmp_path) -> None:
    """Test that infeasible problems give exit code 2."""

    def infeasible(ctx):
        raise InfeasibleProblem("bounds too tight")

    monkeypatch.setitem(cli.COMMANDS, "benchmark", infeasible)
    assert cli.main(["benchmark", "--out-dir", str(tmp_path)]) == 2


def test_missing_model(tmp_path) -> None:
    """Test that a missing input artifact gives exit code 1."""
    assert cli.main(["gen-traj", "--out-dir", str(tmp_path)]) == 1


def test_controllability(tmp_path) -> None:
    """Test the accessibility survey artifact."""
    code = cli.main(
        ["controllability", "--out-dir", str(tmp_path), "--set", "controllability.n_states=50"]
    )
    assert code == 0
    survey = read_manifest(tmp_path / "controllability" / "survey.json")
    assert survey["n_states"] == 50
    assert survey["linearized_rank"] == 4
    assert survey["command"] == "controllability"


def test_gen_data_and_build_model(tmp_path) -> None:
    """Test the first two pipeline stages on a short recording."""
    out = ["--out-dir", str(tmp_path), "--seed", "4"]
    assert cli.main(["gen-data", *out, *SMALL_DATA]) == 0
    data = tmp_path / "data"
    assert sorted(path.name for path in data.glob("*.csv")) == [
        "test_000.csv",
        "train_000.csv",
        "train_001.csv",
    ]
    manifest = read_manifest(data / "manifest.json")
    assert manifest["n_train"] == 2
    assert manifest["hankel_columns"] == 2 * (100 - 20 + 1)
    assert read_provenance(data / "train_000.csv")["seed"] == "4"

    assert cli.main(["build-model", *out, *SMALL_DATA]) == 0
    build = read_manifest(tmp_path / "model" / "model_build.json")
    assert build["model"]["L"] == 20
    assert build["model"]["n_columns"] == 162
    assert (tmp_path / "model" / "model.npz").exists()


def test_gen_data_is_reproducible(tmp_path) -> None:
    """Test that the same seed gives the same recordings."""
    for name in ("a", "b"):
        args = ["gen-data", "--out-dir", str(tmp_path / name), "--seed", "9", *SMALL_DATA]
        assert cli.main(args) == 0
    first, second = (
        [
            line
            for line in (tmp_path / name / "data" / "train_001.csv").read_text().splitlines()
            if not line.startswith("#")
        ]
        for name in ("a", "b")
    )
    assert first == second


def test_compare_identical(tmp_path) -> None:
    """Test that comparing a rollout with itself gives unit ratios."""
    report = NLPReport("slsqp", True, "", 0, 1, 0.0, 0.0, 0.0)
    solution = WaypointSolution(
        theta4=np.array([0.0, 0.05, 0.1]),
        dtheta4=np.array([0.0, 0.1, 0.0]),
        ddtheta4=np.zeros(3),
        tau=1.0,
        sway=np.zeros((1, 4)),
        report=report,
    )
    path = write_trajectory_csv(tmp_path / "rollout.csv", plan_trajectory(solution, 0.0))
    code = cli.main(
        [
            "compare",
            "--out-dir",
            str(tmp_path),
            "--first",
            str(path),
            "--second",
            str(path),
            "--target",
            "0.1",
        ]
    )
    assert code == 0
    document = read_manifest(tmp_path / "compare" / "report.json")
    assert set(document["ratios"].values()) == {1.0}
    assert (tmp_path / "compare" / "metrics.csv").exists()


def test_help_names_the_finite_difference_switch(capsys) -> None:
    """Test that the help text explains how to select the shifted rate index."""
    with pytest.raises(SystemExit):
        cli.parse_args(["--help"])
    assert "benchmark.convention=printed" in capsys.readouterr().out


def test_gen_traj_rolls_out_in_the_model_channel_mode(monkeypatch, tmp_path) -> None:
    """Test that the rollout follows the channels stored with the model, not the config."""
    names = ChannelMode.EXPERIMENTAL.channel_names
    model = hankel_from_matrix(np.eye(8), 2, m=1, rate=20.0, channel_names=names)
    seen = {}

    def rollout(inputs, params, **kwargs):
        seen.update(kwargs)
        raise CraneBehaviorError("stop after rollout")

    monkeypatch.setattr(cli, "load_model", lambda path: model)
    monkeypatch.setattr(
        cli, "generate_trajectory", lambda *args: SimpleNamespace(inputs=np.zeros(2))
    )
    monkeypatch.setattr(cli, "rollout_boom_input", rollout)
    assert cli.main(["gen-traj", "--out-dir", str(tmp_path)]) == 1
    assert seen["mode"] is ChannelMode.EXPERIMENTAL
    assert seen["rate"] == 20.0
