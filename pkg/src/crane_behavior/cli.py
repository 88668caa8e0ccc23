"""Batch command line for the data-driven crane pipeline.

Every command resolves a :class:`~crane_behavior.config.RunConfig`, reads the
artifacts it declares, and writes CSV/JSON artifacts under ``--out-dir``. Exit codes:
0 on success, 2 when a problem is infeasible, 1 on any other error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .artifacts import (
    Provenance,
    load_model,
    read_trajectory_csv,
    save_model,
    write_manifest,
    write_table_csv,
    write_trajectory_csv,
)
from .behavior.hankel import (
    COLUMN_RULE_OF_THUMB,
    BehaviorModel,
    build_hankel,
    denoise_svd,
    identifiability_rank,
    select_columns_qr,
)
from .behavior.trajectory import Trajectory
from .benchmark.comparison import MethodOutcome, compare
from .benchmark.waypoints import plan_trajectory, solve_waypoint_nlp
from .channels import ChannelMode
from .config import RunConfig, load_run_config, spawn_seeds, stage_seed
from .dynamics.controllability import accessibility_survey
from .dynamics.model import CraneState
from .dynamics.simulation import rollout_boom_input, simulate
from .errors import CraneBehaviorError, InfeasibleProblem, TooShort
from .excitation import generate_excitation_batch
from .recovery.generation import generate_trajectory
from .recovery.models import SimulationSpec, TrajectoryGenSpec
from .recovery.recover import nonparametric_simulate
from .tuning.grid import SimTuneGrid, TrajTuneGrid, tune_simulation, tune_trajectory
from .tuning.metrics import score_trajectory

LOGGER = logging.getLogger("crane_behavior.cli")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_INTERRUPTED = 130


class _Context:
    """Resolved configuration plus the provenance stamp of one command."""

    def __init__(self, args: argparse.Namespace) -> None:
        self.args = args
        self.config: RunConfig = load_run_config(
            args.config, args.overrides, seed=args.seed, out_dir=args.out_dir
        )
        self.out_dir = self.config.output_dir
        self.provenance = Provenance(
            config_hash=self.config.config_hash(),
            seed=self.config.seed,
            command=args.command,
            version=__version__,
        )

    def path(self, *parts: str) -> Path:
        return self.out_dir.joinpath(*parts)


# --------------------------------------------------------------------------------------
# Shared helpers
# --------------------------------------------------------------------------------------


def _record_sequences(config: RunConfig, count: int, prefix: str) -> List[Trajectory]:
    excitation_seed = int(stage_seed(config.seed, f"{prefix}excitation").generate_state(1)[0])
    spec = dataclasses.replace(config.excitation, seed=excitation_seed)
    inputs = generate_excitation_batch(spec, count)
    noise_seeds = spawn_seeds(stage_seed(config.seed, f"{prefix}noise"), count)
    initial = CraneState(theta4=config.data.theta4_start)
    recordings = []
    for signal, noise_seed in zip(inputs, noise_seeds):
        noise = None
        if config.data.noisy:
            noise = dataclasses.replace(config.noise, seed=noise_seed)
        recordings.append(
            simulate(initial, signal, config.crane, noise, mode=config.mode, rate=spec.rate)
        )
    return recordings


def _read_sequences(directory: Path, prefix: str) -> List[Trajectory]:
    paths = sorted(directory.glob(f"{prefix}_*.csv"))
    if not paths:
        raise FileNotFoundError(f"no {prefix}_*.csv files in {directory}")
    return [read_trajectory_csv(path) for path in paths]


def _hankel_from_data(ctx: _Context) -> BehaviorModel:
    data_dir = Path(ctx.args.data_dir) if ctx.args.data_dir else ctx.path("data")
    return build_hankel(_read_sequences(data_dir, "train"), ctx.config.model.depth)


def _model_path(ctx: _Context) -> Path:
    return Path(ctx.args.model) if ctx.args.model else ctx.path("model", "model.npz")


def _scenario(config: RunConfig) -> TrajectoryGenSpec:
    scenario = config.scenario
    return TrajectoryGenSpec(
        theta4_start=scenario.theta4_start,
        theta4_target=scenario.theta4_target,
        n_given=scenario.n_given,
        depth=scenario.depth,
        lam=scenario.lam,
        mu=scenario.mu,
        sigma=scenario.sigma,
        sway_bound=scenario.sway_bound,
        input_bound=scenario.input_bound,
        velocity_bound=scenario.velocity_bound,
    )


# --------------------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------------------


def cmd_gen_data(ctx: _Context) -> int:
    config = ctx.config
    train = _record_sequences(config, config.data.n_sequences, "")
    test = _record_sequences(config, config.data.n_test, "test-") if config.data.n_test else []
    for prefix, recordings in (("train", train), ("test", test)):
        for index, trajectory in enumerate(recordings):
            write_trajectory_csv(
                ctx.path("data", f"{prefix}_{index:03d}.csv"), trajectory, ctx.provenance
            )

    depth = config.model.depth
    columns = sum(max(0, item.n_samples - depth + 1) for item in train)
    rows = config.mode.q * depth
    ratio = columns / rows
    if ratio < COLUMN_RULE_OF_THUMB:
        LOGGER.warning(
            "%d columns for %d rows at depth %d; record about %.0f times more columns",
            columns,
            rows,
            depth,
            COLUMN_RULE_OF_THUMB,
        )
    write_manifest(
        ctx.path("data", "manifest.json"),
        {
            "mode": config.mode.value,
            "n_train": len(train),
            "n_test": len(test),
            "total_seconds": float(sum(item.duration for item in train)),
            "hankel_columns": columns,
            "hankel_rows": rows,
            "columns_per_row": ratio,
        },
        ctx.provenance,
    )
    LOGGER.info("generated %d training and %d test sequences", len(train), len(test))
    return EXIT_OK


def cmd_build_model(ctx: _Context) -> int:
    config = ctx.config.model
    model = _hankel_from_data(ctx)
    rank, satisfied = identifiability_rank(model, config.n_hypothesis)
    if config.nu is not None:
        model = select_columns_qr(model, config.nu)
    model = denoise_svd(model, config.delta, config.threshold_mode)
    path = save_model(_model_path(ctx), model, ctx.provenance)
    write_manifest(
        path.with_name(path.stem + "_build.json"),
        {
            "rank": rank,
            "expected_rank": model.m * model.depth + config.n_hypothesis,
            "rank_condition": satisfied,
            "model": model.sidecar(),
        },
        ctx.provenance,
    )
    return EXIT_OK


def cmd_tune_sim(ctx: _Context) -> int:
    config = ctx.config
    model = _hankel_from_data(ctx)
    data_dir = Path(ctx.args.data_dir) if ctx.args.data_dir else ctx.path("data")
    grid_config = config.sim_grid
    grid = SimTuneGrid(
        deltas=grid_config.deltas,
        lams=grid_config.lams,
        nus=grid_config.nus,
        test=tuple(_read_sequences(data_dir, "test")),
        n_ini=grid_config.n_ini,
        epsilon=grid_config.epsilon,
        threshold_mode=config.model.threshold_mode,
    )
    result = tune_simulation(model, grid, config.solver.settings())
    write_table_csv(ctx.path("tuning", "sim_scores.csv"), result.table, ctx.provenance)
    write_manifest(ctx.path("tuning", "sim_best.json"), result.best.to_dict(), ctx.provenance)
    return EXIT_OK


def cmd_tune_traj(ctx: _Context) -> int:
    config = ctx.config
    model = load_model(_model_path(ctx))
    grid_config = config.traj_grid
    grid = TrajTuneGrid(
        lams=grid_config.lams,
        mus=grid_config.mus,
        sigmas=grid_config.sigmas,
        metric_weights=grid_config.metric_weights,
        use_rollout=grid_config.use_rollout,
    )
    result = tune_trajectory(
        model, _scenario(config), grid, config.crane, config.solver.settings()
    )
    write_table_csv(ctx.path("tuning", "traj_scores.csv"), result.table, ctx.provenance)
    write_table_csv(ctx.path("tuning", "traj_slices.csv"), result.slice_table(), ctx.provenance)
    write_manifest(
        ctx.path("tuning", "traj_best.json"),
        {"best": result.best.to_dict(), "normalization": result.normalization},
        ctx.provenance,
    )
    return EXIT_OK


def cmd_gen_traj(ctx: _Context) -> int:
    config = ctx.config
    model = load_model(_model_path(ctx))
    spec = _scenario(config)
    generated = generate_trajectory(model, spec, config.solver.settings())
    rollout = rollout_boom_input(
        generated.inputs,
        config.crane,
        theta4_start=spec.theta4_start,
        mode=ChannelMode.from_channel_names(model.channel_names),
        rate=model.rate,
    )
    predicted_quality = score_trajectory(generated.w_hat, spec.theta4_target, rollout)
    rollout_quality = score_trajectory(rollout, spec.theta4_target)
    write_trajectory_csv(ctx.path("gen", "trajectory.csv"), generated.w_hat, ctx.provenance)
    write_trajectory_csv(ctx.path("gen", "rollout.csv"), rollout, ctx.provenance)
    write_manifest(
        ctx.path("gen", "manifest.json"),
        {
            "scenario": spec.to_dict(),
            "result": generated.to_dict(),
            "time_to_target": predicted_quality.time_to_target,
            "predicted_quality": predicted_quality.to_dict(),
            "rollout_quality": rollout_quality.to_dict(),
        },
        ctx.provenance,
    )
    return EXIT_OK


def cmd_simulate(ctx: _Context) -> int:
    config = ctx.config
    model = load_model(_model_path(ctx))
    if not ctx.args.trajectory:
        raise FileNotFoundError("simulate needs --trajectory")
    recorded = read_trajectory_csv(Path(ctx.args.trajectory))
    if recorded.n_samples < model.depth:
        raise TooShort(f"trajectory has {recorded.n_samples} samples, model depth {model.depth}")
    window = recorded.window(0, model.depth)
    spec = SimulationSpec.from_trajectory(window, config.sim_grid.n_ini, config.sim_grid.epsilon)
    result = nonparametric_simulate(model, spec, settings=config.solver.settings())
    residual = (result.w_hat.data - window.data).reshape(-1, model.q)
    rmse = np.sqrt(np.mean(residual**2, axis=0))
    write_trajectory_csv(ctx.path("sim", "predicted.csv"), result.w_hat, ctx.provenance)
    write_manifest(
        ctx.path("sim", "manifest.json"),
        {
            "source": str(ctx.args.trajectory),
            "n_ini": spec.n_ini,
            "rmse": dict(zip(model.channel_names, rmse.tolist())),
            "solver": result.report.to_dict(),
        },
        ctx.provenance,
    )
    return EXIT_OK


def cmd_benchmark(ctx: _Context) -> int:
    config = ctx.config
    bench = config.benchmark
    solution = solve_waypoint_nlp(
        bench.start,
        bench.target,
        config.bounds,
        config.crane,
        method=bench.method,
        n_starts=bench.n_starts,
        max_iters=bench.max_iters,
        convention=bench.convention,
        rate=config.excitation.rate,
    )
    rollout = plan_trajectory(
        solution, bench.start, config.crane, config.excitation.rate, bench.hold
    )
    quality = score_trajectory(rollout, bench.target)
    write_trajectory_csv(ctx.path("bench", "playback.csv"), rollout, ctx.provenance)
    write_manifest(
        ctx.path("bench", "manifest.json"),
        {"solution": solution.to_dict(), "quality": quality.to_dict()},
        ctx.provenance,
    )
    return EXIT_OK


def _outcome(path: Path, name: str, target: float) -> MethodOutcome:
    rollout = read_trajectory_csv(path)
    return MethodOutcome(
        name=name,
        inputs=np.asarray(rollout.input_values()[:, 0]),
        rollout=rollout,
        quality=score_trajectory(rollout, target),
    )


def cmd_compare(ctx: _Context) -> int:
    args = ctx.args
    first = Path(args.first) if args.first else ctx.path("gen", "rollout.csv")
    second = Path(args.second) if args.second else ctx.path("bench", "playback.csv")
    target = args.target if args.target is not None else ctx.config.benchmark.target
    report = compare(
        _outcome(first, "data-driven", target), _outcome(second, "model-based", target)
    )
    write_manifest(ctx.path("compare", "report.json"), report.to_dict(), ctx.provenance)
    write_table_csv(ctx.path("compare", "metrics.csv"), report.rows(), ctx.provenance)
    LOGGER.info(
        "ratios: %s", ", ".join(f"{key}={value:.3f}" for key, value in report.ratios.items())
    )
    return EXIT_OK


def cmd_controllability(ctx: _Context) -> int:
    config = ctx.config
    seed = int(stage_seed(config.seed, "survey").generate_state(1)[0])
    survey = accessibility_survey(
        config.controllability.n_states,
        config.crane,
        seed=seed,
        scale=config.controllability.scale,
    )
    write_manifest(
        ctx.path("controllability", "survey.json"), survey.to_dict(), ctx.provenance
    )
    return EXIT_OK


def cmd_show_config(ctx: _Context) -> int:
    payload = {"config_hash": ctx.provenance.config_hash, "config": ctx.config.to_dict()}
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


COMMANDS: Dict[str, Callable[[_Context], int]] = {
    "gen-data": cmd_gen_data,
    "build-model": cmd_build_model,
    "tune-sim": cmd_tune_sim,
    "tune-traj": cmd_tune_traj,
    "gen-traj": cmd_gen_traj,
    "simulate": cmd_simulate,
    "benchmark": cmd_benchmark,
    "compare": cmd_compare,
    "controllability": cmd_controllability,
    "show-config": cmd_show_config,
}


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="crane-behavior",
        description="Data-driven trajectory generation for a rotary crane",
        epilog=(
            "benchmark ties rates to backward differences by default; "
            "--set benchmark.convention=printed shifts the rate index by one sample"
        ),
    )
    parser.add_argument("command", choices=sorted(COMMANDS), help="Pipeline stage to run")
    parser.add_argument("--config", type=Path, help="JSON or TOML run configuration")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Dotted override, e.g. model.depth=300 (repeatable)",
    )
    parser.add_argument("--seed", type=int, help="Root seed of every stochastic stage")
    parser.add_argument("--out-dir", help="Directory that receives the artifacts")
    parser.add_argument("--data-dir", help="Directory with train_*.csv / test_*.csv")
    parser.add_argument("--model", help="Model .npz written by build-model")
    parser.add_argument("--trajectory", help="Trajectory CSV for simulate")
    parser.add_argument("--first", help="Rollout CSV of the first method for compare")
    parser.add_argument("--second", help="Rollout CSV of the second method for compare")
    parser.add_argument("--target", type=float, help="Target boom angle for compare")
    parser.add_argument("--verbose", action="store_true", help="Enable debug logging")
    return parser.parse_args(argv)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="[%(levelname)s] %(message)s",
    )
    try:
        return COMMANDS[args.command](_Context(args))
    except InfeasibleProblem as exc:
        LOGGER.error("infeasible: %s", exc)
        return EXIT_INFEASIBLE
    except (CraneBehaviorError, OSError, ValueError) as exc:
        LOGGER.error("%s", exc)
        return EXIT_ERROR
    except KeyboardInterrupt:
        LOGGER.error("interrupted")
        return EXIT_INTERRUPTED


if __name__ == "__main__":
    sys.exit(main())
