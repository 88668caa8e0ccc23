"""Run configuration shared by every command of the pipeline.

A configuration is a tree of frozen dataclasses. Files in JSON or TOML only need to
name the values that differ from the defaults; dotted ``key=value`` overrides are
applied on top. The canonical dictionary of a resolved configuration is hashed and
stamped into every artifact.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .benchmark.waypoints import Bounds, FiniteDifference, NLPMethod
from .channels import ChannelMode
from .dynamics.model import CraneParams, NoiseSpec
from .errors import ConfigError
from .excitation import SumOfSinesSpec
from .solver.problem import SolverSettings
from .tuning.metrics import OBJECTIVE_METRICS

LOGGER = logging.getLogger(__name__)

# Order in which stage seeds are spawned from the root seed; append only.
SEED_STAGES: Tuple[str, ...] = ("excitation", "noise", "test-excitation", "test-noise", "survey")


@dataclass(frozen=True, slots=True)
class DataConfig:
    """Recorded sequences used to build and to test a model."""

    n_sequences: int = 20
    n_test: int = 10
    theta4_start: float = 0.0
    noisy: bool = True

    def __post_init__(self) -> None:
        if self.n_sequences < 1:
            raise ValueError("n_sequences must be at least 1")
        if self.n_test < 0:
            raise ValueError("n_test must be non-negative")


@dataclass(frozen=True, slots=True)
class ModelConfig:
    depth: int = 300
    nu: Optional[int] = None
    delta: float = 0.0
    threshold_mode: str = "relative"
    n_hypothesis: int = 6

    def __post_init__(self) -> None:
        if self.depth < 1:
            raise ValueError("depth must be at least 1")
        if self.nu is not None and self.nu < 1:
            raise ValueError("nu must be at least 1")


@dataclass(frozen=True, slots=True)
class SimGridConfig:
    deltas: Tuple[float, ...] = (0.0, 1e-3, 8.1e-3)
    lams: Tuple[float, ...] = (0.0, 1.833e-5)
    nus: Tuple[int, ...] = (1000, 2000)
    n_ini: int = 10
    epsilon: float = 1e-6


@dataclass(frozen=True, slots=True)
class TrajGridConfig:
    lams: Tuple[float, ...] = (0.0064,)
    mus: Tuple[float, ...] = (14.3214,)
    sigmas: Tuple[float, ...] = (2.5877,)
    use_rollout: bool = True
    metric_weights: Mapping[str, float] = field(
        default_factory=lambda: {name: 1.0 for name in OBJECTIVE_METRICS}
    )

    def __post_init__(self) -> None:
        unknown = set(self.metric_weights) - set(OBJECTIVE_METRICS)
        if unknown:
            raise ValueError(f"unknown metrics: {sorted(unknown)}")


@dataclass(frozen=True, slots=True)
class ScenarioConfig:
    """Rest-to-rest slew handed to trajectory generation."""

    theta4_start: float = 3 * math.pi / 8
    theta4_target: float = 5 * math.pi / 8
    n_given: int = 10
    depth: int = 500
    lam: float = 0.0064
    mu: float = 14.3214
    sigma: float = 2.5877
    sway_bound: float = 0.035
    input_bound: float = 0.6
    velocity_bound: Optional[float] = None


@dataclass(frozen=True, slots=True)
class BenchmarkConfig:
    start: float = 0.0
    target: float = math.pi / 4
    method: str = NLPMethod.SLSQP.value
    n_starts: int = 3
    max_iters: int = 500
    convention: str = FiniteDifference.BACKWARD.value
    hold: float = 10.0

    def __post_init__(self) -> None:
        NLPMethod(self.method)
        FiniteDifference(self.convention)


@dataclass(frozen=True, slots=True)
class SolverConfig:
    eps_abs: float = 1e-8
    eps_rel: float = 1e-6
    max_iters: int = 20_000
    polish: bool = True

    def settings(self) -> SolverSettings:
        return SolverSettings(
            eps_abs=self.eps_abs,
            eps_rel=self.eps_rel,
            max_iters=self.max_iters,
            polish=self.polish,
        )


@dataclass(frozen=True, slots=True)
class SurveyConfig:
    n_states: int = 1000
    scale: float = 1.0


_SECTIONS: Dict[str, type] = {
    "crane": CraneParams,
    "noise": NoiseSpec,
    "excitation": SumOfSinesSpec,
    "data": DataConfig,
    "model": ModelConfig,
    "sim_grid": SimGridConfig,
    "traj_grid": TrajGridConfig,
    "scenario": ScenarioConfig,
    "bounds": Bounds,
    "benchmark": BenchmarkConfig,
    "solver": SolverConfig,
    "controllability": SurveyConfig,
}


@dataclass(frozen=True, slots=True)
class RunConfig:
    """Everything a pipeline command needs besides its input artifacts."""

    crane: CraneParams = field(default_factory=CraneParams)
    mode: ChannelMode = ChannelMode.SIMULATION
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    excitation: SumOfSinesSpec = field(default_factory=SumOfSinesSpec)
    data: DataConfig = field(default_factory=DataConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    sim_grid: SimGridConfig = field(default_factory=SimGridConfig)
    traj_grid: TrajGridConfig = field(default_factory=TrajGridConfig)
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    bounds: Bounds = field(default_factory=Bounds)
    benchmark: BenchmarkConfig = field(default_factory=BenchmarkConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    controllability: SurveyConfig = field(default_factory=SurveyConfig)
    seed: int = 0
    out_dir: str = "runs"

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", ChannelMode(self.mode))
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            name: _plain(dataclasses.asdict(getattr(self, name))) for name in _SECTIONS
        }
        payload["mode"] = self.mode.value
        payload["seed"] = self.seed
        payload["out_dir"] = self.out_dir
        return payload

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "RunConfig":
        unknown = set(payload) - set(_SECTIONS) - {"mode", "seed", "out_dir"}
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        kwargs: dict[str, Any] = {
            name: _build_section(name, payload[name]) for name in _SECTIONS if name in payload
        }
        for key in ("mode", "seed", "out_dir"):
            if key in payload:
                kwargs[key] = payload[key]
        try:
            return cls(**kwargs)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def output_dir(self) -> Path:
        return Path(self.out_dir)

    def config_hash(self) -> str:
        return config_hash(self)


def _plain(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {key: _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    if isinstance(value, (ChannelMode, FiniteDifference, NLPMethod)):
        return value.value
    return value


def _build_section(name: str, payload: Any) -> Any:
    section = _SECTIONS[name]
    if not isinstance(payload, Mapping):
        raise ConfigError(f"section {name!r} must be a table")
    known = {item.name for item in dataclasses.fields(section)}
    unknown = set(payload) - known
    if unknown:
        raise ConfigError(f"unknown keys in section {name!r}: {sorted(unknown)}")
    values = {
        key: tuple(item) if isinstance(item, list) else item for key, item in payload.items()
    }
    try:
        return section(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid section {name!r}: {exc}") from exc


def config_hash(config: RunConfig) -> str:
    """SHA-256 of the canonical, key-sorted JSON form of ``config``."""
    text = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def read_config_file(path: Path) -> dict[str, Any]:
    """Parse a JSON or TOML file, chosen by suffix."""
    suffix = path.suffix.lower()
    try:
        if suffix == ".toml":
            with path.open("rb") as handle:
                return tomllib.load(handle)
        if suffix == ".json":
            return json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    raise ConfigError(f"unsupported config format {path.suffix!r}; use .json or .toml")


def parse_override(text: str) -> Tuple[List[str], Any]:
    """Split ``section.key=value``; the value is read as JSON when possible."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    path = [part for part in key.strip().split(".") if part]
    if not path:
        raise ConfigError(f"override {text!r} has an empty key")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return path, value


def _merge(base: dict[str, Any], update: Mapping[str, Any], prefix: str = "") -> None:
    for key, value in update.items():
        dotted = f"{prefix}{key}"
        if key not in base:
            raise ConfigError(f"unknown configuration key {dotted!r}")
        if isinstance(base[key], dict) and key != "metric_weights":
            if not isinstance(value, Mapping):
                raise ConfigError(f"{dotted!r} must be a table")
            _merge(base[key], value, f"{dotted}.")
        elif key == "metric_weights":
            if not isinstance(value, Mapping):
                raise ConfigError(f"{dotted!r} must be a table")
            base[key] = {**base[key], **dict(value)}
        else:
            base[key] = value


def load_run_config(
    path: Optional[Path] = None,
    overrides: Sequence[str] = (),
    *,
    seed: Optional[int] = None,
    out_dir: Optional[str] = None,
) -> RunConfig:
    """Resolve defaults, an optional file and overrides into a :class:`RunConfig`.

    Raises:
        ConfigError: For unknown keys, malformed files or invalid values.
    """
    payload = RunConfig().to_dict()
    if path is not None:
        _merge(payload, read_config_file(Path(path)))
    for text in overrides:
        keys, value = parse_override(text)
        update: Any = value
        for key in reversed(keys):
            update = {key: update}
        _merge(payload, update)
    if seed is not None:
        payload["seed"] = seed
    if out_dir is not None:
        payload["out_dir"] = out_dir
    try:
        mode = ChannelMode(payload["mode"])
    except ValueError as exc:
        raise ConfigError(f"unknown channel mode {payload['mode']!r}") from exc
    payload["mode"] = mode
    config = RunConfig.from_dict(payload)
    LOGGER.debug("resolved configuration %s", config.config_hash()[:12])
    return config


def stage_seed(root: int, stage: str) -> np.random.SeedSequence:
    """Seed sequence of a named stage, spawned from the root seed in a fixed order."""
    if stage not in SEED_STAGES:
        raise ValueError(f"unknown seed stage {stage!r}")
    return np.random.SeedSequence(root).spawn(len(SEED_STAGES))[SEED_STAGES.index(stage)]


def spawn_seeds(sequence: np.random.SeedSequence, count: int) -> List[int]:
    """Integer seeds of ``count`` independent children."""
    return [int(child.generate_state(1)[0]) for child in sequence.spawn(count)]
