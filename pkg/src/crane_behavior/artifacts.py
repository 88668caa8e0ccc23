"""Reading and writing pipeline artifacts.

Time series are CSV files with a ``t,<channels...>`` header preceded by ``#`` comment
lines carrying the provenance. Reports are indented JSON. Models are an ``.npz``
matrix with a JSON sidecar of the same stem.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np

from . import __version__
from .behavior.hankel import BehaviorModel, ThresholdMode
from .behavior.trajectory import Trajectory
from .errors import ChannelMismatch, ConfigError

LOGGER = logging.getLogger(__name__)

FLOAT_FORMAT = "{:.15g}"


@dataclass(frozen=True, slots=True)
class Provenance:
    """Stamp written into every artifact."""

    config_hash: str
    seed: int
    command: str
    version: str = __version__

    def to_dict(self) -> dict[str, Any]:
        return {
            "config_hash": self.config_hash,
            "seed": self.seed,
            "command": self.command,
            "version": self.version,
        }


def _format(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT.format(float(value))
    if value is None:
        return ""
    return str(value)


def _comment_lines(values: Mapping[str, Any]) -> List[str]:
    return [f"# {key}={_format(value)}" for key, value in values.items()]


def _parse_comments(lines: Iterable[str]) -> Dict[str, str]:
    meta = {}
    for line in lines:
        key, _, value = line.lstrip("#").strip().partition("=")
        if key:
            meta[key.strip()] = value.strip()
    return meta


def _ensure_parent(path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_trajectory_csv(
    path: Path, trajectory: Trajectory, provenance: Optional[Provenance] = None
) -> Path:
    """Write one row per sample with its time stamp."""
    path = _ensure_parent(path)
    header = {"rate": trajectory.rate, "m": trajectory.m}
    if provenance is not None:
        header.update(provenance.to_dict())
    samples = trajectory.samples()
    with path.open("w", encoding="utf-8", newline="") as handle:
        for line in _comment_lines(header):
            handle.write(line + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["t", *trajectory.channel_names])
        for time, row in zip(trajectory.times(), samples):
            writer.writerow([FLOAT_FORMAT.format(time), *(FLOAT_FORMAT.format(v) for v in row)])
    LOGGER.debug("wrote %d samples to %s", trajectory.n_samples, path)
    return path


def read_trajectory_csv(path: Path, m: Optional[int] = None) -> Trajectory:
    """Read a trajectory written by :func:`write_trajectory_csv`.

    The sampling rate and input count come from the comment header; without one the
    rate is taken from the time column and ``m`` defaults to 1.
    """
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as handle:
        lines = handle.read().splitlines()
    comments = [line for line in lines if line.startswith("#")]
    body = [line for line in lines if line and not line.startswith("#")]
    if not body:
        raise ChannelMismatch(f"{path} has no header row")
    reader = csv.reader(body)
    header = next(reader)
    if not header or header[0] != "t":
        raise ChannelMismatch(f"{path} must start with a 't' column")
    rows = np.array([[float(value) for value in row] for row in reader], dtype=float)
    if rows.size == 0:
        raise ChannelMismatch(f"{path} has no samples")
    meta = _parse_comments(comments)
    if "rate" in meta:
        rate = float(meta["rate"])
    elif rows.shape[0] > 1:
        rate = 1.0 / float(rows[1, 0] - rows[0, 0])
    else:
        raise ChannelMismatch(f"{path} does not state its sampling rate")
    inputs = m if m is not None else int(meta.get("m", 1))
    return Trajectory.from_samples(rows[:, 1:], m=inputs, rate=rate, channel_names=header[1:])


def read_provenance(path: Path) -> Dict[str, str]:
    """Comment-header entries of a CSV artifact."""
    with Path(path).open(encoding="utf-8") as handle:
        comments = []
        for line in handle:
            if not line.startswith("#"):
                break
            comments.append(line.rstrip("\n"))
    return _parse_comments(comments)


def write_table_csv(
    path: Path, rows: Sequence[Mapping[str, Any]], provenance: Optional[Provenance] = None
) -> Path:
    """Write dictionaries as CSV; columns follow first appearance across the rows."""
    path = _ensure_parent(path)
    columns: List[str] = []
    for row in rows:
        columns.extend(key for key in row if key not in columns)
    with path.open("w", encoding="utf-8", newline="") as handle:
        if provenance is not None:
            for line in _comment_lines(provenance.to_dict()):
                handle.write(line + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format(row.get(column)) for column in columns])
    return path


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"cannot serialise {type(value).__name__}")


def _finite_or_text(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return "inf" if value > 0 else ("-inf" if value < 0 else "nan")
    if isinstance(value, Mapping):
        return {key: _finite_or_text(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite_or_text(item) for item in value]
    return value


def write_manifest(
    path: Path, payload: Mapping[str, Any], provenance: Optional[Provenance] = None
) -> Path:
    """Write a JSON report; non-finite floats are stored as strings."""
    path = _ensure_parent(path)
    document: dict[str, Any] = {}
    if provenance is not None:
        document.update(provenance.to_dict())
    document.update(payload)
    text = json.dumps(_finite_or_text(document), indent=2, default=_json_default)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def read_manifest(path: Path) -> dict[str, Any]:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc


def save_model(
    path: Path, model: BehaviorModel, provenance: Optional[Provenance] = None
) -> Path:
    """Store ``<stem>.npz`` with the matrix and ``<stem>.json`` with its metadata."""
    path = _ensure_parent(Path(path).with_suffix(".npz"))
    np.savez_compressed(path, matrix=model.matrix)
    write_manifest(path.with_suffix(".json"), model.sidecar(), provenance)
    LOGGER.info("saved %d x %d model to %s", model.n_rows, model.n_columns, path)
    return path


def load_model(path: Path) -> BehaviorModel:
    path = Path(path).with_suffix(".npz")
    sidecar = read_manifest(path.with_suffix(".json"))
    with np.load(path) as archive:
        matrix = archive["matrix"]
    try:
        return BehaviorModel(
            matrix,
            depth=int(sidecar["L"]),
            q=int(sidecar["q"]),
            m=int(sidecar["m"]),
            rate=float(sidecar["rate"]),
            channel_names=tuple(sidecar["channel_names"]),
            is_hankel=bool(sidecar.get("is_hankel", True)),
            columns_kept=sidecar.get("nu"),
            delta=sidecar.get("delta"),
            threshold_mode=ThresholdMode(sidecar.get("threshold_mode", "relative")),
            retained_rank=sidecar.get("retained_rank"),
        )
    except KeyError as exc:
        raise ConfigError(f"model sidecar {path.with_suffix('.json')} lacks {exc}") from exc
