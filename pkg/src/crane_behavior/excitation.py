"""Smooth excitation signals for data collection.

Inputs are sums of sines with normally distributed frequencies. They are faded in
and out with a raised-cosine ramp and scaled to the actuator limit so recorded
sequences start and end at rest.
"""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from typing import Any, List

import numpy as np

from .errors import DegenerateSignal, TooShort

LOGGER = logging.getLogger(__name__)

MAX_REDRAWS = 8


@dataclass(frozen=True, slots=True)
class SumOfSinesSpec:
    """Parameters of one excitation sequence."""

    n_sines: int = 4
    freq_mean: float = 0.8
    freq_std: float = 0.3
    duration: float = 60.0
    rate: float = 20.0
    amplitude_limit: float = 0.6
    taper_duration: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_sines < 1:
            raise ValueError("n_sines must be at least 1")
        if self.freq_std < 0:
            raise ValueError("freq_std must be non-negative")
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if not self.rate > 0:
            raise ValueError("rate must be positive")
        if not self.amplitude_limit > 0:
            raise ValueError("amplitude_limit must be positive")
        if self.taper_duration < 0 or 2 * self.taper_duration > self.duration:
            raise ValueError("taper_duration must be in [0, duration / 2]")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.rate))

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


def raised_cosine_taper(n_samples: int, rate: float, taper_duration: float) -> np.ndarray:
    """Window that rises from 0 to 1 over ``taper_duration`` and mirrors at the end."""
    window = np.ones(n_samples)
    if taper_duration <= 0 or n_samples == 0:
        return window
    t = np.arange(n_samples) / rate
    from_end = t[-1] - t
    rise = t < taper_duration
    fall = from_end < taper_duration
    window[rise] = 0.5 - 0.5 * np.cos(np.pi * t[rise] / taper_duration)
    window[fall] = np.minimum(
        window[fall], 0.5 - 0.5 * np.cos(np.pi * from_end[fall] / taper_duration)
    )
    return window


def generate_excitation(spec: SumOfSinesSpec) -> np.ndarray:
    """Draw a tapered, amplitude-limited sum of sines on the sample grid.

    Raises:
        DegenerateSignal: If every draw vanishes on the grid.
    """
    n_samples = spec.n_samples
    if n_samples < 2:
        raise TooShort("excitation needs at least 2 samples")
    t = np.arange(n_samples) / spec.rate
    window = raised_cosine_taper(n_samples, spec.rate, spec.taper_duration)
    rng = np.random.default_rng(spec.seed)
    for attempt in range(MAX_REDRAWS):
        freqs = rng.normal(spec.freq_mean, spec.freq_std, size=spec.n_sines)
        signal = np.sin(np.outer(t, freqs)).sum(axis=1) * window
        peak = float(np.max(np.abs(signal)))
        if peak > 1e-12:
            LOGGER.debug("excitation frequencies %s (attempt %d)", np.round(freqs, 4), attempt + 1)
            return signal * (spec.amplitude_limit / peak)
    raise DegenerateSignal(f"sum of sines vanished on the grid after {MAX_REDRAWS} draws")


def generate_excitation_batch(spec: SumOfSinesSpec, count: int) -> List[np.ndarray]:
    """Independent sequences, one spawned seed each."""
    children = np.random.SeedSequence(spec.seed).spawn(count)
    return [
        generate_excitation(dataclasses.replace(spec, seed=int(child.generate_state(1)[0])))
        for child in children
    ]


def differentiate_to_acceleration(velocity: np.ndarray, rate: float) -> np.ndarray:
    """Forward differences scaled by ``rate``; the final value repeats the previous one."""
    values = np.asarray(velocity, dtype=float).ravel()
    if values.size < 2:
        raise TooShort("differentiation needs at least 2 samples")
    accel = np.empty_like(values)
    accel[:-1] = np.diff(values) * rate
    accel[-1] = accel[-2]
    return accel


def integrate_acceleration(acceleration: np.ndarray, v0: float, rate: float) -> np.ndarray:
    """Inverse of :func:`differentiate_to_acceleration`."""
    values = np.asarray(acceleration, dtype=float).ravel()
    out = np.empty_like(values)
    if values.size == 0:
        return out
    out[0] = v0
    out[1:] = v0 + np.cumsum(values[:-1]) / rate
    return out
