"""Fixed-step Runge-Kutta simulation of the crane with zero-order-hold input."""
from __future__ import annotations

import dataclasses
import logging
import math
from typing import Optional, Sequence

import numpy as np

from ..behavior.trajectory import Trajectory
from ..channels import ChannelMode
from ..errors import NonFiniteState, TooShort
from ..excitation import differentiate_to_acceleration
from .model import CraneParams, CraneState, NoiseSpec, derivative_terms

LOGGER = logging.getLogger(__name__)

DEFAULT_RATE = 20.0
DEFAULT_SUBSTEP = 1e-3
DIVERGENCE_LIMIT = 1e6


def _rk4_step(x, u, h, a1sq, a2, residual):
    k1 = derivative_terms(x, u, a1sq, a2, residual)
    x2 = tuple(xi + 0.5 * h * ki for xi, ki in zip(x, k1))
    k2 = derivative_terms(x2, u, a1sq, a2, residual)
    x3 = tuple(xi + 0.5 * h * ki for xi, ki in zip(x, k2))
    k3 = derivative_terms(x3, u, a1sq, a2, residual)
    x4 = tuple(xi + h * ki for xi, ki in zip(x, k3))
    k4 = derivative_terms(x4, u, a1sq, a2, residual)
    return tuple(
        xi + h / 6.0 * (a + 2.0 * b + 2.0 * c + d)
        for xi, a, b, c, d in zip(x, k1, k2, k3, k4)
    )


def integrate_states(
    initial: CraneState,
    accelerations: Sequence[float],
    params: CraneParams,
    *,
    rate: float = DEFAULT_RATE,
    substep: float = DEFAULT_SUBSTEP,
) -> np.ndarray:
    """Integrate the crane and return the ``(N, 6)`` states sampled at ``rate``.

    Row ``k`` is the state after ``k`` held input intervals; the last input is recorded
    but never integrated past.
    """
    accel = np.asarray(accelerations, dtype=float).ravel()
    if accel.size == 0:
        raise TooShort("input sequence is empty")
    if not np.all(np.isfinite(accel)):
        raise ValueError("input sequence must be finite")
    substeps = max(1, math.ceil(round(1.0 / (rate * substep), 9)))
    h = 1.0 / (rate * substeps)
    a1sq = params.alpha1_squared
    a2 = params.alpha2
    residual = params.nonlinear_residual

    states = np.empty((accel.size, 6))
    x = initial.as_tuple()
    for k, u in enumerate(accel.tolist()):
        states[k] = x
        if k == accel.size - 1:
            break
        for _ in range(substeps):
            x = _rk4_step(x, u, h, a1sq, a2, residual)
        if not all(math.isfinite(v) and abs(v) <= DIVERGENCE_LIMIT for v in x):
            raise NonFiniteState(f"crane state diverged after sample {k}")
    return states


def simulate(
    initial: CraneState,
    inputs: Sequence[float],
    params: CraneParams,
    noise: Optional[NoiseSpec] = None,
    *,
    mode: ChannelMode = ChannelMode.SIMULATION,
    rate: float = DEFAULT_RATE,
    substep: float = DEFAULT_SUBSTEP,
) -> Trajectory:
    """Simulate the crane and record a trajectory.

    Args:
        initial: Starting state.
        inputs: Boom acceleration (simulation mode) or boom velocity (experimental
            mode), one value per output sample.
        params: Crane constants.
        noise: Measurement noise for the output channels; the input channel stays clean.
        mode: Channel layout of the recorded trajectory.
        rate: Output sampling frequency in Hz.
        substep: Upper bound on the integrator step in seconds.

    Returns:
        Trajectory with one sample per input value.

    Raises:
        NonFiniteState: If the integration blows up.
    """
    commanded = np.asarray(inputs, dtype=float).ravel()
    if commanded.size == 0:
        raise TooShort("input sequence is empty")
    mode = ChannelMode(mode)
    if mode is ChannelMode.EXPERIMENTAL:
        if commanded.size < 2:
            raise TooShort("velocity input needs at least 2 samples")
        initial = dataclasses.replace(initial, dtheta4=float(commanded[0]))
        accelerations = differentiate_to_acceleration(commanded, rate)
    else:
        accelerations = commanded

    states = integrate_states(initial, accelerations, params, rate=rate, substep=substep)
    theta1, theta2, theta4, dtheta4 = states[:, 0], states[:, 1], states[:, 2], states[:, 5]
    if mode is ChannelMode.SIMULATION:
        outputs = np.column_stack([theta1, theta2, theta4, dtheta4])
        stds = None if noise is None else [noise.angle_std] * 3 + [noise.velocity_std]
    else:
        outputs = np.column_stack([theta1, theta2, theta4])
        stds = None if noise is None else [noise.angle_std] * 3

    if noise is not None:
        rng = np.random.default_rng(noise.seed)
        outputs = outputs + rng.standard_normal(outputs.shape) * np.asarray(stds)

    samples = np.column_stack([commanded, outputs])
    LOGGER.debug("simulated %d samples in %s mode", commanded.size, mode.value)
    return Trajectory.from_samples(samples, m=1, rate=rate, channel_names=mode.channel_names)


def rollout_boom_input(
    inputs: Sequence[float],
    params: CraneParams,
    *,
    theta4_start: float = 0.0,
    mode: ChannelMode = ChannelMode.SIMULATION,
    rate: float = DEFAULT_RATE,
) -> Trajectory:
    """Noise-free open-loop playback of an input sequence from rest."""
    return simulate(
        CraneState(theta4=theta4_start),
        inputs,
        params,
        None,
        mode=mode,
        rate=rate,
    )
