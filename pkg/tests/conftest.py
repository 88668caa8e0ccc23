"""
Shared fixtures: a noise-free second-order LTI system and a small crane model.
"""

import numpy as np
import pytest

from crane_behavior.behavior import Trajectory, build_hankel, select_columns_qr
from crane_behavior.channels import ChannelMode
from crane_behavior.dynamics import CraneParams, CraneState, simulate
from crane_behavior.excitation import SumOfSinesSpec, generate_excitation_batch

LTI_A = np.array([[0.9, 0.2], [-0.2, 0.8]])
LTI_B = np.array([0.0, 1.0])
LTI_C = np.array([1.0, 0.0])


def lti_trajectory(n_samples: int, seed: int, rate: float = 20.0) -> Trajectory:
    """Random-input response of a stable order-2 system with channels ``(u, y)``."""
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(n_samples)
    x = rng.standard_normal(2)
    y = np.empty(n_samples)
    for k in range(n_samples):
        y[k] = LTI_C @ x
        x = LTI_A @ x + LTI_B * u[k]
    samples = np.column_stack([u, y])
    return Trajectory.from_samples(samples, m=1, rate=rate, channel_names=("u", "y"))


@pytest.fixture
def lti_model():
    """Exact Hankel model of depth 10 (rank m*L + n = 12)."""
    return build_hankel(lti_trajectory(400, seed=1), depth=10)


@pytest.fixture(scope="session")
def crane_recordings():
    """Two noise-free 30 s crane recordings in simulation mode."""
    spec = SumOfSinesSpec(duration=30.0, amplitude_limit=0.3, seed=7)
    params = CraneParams()
    return [
        simulate(CraneState(), signal, params, None, mode=ChannelMode.SIMULATION)
        for signal in generate_excitation_batch(spec, 2)
    ]


@pytest.fixture(scope="session")
def small_crane_model(crane_recordings):
    """Depth-60 crane model reduced to 400 QR-selected columns."""
    return select_columns_qr(build_hankel(crane_recordings, depth=60), 400)


@pytest.fixture(scope="session")
def slew_model():
    """Depth-500 crane model from six noise-free 60 s recordings, 2000 QR columns."""
    spec = SumOfSinesSpec(seed=11)
    params = CraneParams()
    recordings = [
        simulate(CraneState(), signal, params, None, mode=ChannelMode.SIMULATION)
        for signal in generate_excitation_batch(spec, 6)
    ]
    return select_columns_qr(build_hankel(recordings, depth=500), 2000)
