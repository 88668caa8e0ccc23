"""Physical parameters, state container and the simplified slewing-crane ODE."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Any, Mapping, Tuple

import numpy as np

STATE_NAMES: Tuple[str, ...] = ("theta1", "theta2", "theta4", "dtheta1", "dtheta2", "dtheta4")


@dataclass(frozen=True, slots=True)
class CraneParams:
    """Constants of the rotary crane.

    Attributes:
        boom_length: Boom length ``l_b`` in meters.
        cable_length: Rope length ``l`` in meters.
        luffing_angle: Fixed luffing angle ``theta3`` in radians.
        gravity: Gravitational acceleration in m/s^2.
        nonlinear_residual: Adds the cubic pendulum correction to both sway equations.
    """

    boom_length: float = 2.0
    cable_length: float = 1.0
    luffing_angle: float = math.pi / 4
    gravity: float = 9.81
    nonlinear_residual: bool = False

    def __post_init__(self) -> None:
        if not self.boom_length > 0:
            raise ValueError("boom_length must be positive")
        if not self.cable_length > 0:
            raise ValueError("cable_length must be positive")
        if not self.gravity > 0:
            raise ValueError("gravity must be positive")
        if not math.isfinite(self.luffing_angle):
            raise ValueError("luffing_angle must be finite")

    @property
    def alpha1(self) -> float:
        return math.sqrt(self.gravity / self.cable_length)

    @property
    def alpha1_squared(self) -> float:
        return self.gravity / self.cable_length

    @property
    def alpha2(self) -> float:
        return self.boom_length * math.sin(self.luffing_angle) / self.cable_length

    @classmethod
    def from_mapping(cls, payload: Mapping[str, Any]) -> "CraneParams":
        known = {item.name for item in fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ValueError(f"unknown crane parameters: {sorted(unknown)}")
        return cls(**dict(payload))

    def to_dict(self) -> dict[str, Any]:
        return {
            "boom_length": self.boom_length,
            "cable_length": self.cable_length,
            "luffing_angle": self.luffing_angle,
            "gravity": self.gravity,
            "nonlinear_residual": self.nonlinear_residual,
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
        }


@dataclass(frozen=True, slots=True)
class CraneState:
    """State ``(theta1, theta2, theta4, dtheta1, dtheta2, dtheta4)`` of the crane."""

    theta1: float = 0.0
    theta2: float = 0.0
    theta4: float = 0.0
    dtheta1: float = 0.0
    dtheta2: float = 0.0
    dtheta4: float = 0.0

    def __post_init__(self) -> None:
        if not all(math.isfinite(value) for value in self.as_tuple()):
            raise ValueError("crane state must be finite")

    def as_tuple(self) -> Tuple[float, float, float, float, float, float]:
        return (self.theta1, self.theta2, self.theta4, self.dtheta1, self.dtheta2, self.dtheta4)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=float)

    @classmethod
    def from_array(cls, values: np.ndarray | Tuple[float, ...]) -> "CraneState":
        array = np.asarray(values, dtype=float).ravel()
        if array.size != len(STATE_NAMES):
            raise ValueError(f"crane state needs {len(STATE_NAMES)} values, got {array.size}")
        return cls(*(float(value) for value in array))


@dataclass(frozen=True, slots=True)
class NoiseSpec:
    """Gaussian measurement noise applied to measured output channels."""

    angle_std: float = 0.002
    velocity_std: float = 0.005
    seed: int = 0

    def __post_init__(self) -> None:
        if self.angle_std < 0 or self.velocity_std < 0:
            raise ValueError("noise standard deviations must be non-negative")

    def to_dict(self) -> dict[str, Any]:
        return {"angle_std": self.angle_std, "velocity_std": self.velocity_std, "seed": self.seed}


def derivative_terms(
    x: Tuple[float, ...],
    u: float,
    alpha1_sq: float,
    alpha2: float,
    residual: bool,
) -> Tuple[float, float, float, float, float, float]:
    """Right-hand side on plain floats; the integrator calls this in its hot loop."""
    theta1, theta2, _, dtheta1, dtheta2, dtheta4 = x
    ddtheta1 = -alpha1_sq * theta1 + alpha2 * dtheta4 * dtheta4 + 2.0 * dtheta2 * dtheta4
    ddtheta2 = -alpha1_sq * theta2 - alpha2 * u
    if residual:
        ddtheta1 += alpha1_sq * theta1**3 / 6.0
        ddtheta2 += alpha1_sq * theta2**3 / 6.0
    return (dtheta1, dtheta2, dtheta4, ddtheta1, ddtheta2, u)


def state_derivative(state: CraneState, u: float, params: CraneParams) -> np.ndarray:
    """Evaluate the slewing-crane dynamics.

    Args:
        state: Current crane state.
        u: Boom angular acceleration in rad/s^2.
        params: Crane constants.

    Returns:
        ``(dtheta1, dtheta2, dtheta4, ddtheta1, ddtheta2, ddtheta4)`` as a float array.
    """
    terms = derivative_terms(
        state.as_tuple(),
        float(u),
        params.alpha1_squared,
        params.alpha2,
        params.nonlinear_residual,
    )
    return np.array(terms, dtype=float)
