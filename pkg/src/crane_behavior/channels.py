"""Channel layouts for the two ways of recording the crane."""
from __future__ import annotations

from enum import Enum
from typing import Tuple

from .errors import ChannelMismatch


class ChannelMode(str, Enum):
    """Which quantity is treated as the input."""

    SIMULATION = "simulation"
    EXPERIMENTAL = "experimental"

    @property
    def channel_names(self) -> Tuple[str, ...]:
        if self is ChannelMode.SIMULATION:
            return ("ddtheta4", "theta1", "theta2", "theta4", "dtheta4")
        return ("dtheta4", "theta1", "theta2", "theta4")

    @property
    def q(self) -> int:
        return len(self.channel_names)

    @property
    def input_name(self) -> str:
        return self.channel_names[0]

    def position(self, name: str) -> int:
        return self.channel_names.index(name)

    @classmethod
    def from_channel_names(cls, names: Tuple[str, ...]) -> "ChannelMode":
        for mode in cls:
            if mode.channel_names == tuple(names):
                return mode
        raise ChannelMismatch(f"no channel mode records {list(names)}")


SWAY_CHANNELS: Tuple[str, ...] = ("theta1", "theta2")
BOOM_CHANNELS: Tuple[str, ...] = ("theta4", "dtheta4")
