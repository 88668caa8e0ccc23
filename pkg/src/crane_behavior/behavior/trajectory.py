"""Flattened trajectories, index sets and the truncation operator.

A trajectory of ``N`` samples with ``q`` channels is stored sample-major: element
``q * i + c`` holds channel ``c`` of sample ``i``. The first ``m`` channels of every
sample are inputs. Indices are zero-based throughout.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple, overload

import numpy as np

from ..errors import ChannelMismatch, OutOfBounds, TooShort


@dataclass(frozen=True, slots=True, eq=False)
class Trajectory:
    """A sampled input-output trajectory.

    Attributes:
        data: Flat sample-major vector.
        q: Channels per sample.
        m: Number of leading input channels.
        rate: Sampling frequency in Hz.
        channel_names: One label per channel.
    """

    data: np.ndarray
    q: int
    m: int
    rate: float
    channel_names: Tuple[str, ...]

    def __post_init__(self) -> None:
        data = np.array(self.data, dtype=float).ravel()
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "channel_names", tuple(self.channel_names))
        if self.q < 2:
            raise ValueError("q must be at least 2")
        if not 1 <= self.m < self.q:
            raise ValueError("m must satisfy 1 <= m < q")
        if not self.rate > 0:
            raise ValueError("rate must be positive")
        if data.size % self.q:
            raise ChannelMismatch(f"trajectory length {data.size} is not a multiple of q={self.q}")
        if len(self.channel_names) != self.q:
            raise ChannelMismatch(
                f"expected {self.q} channel names, got {len(self.channel_names)}"
            )

    @classmethod
    def from_samples(
        cls,
        samples: np.ndarray,
        *,
        m: int,
        rate: float,
        channel_names: Sequence[str],
    ) -> "Trajectory":
        array = np.asarray(samples, dtype=float)
        if array.ndim != 2:
            raise ValueError("samples must be a 2-D (N, q) array")
        return cls(array.ravel(), array.shape[1], m, rate, tuple(channel_names))

    @property
    def n_samples(self) -> int:
        return self.data.size // self.q

    @property
    def duration(self) -> float:
        return self.n_samples / self.rate

    def samples(self) -> np.ndarray:
        """Return an ``(N, q)`` view of the data."""
        return self.data.reshape(self.n_samples, self.q)

    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) / self.rate

    def channel_index(self, name: str) -> int:
        try:
            return self.channel_names.index(name)
        except ValueError as exc:
            raise ChannelMismatch(f"unknown channel {name!r}; have {self.channel_names}") from exc

    def channel(self, name: str) -> np.ndarray:
        return self.samples()[:, self.channel_index(name)]

    def input_values(self) -> np.ndarray:
        return self.samples()[:, : self.m]

    def window(self, start: int, length: int) -> "Trajectory":
        if start < 0 or length < 1 or start + length > self.n_samples:
            raise TooShort(
                f"window [{start}, {start + length}) exceeds {self.n_samples} samples"
            )
        return self.with_data(self.data[start * self.q : (start + length) * self.q])

    def with_data(self, data: np.ndarray) -> "Trajectory":
        return Trajectory(
            np.asarray(data, dtype=float), self.q, self.m, self.rate, self.channel_names
        )

    def layout_matches(self, other: "Trajectory") -> bool:
        return (
            self.q == other.q
            and self.m == other.m
            and self.rate == other.rate
            and self.channel_names == other.channel_names
        )


@dataclass(frozen=True, slots=True, eq=False)
class IndexSet:
    """Sorted distinct zero-based positions into a flattened trajectory."""

    indices: np.ndarray

    def __post_init__(self) -> None:
        array = np.asarray(self.indices, dtype=np.int64).ravel()
        if array.size and (np.any(np.diff(array) <= 0)):
            raise ValueError("indices must be strictly increasing")
        if array.size and array[0] < 0:
            raise OutOfBounds(f"negative index {int(array[0])}")
        array.setflags(write=False)
        object.__setattr__(self, "indices", array)

    def __len__(self) -> int:
        return int(self.indices.size)

    def __iter__(self):
        return iter(self.indices.tolist())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IndexSet):
            return NotImplemented
        return np.array_equal(self.indices, other.indices)

    def __hash__(self) -> int:
        return hash(self.indices.tobytes())

    @classmethod
    def from_indices(cls, indices: Iterable[int]) -> "IndexSet":
        return cls(np.unique(np.fromiter((int(i) for i in indices), dtype=np.int64)))

    @classmethod
    def full(cls, size: int) -> "IndexSet":
        return cls(np.arange(size, dtype=np.int64))

    @classmethod
    def samples(cls, sample_indices: Iterable[int], q: int) -> "IndexSet":
        """Every channel of the given samples."""
        return cls.channels(sample_indices, range(q), q)

    @classmethod
    def channels(
        cls, sample_indices: Iterable[int], positions: Iterable[int], q: int
    ) -> "IndexSet":
        """Selected channel positions of the given samples."""
        rows = np.asarray(list(sample_indices), dtype=np.int64)[:, None] * q
        cols = np.asarray(list(positions), dtype=np.int64)[None, :]
        if cols.size and (cols.min() < 0 or cols.max() >= q):
            raise OutOfBounds(f"channel position outside 0..{q - 1}")
        return cls(np.unique((rows + cols).ravel()))

    def union(self, other: "IndexSet") -> "IndexSet":
        return IndexSet(np.union1d(self.indices, other.indices))

    def complement(self, size: int) -> "IndexSet":
        self.check(size)
        return IndexSet(np.setdiff1d(np.arange(size, dtype=np.int64), self.indices))

    def check(self, size: int) -> None:
        if self.indices.size and self.indices[-1] >= size:
            raise OutOfBounds(f"index {int(self.indices[-1])} outside a length-{size} trajectory")


@overload
def truncate(target: Trajectory, idx: IndexSet) -> np.ndarray: ...


@overload
def truncate(target: np.ndarray, idx: IndexSet) -> np.ndarray: ...


def truncate(target, idx: IndexSet) -> np.ndarray:
    """Keep the elements of a vector, or the rows of a matrix, listed in ``idx``."""
    array = target.data if isinstance(target, Trajectory) else np.asarray(target, dtype=float)
    idx.check(array.shape[0])
    return array[idx.indices]
