from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Configuration:
    """Planar positions of ``n`` agents, row ``i`` holding ``(x_i, y_i)``.

    ``interleaved`` is ``(x_0, y_0, x_1, y_1, ...)`` and ``stacked`` is
    ``(x_0, ..., x_{n-1}, y_0, ..., y_{n-1})``. Both are pure permutations of
    the stored values, so conversions round-trip bit for bit.
    """

    positions: np.ndarray

    def __post_init__(self):
        p = np.array(self.positions, dtype=float)
        if p.ndim != 2 or p.shape[1] != 2:
            raise ValueError(f"positions must have shape (n, 2), got {p.shape}")
        if p.shape[0] < 1:
            raise ValueError("a configuration needs at least one agent")
        p.setflags(write=False)
        object.__setattr__(self, "positions", p)

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def x(self) -> np.ndarray:
        return self.positions[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.positions[:, 1]

    @property
    def interleaved(self) -> np.ndarray:
        return self.positions.reshape(-1).copy()

    @property
    def stacked(self) -> np.ndarray:
        return self.positions.T.reshape(-1).copy()

    @classmethod
    def from_interleaved(cls, z) -> Configuration:
        z = np.asarray(z, dtype=float)
        if z.ndim != 1 or z.size % 2:
            raise ValueError("interleaved vector must be 1-d with even length")
        return cls(z.reshape(-1, 2))

    @classmethod
    def from_stacked(cls, z) -> Configuration:
        z = np.asarray(z, dtype=float)
        if z.ndim != 1 or z.size % 2:
            raise ValueError("stacked vector must be 1-d with even length")
        return cls(z.reshape(2, -1).T)

    def to_dict(self) -> dict:
        return {"positions": self.positions.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> Configuration:
        if not isinstance(data, dict) or "positions" not in data:
            raise ValueError("configuration JSON must be an object with a 'positions' field")
        pos = data["positions"]
        if not isinstance(pos, list) or not all(
            isinstance(p, list) and len(p) == 2 for p in pos
        ):
            raise ValueError("'positions' must be a list of [x, y] pairs")
        return cls(np.asarray(pos, dtype=float))


def as_configuration(z) -> Configuration:
    if isinstance(z, Configuration):
        return z
    return Configuration(np.asarray(z, dtype=float))


def random_cloud(n: int, seed: int, half_width: float = 1.0) -> Configuration:
    """Positions drawn uniformly from ``[-half_width, half_width]^2``.

    Uses numpy's PCG64 generator seeded with ``seed`` so results are
    reproducible across runs and platforms.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    return Configuration(rng.uniform(-half_width, half_width, size=(n, 2)))
