"""Circulant interaction topologies and their weight matrices."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

JUMP_TOL = 1e-15
CONSISTENCY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class CirculantTopology:
    """Circulant topology generated by a weight vector ``w``.

    Agent ``i`` listens to agent ``i + s mod n`` for every jump ``s``,
    with weight ``w[s]``. ``w[0]`` is the self weight.
    """

    w: np.ndarray
    name: str | None = None
    jumps: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        w = np.array(self.w, dtype=float).ravel()
        if w.size < 2:
            raise ValueError("too few agents: a circulant topology needs n >= 2")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        jumps = tuple(int(s) for s in np.flatnonzero(np.abs(w[1:]) > JUMP_TOL) + 1)
        object.__setattr__(self, "jumps", jumps)

    def __eq__(self, other):
        if not isinstance(other, CirculantTopology):
            return NotImplemented
        return self.name == other.name and np.array_equal(self.w, other.w)

    def __hash__(self):
        return hash((self.name, self.w.tobytes()))

    @property
    def n(self) -> int:
        return int(self.w.size)

    @property
    def self_weight(self) -> float:
        return float(self.w[0])

    @property
    def has_negative_weights(self) -> bool:
        return bool(np.any(self.w < 0))

    @property
    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.w[1:], self.w[1:][::-1]))

    def edges(self) -> list[tuple[int, int]]:
        """Directed edges ``(j, i)``: agent ``j`` influences agent ``i``."""
        return [((i + s) % self.n, i) for i in range(self.n) for s in self.jumps]

    def to_dict(self) -> dict:
        out = {"n": self.n, "w": [float(x) for x in self.w]}
        if self.name is not None:
            out["name"] = self.name
        return out

    @classmethod
    def from_dict(cls, data: dict) -> CirculantTopology:
        if not isinstance(data, dict):
            raise ValueError("topology JSON must be an object")
        for key in ("n", "w"):
            if key not in data:
                raise ValueError(f"topology JSON is missing field {key!r}")
        n, w = data["n"], data["w"]
        if not isinstance(n, int) or isinstance(n, bool):
            raise ValueError("field 'n' must be an integer")
        if not isinstance(w, list) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in w
        ):
            raise ValueError("field 'w' must be a list of numbers")
        if len(w) != n:
            raise ValueError(f"field 'w' has length {len(w)} but n = {n}")
        name = data.get("name")
        if name is not None and not isinstance(name, str):
            raise ValueError("field 'name' must be a string")
        return cls(np.asarray(w, dtype=float), name=name)


@dataclass(frozen=True)
class WeightMatrix:
    """Dense weight matrix with its provenance (``"circulant"`` or ``"general"``)."""

    entries: np.ndarray
    origin: str = "general"

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"weight matrix must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("weight matrix entries must be finite")
        if self.origin not in ("circulant", "general"):
            raise ValueError(f"unknown origin {self.origin!r}")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    @property
    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.entries, self.entries.T))

    def generating_vector(self) -> np.ndarray:
        """First row, which generates a circulant matrix."""
        if self.origin != "circulant":
            raise ValueError("only circulant matrices have a generating vector")
        return self.entries[0].copy()


@dataclass(frozen=True)
class LiftedMatrix:
    entries: np.ndarray
    layout: str


def make_circulant(w, name: str | None = None) -> CirculantTopology:
    return CirculantTopology(np.asarray(w, dtype=float), name=name)


def as_weight_matrix(W) -> WeightMatrix:
    """Coerce a topology, :class:`WeightMatrix` or array into a :class:`WeightMatrix`."""
    if isinstance(W, WeightMatrix):
        return W
    if isinstance(W, CirculantTopology):
        return dense_matrix(W)
    return WeightMatrix(np.asarray(W, dtype=float), origin="general")


def dense_matrix(top: CirculantTopology) -> WeightMatrix:
    """Materialize ``W[i, j] = w[(j - i) mod n]``."""
    n = top.n
    idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
    return WeightMatrix(top.w[idx], origin="circulant")


def connected_by_gcd(top: CirculantTopology) -> bool:
    return reduce(math.gcd, top.jumps, top.n) == 1


def connected_by_search(top: CirculantTopology) -> bool:
    """Breadth-first search over the undirected version of the edge set."""
    n = top.n
    adjacency = [set() for _ in range(n)]
    for j, i in top.edges():
        adjacency[i].add(j)
        adjacency[j].add(i)
    seen = {0}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in adjacency[u] - seen:
            seen.add(v)
            queue.append(v)
    return len(seen) == n


def is_connected(top: CirculantTopology) -> bool:
    """Connectivity of the circulant graph: ``gcd(n, s_1, ..., s_k) == 1``.

    Cross-checked against a breadth-first search; a disagreement means a bug
    and raises ``AssertionError``.
    """
    by_gcd = connected_by_gcd(top)
    by_search = connected_by_search(top)
    if by_gcd != by_search:
        raise AssertionError(
            f"gcd test ({by_gcd}) disagrees with graph search ({by_search}) for w={top.w}"
        )
    return by_gcd


def is_consistent(W, tol: float = CONSISTENCY_TOL) -> bool:
    """Every row of the weight matrix sums to one."""
    W = as_weight_matrix(W)
    return bool(np.all(np.abs(W.row_sums - 1.0) <= tol))


def lift(W, layout: str = "interleaved") -> LiftedMatrix:
    """Kronecker lift to the 2n-dimensional configuration space.

    ``interleaved`` acts on ``(x_0, y_0, x_1, y_1, ...)`` and equals
    ``W kron I_2``; ``stacked`` acts on ``(x_0, ..., y_0, ...)`` and equals
    ``I_2 kron W``.
    """
    W = as_weight_matrix(W)
    eye = np.eye(2)
    if layout == "interleaved":
        entries = np.kron(W.entries, eye)
    elif layout == "stacked":
        entries = np.kron(eye, W.entries)
    else:
        raise ValueError(f"unknown layout {layout!r}; use 'interleaved' or 'stacked'")
    return LiftedMatrix(entries, layout)


def n_bug(n: int) -> CirculantTopology:
    w = np.zeros(n)
    w[1] = 1.0
    return CirculantTopology(w, name=f"n-bug-{n}")


def go_to_the_middle(n: int) -> CirculantTopology:
    w = np.zeros(n)
    w[1] += 0.5
    w[n - 1] += 0.5
    return CirculantTopology(w, name=f"go-to-the-middle-{n}")


def go_to_the_average(n: int) -> CirculantTopology:
    return CirculantTopology(np.full(n, 1.0 / n), name=f"go-to-the-average-{n}")
