"""Gathering, equilibrium and convergence predicates for linear protocols.

Each predicate takes a weight matrix (or something coercible to one) and
answers one question about the protocol ``z_i' = -z_i + sum_j w_ij z_j``.
The spectral tests run on :func:`swarm_spectral.eigen.eig`; the circulant
tests are purely combinatorial, so the two can be checked against each
other.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np
from scipy.sparse.csgraph import connected_components

from .configuration import as_configuration
from .eigen import GeneralSpectrum, eig
from .topology import (
    CONSISTENCY_TOL,
    CirculantTopology,
    as_weight_matrix,
    dense_matrix,
    is_connected,
    is_consistent,
)

ONE_TOL = 1e-8
MARGIN = 1e-12
ANGLE_TOL = 1e-8


@dataclass(frozen=True)
class Verdict:
    ok: bool
    witness: str | None = None

    def __bool__(self):
        return self.ok


class EquilibriaClass(NamedTuple):
    consistent: bool
    v0_only: bool | None


def _spectrum(W, spec: GeneralSpectrum | None) -> GeneralSpectrum:
    return spec if spec is not None else eig(W)


def _row_sum_witness(W) -> str | None:
    sums = as_weight_matrix(W).row_sums
    bad = np.flatnonzero(np.abs(sums - 1.0) > CONSISTENCY_TOL)
    if bad.size:
        return f"row {bad[0]} sums to {sums[bad[0]]:.17g}, not 1"
    return None


def _angle_to_ones(vector: np.ndarray) -> float:
    n = vector.size
    ones = np.ones(n) / np.sqrt(n)
    v = vector / np.linalg.norm(vector)
    perp = v - (ones @ v) * ones
    return float(np.arcsin(min(np.linalg.norm(perp), 1.0)))


def is_gathering_general(W, spec: GeneralSpectrum | None = None) -> Verdict:
    """Simple eigenvalue 1 with eigenvector ``(1, ..., 1)``, all others ``Re < 1``."""
    spec = _spectrum(W, spec)
    near_one = np.abs(spec.eigenvalues - 1.0) <= ONE_TOL
    if near_one.sum() != 1:
        return Verdict(False, f"eigenvalue 1 has algebraic multiplicity {int(near_one.sum())}")
    c = spec.cluster_of(1.0, radius=ONE_TOL)
    if spec.geometric[c] != 1 or spec.algebraic[c] != 1:
        return Verdict(False, "eigenvalue 1 is not simple")
    angle = _angle_to_ones(np.real_if_close(spec.eigenvectors[c][:, 0]))
    if angle >= ANGLE_TOL:
        return Verdict(False, f"eigenvector of eigenvalue 1 is {angle:.3g} rad away from (1, ..., 1)")
    others = spec.eigenvalues[~near_one]
    bad = others[others.real >= 1.0 - MARGIN]
    if bad.size:
        return Verdict(False, f"eigenvalue {complex(bad[0]):.12g} has real part >= 1")
    return Verdict(True)


def is_gathering_circulant(top: CirculantTopology) -> Verdict:
    """Connected interaction graph and consistent weights (non-negative weights only)."""
    if top.has_negative_weights:
        raise ValueError("is_gathering_circulant requires non-negative weights")
    W = dense_matrix(top)
    if not is_consistent(W):
        return Verdict(False, f"weights sum to {top.w.sum():.17g}, not 1")
    if not is_connected(top):
        return Verdict(False, f"interaction graph is disconnected (jumps {list(top.jumps)}, n={top.n})")
    return Verdict(True)


def equilibria_class(W, spec: GeneralSpectrum | None = None) -> EquilibriaClass:
    """Whether all gathering points are equilibria, and whether they are the only ones."""
    if not is_consistent(W):
        return EquilibriaClass(False, None)
    spec = _spectrum(W, spec)
    c = spec.cluster_of(1.0, radius=ONE_TOL)
    return EquilibriaClass(True, c is not None and int(spec.geometric[c]) == 1)


def converges_all(W, spec: GeneralSpectrum | None = None) -> bool:
    """Every solution converges to some equilibrium.

    Holds iff each eigenvalue has ``Re < 1`` or equals 1, and an eigenvalue 1
    (if present) is not defective.
    """
    spec = _spectrum(W, spec)
    for value, alg, geo in zip(spec.values, spec.algebraic, spec.geometric):
        if abs(value - 1.0) <= ONE_TOL:
            if alg != geo:
                return False
        elif value.real >= 1.0 - MARGIN:
            return False
    return True


def _adjacency(W) -> np.ndarray:
    a = as_weight_matrix(W).entries != 0.0
    np.fill_diagonal(a, False)
    return a


def weakly_connected(W) -> bool:
    return connected_components(_adjacency(W), directed=True, connection="weak")[0] == 1


def strongly_connected(W) -> bool:
    return connected_components(_adjacency(W), directed=True, connection="strong")[0] == 1


def necessary_connectivity(W) -> bool:
    """Weak connectivity of the interaction graph (necessary for gathering)."""
    return weakly_connected(W)


def sufficient_pf(W) -> bool:
    """Strong connectivity plus consistency; sufficient for non-negative weights."""
    W = as_weight_matrix(W)
    if np.any(W.entries < 0):
        raise ValueError("sufficient_pf requires non-negative weights")
    return strongly_connected(W) and is_consistent(W)


def is_doubly_stochastic(W, tol: float = CONSISTENCY_TOL) -> bool:
    if isinstance(W, CirculantTopology):
        w = W.w
        return bool(np.all((w >= 0) & (w <= 1)) and abs(w.sum() - 1.0) <= tol)
    a = as_weight_matrix(W).entries
    return bool(
        np.all(a >= 0)
        and np.all(np.abs(a.sum(axis=1) - 1.0) <= tol)
        and np.all(np.abs(a.sum(axis=0) - 1.0) <= tol)
    )


def gathering_point(z0) -> np.ndarray:
    """Average of the initial positions, the limit of every linear gathering protocol."""
    return as_configuration(z0).positions.mean(axis=0)


@dataclass(frozen=True)
class ClassificationReport:
    consistent: bool
    connected: bool | None
    nonneg: bool
    gathering_spectral: bool
    gathering_circulant: bool | None
    equilibria_are_V0_only: bool | None
    all_initial_converge: bool
    doubly_stochastic: bool
    witness: str | None = None

    @property
    def gathering(self) -> bool:
        return self.gathering_spectral

    def to_dict(self) -> dict:
        out = asdict(self)
        out["gathering"] = self.gathering
        return out


def classify(W) -> ClassificationReport:
    """Run every predicate that applies to ``W`` (a topology or a matrix).

    Circulant topologies with negative weights skip the combinatorial test
    and are judged by the spectral criterion alone.
    """
    top = W if isinstance(W, CirculantTopology) else None
    matrix = dense_matrix(top) if top is not None else as_weight_matrix(W)
    spec = eig(matrix)
    nonneg = bool(np.all(matrix.entries >= 0))
    general = is_gathering_general(matrix, spec)
    witness = general.witness or _row_sum_witness(matrix)

    connected = None
    circulant = None
    if top is not None:
        connected = is_connected(top)
        if nonneg:
            circ = is_gathering_circulant(top)
            circulant = circ.ok
            if circ.ok != general.ok:
                raise AssertionError(
                    f"circulant test ({circ.ok}) disagrees with spectral test ({general.ok})"
                )
            witness = witness or circ.witness
    else:
        connected = weakly_connected(matrix)

    eq = equilibria_class(matrix, spec)
    return ClassificationReport(
        consistent=eq.consistent,
        connected=connected,
        nonneg=nonneg,
        gathering_spectral=general.ok,
        gathering_circulant=circulant,
        equilibria_are_V0_only=eq.v0_only,
        all_initial_converge=converges_all(matrix, spec),
        doubly_stochastic=is_doubly_stochastic(top if top is not None else matrix),
        witness=witness,
    )
