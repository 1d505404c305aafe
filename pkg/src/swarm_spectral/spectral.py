"""Closed-form eigenstructure of circulant weight matrices.

Every circulant matrix is diagonalized by the Fourier vectors
``v_j = (1, w^j, w^{2j}, ...)`` with ``w = exp(2 pi i / n)``; only the
eigenvalues ``lambda_j = sum_i w_i w^{ij}`` depend on the weights. Pairing
``v_j`` with its conjugate ``v_{n-j}`` gives real invariant subspaces
``V_j`` of the stacked configuration space for ``j = 0, ..., n // 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .topology import CirculantTopology

REAL_TOL = 1e-12
STRONG_STABLE_TOL = 1e-12


def unit_root_powers(n: int, exponents) -> np.ndarray:
    """``exp(2 pi i k / n)`` with ``k`` reduced mod ``n`` first."""
    k = np.mod(np.asarray(exponents, dtype=np.int64), n)
    out = np.array(np.exp(2j * np.pi * k / n))
    # quarter turns are exact: 1, i, -1, -i
    quarter = (4 * k) % n == 0
    out[quarter] = np.array([1, 1j, -1, -1j])[(4 * k[quarter]) // n]
    return out


def eigenvector(n: int, j: int) -> np.ndarray:
    """Fourier eigenvector ``v_j``; entries have modulus one."""
    if not 0 <= j < n:
        raise ValueError(f"eigenvector index {j} out of range for n={n}")
    return unit_root_powers(n, np.arange(n) * j)


def eigenvalues(top: CirculantTopology) -> np.ndarray:
    """``lambda_j = sum_i w_i exp(2 pi i ij / n)`` by direct summation."""
    n = top.n
    i = np.arange(n)
    return unit_root_powers(n, np.outer(i, i)) @ top.w


def real_block(lam):
    """Real 2x2 rotation-scaling block of ``lam``, or a plain float if ``lam`` is real."""
    lam = complex(lam)
    if lam.imag == 0.0:
        return lam.real
    return np.array([[lam.real, -lam.imag], [lam.imag, lam.real]])


def orthonormalize(vectors, drop_tol: float = 1e-10) -> np.ndarray:
    """Modified Gram-Schmidt with one re-orthogonalization pass.

    Vectors whose remaining norm falls below ``drop_tol`` times their
    original norm are dropped as linearly dependent. Returns columns.
    """
    basis = []
    for v in vectors:
        v = np.array(v, dtype=float)
        norm0 = np.linalg.norm(v)
        if norm0 == 0.0:
            continue
        for _ in range(2):
            for b in basis:
                v -= (b @ v) * b
        norm = np.linalg.norm(v)
        if norm > drop_tol * norm0:
            basis.append(v / norm)
    return np.column_stack(basis) if basis else np.zeros((len(vectors[0]), 0))


@dataclass(frozen=True)
class EigenPair:
    index: int
    value: complex
    vector: np.ndarray


@dataclass(frozen=True)
class Subspace:
    """Invariant subspace ``V_j`` of the stacked configuration space.

    ``basis`` has orthonormal columns. For four-dimensional subspaces the
    columns are ordered so that the stacked matrix acts on the coefficient
    pairs (0, 1) and (2, 3) as the block ``[[Re l, -Im l], [Im l, Re l]]``:

    0. ``(Re v, Im v)``  -- the generating configuration
    1. ``(-Im v, Re v)``
    2. ``(Im v, Re v)``
    3. ``(Re v, -Im v)``

    For ``j = 0`` and, if ``n`` is even, ``j = n // 2`` the eigenvector is
    real and the basis is ``(v, 0), (0, v)`` (normalized).
    """

    index: int
    eigenvalue: complex
    basis: np.ndarray
    generating_config: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def rate(self) -> float:
        """Convergence rate ``Re(lambda_j)``."""
        return float(self.eigenvalue.real)

    @property
    def rotation(self) -> float:
        return float(self.eigenvalue.imag) if self.dim == 4 else 0.0

    @property
    def decay_exponent(self) -> float:
        """Exponent of the decay factor ``exp((-1 + Re lambda_j) t)``."""
        return -1.0 + self.rate

    @property
    def block(self):
        return real_block(complex(self.rate, self.rotation))

    def coefficient_generator(self) -> np.ndarray:
        """Matrix ``M`` with ``(-I + W~) basis = basis @ M``."""
        if self.dim == 2:
            return self.decay_exponent * np.eye(2)
        g = np.array([[self.rate, -self.rotation], [self.rotation, self.rate]])
        return np.kron(np.eye(2), g) - np.eye(4)


def subspace_basis(n: int, j: int, eigenvalue: complex = 1.0) -> Subspace:
    """Orthonormal basis of ``V_j`` built from the four reflections of ``(Re v_j, Im v_j)``."""
    k = n // 2
    if not 0 <= j <= k:
        raise ValueError(f"subspace index {j} out of range 0..{k} for n={n}")
    v = eigenvector(n, j)
    re, im = v.real, v.imag
    if np.max(np.abs(im)) < REAL_TOL:
        zero = np.zeros(n)
        spanning = [np.concatenate([re, zero]), np.concatenate([zero, re])]
    else:
        spanning = [
            np.concatenate([re, im]),
            np.concatenate([-im, re]),
            np.concatenate([im, re]),
            np.concatenate([re, -im]),
        ]
    basis = orthonormalize(spanning)
    basis.setflags(write=False)
    generating = np.column_stack([re, im])
    generating.setflags(write=False)
    return Subspace(j, complex(eigenvalue), basis, generating)


@dataclass(frozen=True)
class SpectralData:
    n: int
    pairs: tuple[EigenPair, ...]
    subspaces: tuple[Subspace, ...]
    strong_stable: int | None

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([p.value for p in self.pairs])

    def basis_matrix(self) -> np.ndarray:
        """All subspace bases side by side: an orthogonal ``2n x 2n`` matrix."""
        return np.hstack([s.basis for s in self.subspaces])


def find_strong_stable(rates, tol: float = STRONG_STABLE_TOL) -> int | None:
    """Index ``s >= 1`` whose rate is strictly below every other ``j >= 1`` rate."""
    rates = list(rates)
    if len(rates) < 2:
        return None
    candidates = rates[1:]
    s = int(np.argmin(candidates)) + 1
    others = [r for j, r in enumerate(rates) if j >= 1 and j != s]
    if all(rates[s] < r - tol for r in others):
        return s
    return None


def closed_form_spectrum(top: CirculantTopology) -> SpectralData:
    n = top.n
    lam = eigenvalues(top)
    pairs = tuple(EigenPair(j, complex(lam[j]), eigenvector(n, j)) for j in range(n))
    subspaces = tuple(subspace_basis(n, j, lam[j]) for j in range(n // 2 + 1))
    strong = find_strong_stable(s.rate for s in subspaces)
    return SpectralData(n, pairs, subspaces, strong)


def convergence_rates(spec: SpectralData) -> list[tuple[int, float]]:
    return [(s.index, s.rate) for s in spec.subspaces]
