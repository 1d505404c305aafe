"""Split a configuration into its gathering point and per-subspace components.

In the stacked layout the solution of a linear circulant gathering protocol
reads ``Z(t) = Z* + sum_j alpha_j(t) Xi_j(t)`` with scalar decay
``alpha_j(t) = exp((-1 + Re lambda_j) t)`` and ``Xi_j(t) = B_j beta_j(t)``.
``B_j`` is the orthonormal basis of :class:`~swarm_spectral.spectral.Subspace`
and ``beta_j(t)`` rotates by the angle ``Im(lambda_j) t`` inside each of the
two coordinate planes (columns 0-1 and 2-3), so its norm is constant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .configuration import Configuration, as_configuration
from .spectral import SpectralData, Subspace

GATHERING_TOL = 1e-12


def _rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def rotate_coefficients(sub: Subspace, beta: np.ndarray, t: float) -> np.ndarray:
    """Advance ``beta_j`` by the norm-preserving part of the flow over time ``t``."""
    if sub.dim == 2 or sub.rotation == 0.0:
        return np.array(beta, dtype=float)
    r = _rotation(sub.rotation * t)
    return np.concatenate([r @ beta[:2], r @ beta[2:]])


@dataclass(frozen=True)
class Decomposition:
    zstar: np.ndarray
    spectrum: SpectralData
    beta0: tuple[np.ndarray, ...]

    @property
    def n(self) -> int:
        return self.spectrum.n

    @property
    def subspaces(self) -> tuple[Subspace, ...]:
        """Subspaces ``V_1 .. V_k`` (the gathering subspace ``V_0`` excluded)."""
        return self.spectrum.subspaces[1:]

    @property
    def xi0(self) -> tuple[np.ndarray, ...]:
        return tuple(s.basis @ b for s, b in zip(self.subspaces, self.beta0))

    @property
    def rates(self) -> np.ndarray:
        """Decay exponents ``-1 + Re(lambda_j)``."""
        return np.array([s.decay_exponent for s in self.subspaces])

    @property
    def rotations(self) -> np.ndarray:
        return np.array([s.rotation for s in self.subspaces])

    @property
    def zstar_stacked(self) -> np.ndarray:
        return np.repeat(self.zstar, self.n)


@dataclass(frozen=True)
class EvolvedComponents:
    t: float
    alpha: np.ndarray
    beta: tuple[np.ndarray, ...]
    xi: tuple[np.ndarray, ...]


def check_gathering_spectrum(spec: SpectralData, tol: float = GATHERING_TOL) -> None:
    lam0 = spec.subspaces[0].eigenvalue
    if abs(lam0 - 1.0) > tol:
        raise ValueError(f"weights are not consistent: lambda_0 = {lam0:.12g}")
    bad = [s.index for s in spec.subspaces[1:] if s.rate >= 1.0 - tol]
    if bad:
        raise ValueError(f"protocol is not gathering: Re(lambda_j) >= 1 for j in {bad}")


def decompose(z0, spec: SpectralData) -> Decomposition:
    """Project ``z0`` onto every invariant subspace of a gathering circulant protocol."""
    z0 = as_configuration(z0)
    if z0.n != spec.n:
        raise ValueError(f"configuration has {z0.n} agents but the spectrum is for n={spec.n}")
    check_gathering_spectrum(spec)
    stacked = z0.stacked
    zstar = z0.positions.mean(axis=0)
    beta0 = tuple(s.basis.T @ stacked for s in spec.subspaces[1:])
    return Decomposition(zstar, spec, beta0)


def evolve(dec: Decomposition, t: float) -> EvolvedComponents:
    if t < 0:
        raise ValueError("time must be non-negative")
    alpha = np.exp(dec.rates * t)
    beta = tuple(rotate_coefficients(s, b, t) for s, b in zip(dec.subspaces, dec.beta0))
    xi = tuple(s.basis @ b for s, b in zip(dec.subspaces, beta))
    return EvolvedComponents(float(t), alpha, beta, xi)


def reconstruct_stacked(dec: Decomposition, t: float) -> np.ndarray:
    comp = evolve(dec, t)
    out = dec.zstar_stacked.copy()
    for a, xi in zip(comp.alpha, comp.xi):
        out += a * xi
    return out


def reconstruct(dec: Decomposition, t: float) -> Configuration:
    """Exact solution at time ``t``."""
    return Configuration.from_stacked(reconstruct_stacked(dec, t))


def reconstruct_many(dec: Decomposition, times) -> np.ndarray:
    """Exact solution on a time grid, shape ``(len(times), n, 2)``."""
    return np.stack([reconstruct(dec, float(t)).positions for t in np.atleast_1d(times)])
