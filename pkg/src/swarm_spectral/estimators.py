"""scikit-learn compatible wrappers.

Samples are configurations in the stacked layout: one row per
configuration, columns ``x_0 .. x_{n-1}, y_0 .. y_{n-1}``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .decompose import check_gathering_spectrum, decompose, reconstruct_stacked
from .configuration import Configuration
from .spectral import closed_form_spectrum
from .topology import make_circulant


def check_weights(weights) -> np.ndarray:
    """Validate a circulant generating vector."""
    if weights is None:
        raise ValueError("weights must be given (the circulant generating vector)")
    w = check_array(np.atleast_2d(np.asarray(weights, dtype=float)), ensure_2d=True)
    if w.shape[0] != 1:
        raise ValueError(f"weights must be a 1-d vector, got shape {np.shape(weights)}")
    return w[0]


def check_configurations(X, n_agents: int | None = None) -> np.ndarray:
    """Validate a batch of stacked configurations, shape ``(n_samples, 2 n)``."""
    X = check_array(X, dtype=np.float64)
    if X.shape[1] % 2:
        raise ValueError(f"stacked configurations need an even number of columns, got {X.shape[1]}")
    if n_agents is not None and X.shape[1] != 2 * n_agents:
        raise ValueError(f"X has {X.shape[1]} columns but the topology has {n_agents} agents "
                         f"({2 * n_agents} columns expected)")
    return X


class CirculantModeDecomposer(TransformerMixin, BaseEstimator):
    """Coordinates of configurations in the invariant-subspace basis.

    ``transform`` returns, per sample, the coefficients on the orthonormal
    bases of ``V_0, V_1, ..., V_k`` in that order (see ``subspace_slices_``).
    The basis is orthogonal, so ``inverse_transform`` is exact.

    Parameters
    ----------
    weights : array-like of shape (n_agents,)
        Generating vector of the circulant weight matrix.
    """

    def __init__(self, weights=None):
        self.weights = weights

    def fit(self, X=None, y=None):
        w = check_weights(self.weights)
        top = make_circulant(w)
        if X is not None:
            check_configurations(X, top.n)
        self.topology_ = top
        self.spectrum_ = closed_form_spectrum(top)
        self.basis_ = self.spectrum_.basis_matrix()
        slices, start = [], 0
        for sub in self.spectrum_.subspaces:
            slices.append(slice(start, start + sub.dim))
            start += sub.dim
        self.subspace_slices_ = slices
        self.rates_ = np.array([s.rate for s in self.spectrum_.subspaces])
        self.n_features_in_ = 2 * top.n
        return self

    def transform(self, X):
        check_is_fitted(self, "basis_")
        X = check_configurations(X, self.topology_.n)
        return X @ self.basis_

    def inverse_transform(self, X):
        check_is_fitted(self, "basis_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.basis_.shape[1]:
            raise ValueError(f"expected {self.basis_.shape[1]} coefficients, got {X.shape[1]}")
        return X @ self.basis_.T

    def component(self, X, j: int):
        """Part of each configuration lying in ``V_j`` (stacked layout)."""
        C = self.transform(X)
        sl = self.subspace_slices_[j]
        return C[:, sl] @ self.basis_[:, sl].T


class GatheringFlow(TransformerMixin, BaseEstimator):
    """Advance configurations by time ``t`` under the linear circulant protocol.

    Uses the closed-form solution, so no integration error is incurred. The
    weights must define a gathering protocol.
    """

    def __init__(self, weights=None, t=1.0):
        self.weights = weights
        self.t = t

    def fit(self, X=None, y=None):
        if not np.isfinite(self.t) or self.t < 0:
            raise ValueError(f"t must be a finite non-negative number, got {self.t!r}")
        top = make_circulant(check_weights(self.weights))
        if X is not None:
            check_configurations(X, top.n)
        spec = closed_form_spectrum(top)
        check_gathering_spectrum(spec)
        self.topology_ = top
        self.spectrum_ = spec
        self.n_features_in_ = 2 * top.n
        return self

    def transform(self, X):
        check_is_fitted(self, "spectrum_")
        X = check_configurations(X, self.topology_.n)
        out = np.empty_like(X)
        for i, row in enumerate(X):
            dec = decompose(Configuration.from_stacked(row), self.spectrum_)
            out[i] = reconstruct_stacked(dec, float(self.t))
        return out

    def predict(self, X):
        """Gathering point of each configuration, shape ``(n_samples, 2)``."""
        check_is_fitted(self, "spectrum_")
        X = check_configurations(X, self.topology_.n)
        n = self.topology_.n
        return np.column_stack([X[:, :n].mean(axis=1), X[:, n:].mean(axis=1)])
