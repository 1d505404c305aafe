"""Dense nonsymmetric eigensolver for small real weight matrices.

Eigenvalues come from balancing, Householder reduction to upper Hessenberg
form and the implicitly double-shifted (Francis) QR iteration. Eigenvectors
are recovered afterwards by inverse iteration on the original matrix, and
multiplicities from a column-pivoted QR rank estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .topology import as_weight_matrix

MAX_N = 256
EPS = np.finfo(float).eps
REAL_TOL = 1e-10
CLUSTER_TOL = 1e-8
RANK_TOL = 1e-10


class ConvergenceError(RuntimeError):
    """QR iteration did not converge within its sweep budget."""


def balance(a: np.ndarray, radix: float = 2.0) -> np.ndarray:
    """Parlett-Reinsch diagonal similarity scaling (powers of ``radix``).

    Equalizes off-diagonal row and column norms to reduce rounding error in
    the QR iteration. Returns a scaled copy; eigenvalues are unchanged.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    sqrdx = radix * radix
    done = False
    while not done:
        done = True
        for i in range(n):
            c = np.sum(np.abs(a[:, i])) - abs(a[i, i])
            r = np.sum(np.abs(a[i, :])) - abs(a[i, i])
            if c == 0.0 or r == 0.0:
                continue
            g = r / radix
            f = 1.0
            s = c + r
            while c < g:
                f *= radix
                c *= sqrdx
            g = r * radix
            while c > g:
                f /= radix
                c /= sqrdx
            if (c + r) / f < 0.95 * s:
                done = False
                a[i, :] /= f
                a[:, i] *= f
    return a


def hessenberg(a: np.ndarray) -> np.ndarray:
    """Householder reduction to upper Hessenberg form (similarity transform)."""
    h = np.array(a, dtype=float)
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1 :, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        v = x.copy()
        v[0] += math.copysign(alpha, x[0])
        v /= np.linalg.norm(v)
        h[k + 1 :, k:] -= 2.0 * np.outer(v, v @ h[k + 1 :, k:])
        h[:, k + 1 :] -= 2.0 * np.outer(h[:, k + 1 :] @ v, v)
        h[k + 2 :, k] = 0.0
    return h


def hessenberg_qr(h: np.ndarray, max_sweeps: int | None = None) -> np.ndarray:
    """Eigenvalues of an upper Hessenberg matrix by Francis double-shift QR.

    Only the active window is updated since the Schur vectors are not
    needed. Raises :class:`ConvergenceError` after ``max_sweeps`` QR sweeps
    in total (default ``30 * n``).
    """
    a = np.array(h, dtype=float)
    n = a.shape[0]
    if max_sweeps is None:
        max_sweeps = 30 * n
    out = np.zeros(n, dtype=complex)
    anorm = sum(np.sum(np.abs(a[i, max(i - 1, 0) :])) for i in range(n))
    sweeps = 0
    nn = n - 1
    t = 0.0
    while nn >= 0:
        its = 0
        while True:
            # look for a negligible subdiagonal element
            l = nn
            while l > 0:
                s = abs(a[l - 1, l - 1]) + abs(a[l, l])
                if s == 0.0:
                    s = anorm
                if abs(a[l, l - 1]) <= EPS * s:
                    a[l, l - 1] = 0.0
                    break
                l -= 1
            x = a[nn, nn]
            if l == nn:
                out[nn] = x + t
                nn -= 1
                break
            y = a[nn - 1, nn - 1]
            w = a[nn, nn - 1] * a[nn - 1, nn]
            if l == nn - 1:
                p = 0.5 * (y - x)
                q = p * p + w
                z = math.sqrt(abs(q))
                x += t
                if q >= 0.0:
                    z = p + math.copysign(z, p)
                    out[nn - 1] = out[nn] = x + z
                    if z != 0.0:
                        out[nn] = x - w / z
                else:
                    out[nn - 1] = complex(x + p, z)
                    out[nn] = complex(x + p, -z)
                nn -= 2
                break
            if sweeps >= max_sweeps:
                raise ConvergenceError("qr_no_convergence")
            if its in (10, 20):
                # exceptional shift
                t += x
                for i in range(nn + 1):
                    a[i, i] -= x
                s = abs(a[nn, nn - 1]) + abs(a[nn - 1, nn - 2])
                x = y = 0.75 * s
                w = -0.4375 * s * s
            its += 1
            sweeps += 1
            # find two consecutive small subdiagonal elements
            m = nn - 2
            while True:
                z = a[m, m]
                r = x - z
                s = y - z
                p = (r * s - w) / a[m + 1, m] + a[m, m + 1]
                q = a[m + 1, m + 1] - z - r - s
                r = a[m + 2, m + 1]
                s = abs(p) + abs(q) + abs(r)
                p /= s
                q /= s
                r /= s
                if m == l:
                    break
                u = abs(a[m, m - 1]) * (abs(q) + abs(r))
                v = abs(p) * (abs(a[m - 1, m - 1]) + abs(z) + abs(a[m + 1, m + 1]))
                if u <= EPS * v:
                    break
                m -= 1
            for i in range(m + 2, nn + 1):
                a[i, i - 2] = 0.0
                if i != m + 2:
                    a[i, i - 3] = 0.0
            # chase the bulge
            for k in range(m, nn):
                if k != m:
                    p = a[k, k - 1]
                    q = a[k + 1, k - 1]
                    r = a[k + 2, k - 1] if k + 1 != nn else 0.0
                    x = abs(p) + abs(q) + abs(r)
                    if x != 0.0:
                        p /= x
                        q /= x
                        r /= x
                s = math.copysign(math.sqrt(p * p + q * q + r * r), p)
                if s == 0.0:
                    continue
                if k == m:
                    if l != m:
                        a[k, k - 1] = -a[k, k - 1]
                else:
                    a[k, k - 1] = -s * x
                p += s
                x = p / s
                y = q / s
                z = r / s
                q /= p
                r /= p
                cols = slice(k, nn + 1)
                if k + 1 != nn:
                    pr = a[k, cols] + q * a[k + 1, cols] + r * a[k + 2, cols]
                    a[k + 2, cols] -= pr * z
                else:
                    pr = a[k, cols] + q * a[k + 1, cols]
                a[k + 1, cols] -= pr * y
                a[k, cols] -= pr * x
                rows = slice(l, min(nn, k + 3) + 1)
                if k + 1 != nn:
                    pc = x * a[rows, k] + y * a[rows, k + 1] + z * a[rows, k + 2]
                    a[rows, k + 2] -= pc * r
                else:
                    pc = x * a[rows, k] + y * a[rows, k + 1]
                a[rows, k + 1] -= pc * q
                a[rows, k] -= pc
            if l >= nn - 1:
                break
    return out


def eigvals(a, max_sweeps: int | None = None) -> np.ndarray:
    """All eigenvalues of a real square matrix (with multiplicity)."""
    a = np.asarray(a, dtype=float)
    if a.shape[0] == 0:
        return np.zeros(0, dtype=complex)
    # work at unit scale so shift arithmetic neither under- nor overflows
    s = float(np.max(np.abs(a)))
    if s == 0.0 or not np.isfinite(s):
        s = 1.0
    return s * hessenberg_qr(hessenberg(balance(a / s)), max_sweeps=max_sweeps)


def _clean_real(values: np.ndarray) -> np.ndarray:
    values = values.copy()
    small = np.abs(values.imag) < REAL_TOL * (1.0 + np.abs(values))
    values[small] = values[small].real
    return values


def _clusters(values: np.ndarray, radius: float) -> list[np.ndarray]:
    """Single-linkage groups of eigenvalues closer than ``radius``."""
    n = values.size
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) <= radius:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [np.array(g) for g in groups.values()]


def numerical_rank(a: np.ndarray, tol: float) -> int:
    if a.size == 0:
        return 0
    r = scipy.linalg.qr(a, mode="r", pivoting=True)[0]
    return int(np.sum(np.abs(np.diag(r)) > tol))


def inverse_iteration(a: np.ndarray, value: complex, count: int, scale: float, iters: int = 3):
    """``count`` orthonormal (approximate) eigenvectors of ``a`` for ``value``."""
    n = a.shape[0]
    dtype = float if value.imag == 0.0 else complex
    rng = np.random.default_rng(0)
    x = rng.standard_normal((n, count)).astype(dtype)
    target = value.real if dtype is float else value
    delta = 1e-10 * scale
    for _ in range(60):
        shifted = a.astype(dtype) - (target + delta) * np.eye(n)
        try:
            lu = scipy.linalg.lu_factor(shifted, check_finite=False)
        except (np.linalg.LinAlgError, ValueError):
            delta *= 4.0
            continue
        y = x
        ok = True
        for _ in range(iters):
            y = scipy.linalg.lu_solve(lu, y, check_finite=False)
            if not np.all(np.isfinite(y)):
                ok = False
                break
            y, _ = np.linalg.qr(y)
        if ok:
            return y
        delta *= 4.0
    raise ConvergenceError("inverse iteration failed to produce finite eigenvectors")


@dataclass(frozen=True)
class GeneralSpectrum:
    """Spectrum of a general real matrix.

    ``eigenvalues`` lists all ``n`` eigenvalues with multiplicity. ``values``
    holds one representative per cluster of numerically equal eigenvalues,
    with matching ``algebraic``/``geometric`` multiplicities and a matrix of
    orthonormal eigenvectors (columns) in ``eigenvectors``.
    """

    eigenvalues: np.ndarray
    values: np.ndarray
    algebraic: np.ndarray
    geometric: np.ndarray
    eigenvectors: tuple[np.ndarray, ...]
    scale: float

    @property
    def defective(self) -> bool:
        return bool(np.any(self.geometric < self.algebraic))

    @property
    def all_real(self) -> bool:
        return bool(np.all(self.values.imag == 0.0))

    def cluster_of(self, target: complex, radius: float | None = None) -> int | None:
        """Index into ``values`` of the cluster within ``radius`` of ``target``."""
        if radius is None:
            radius = CLUSTER_TOL * self.scale
        d = np.abs(self.values - target)
        if d.size == 0 or d.min() > radius:
            return None
        return int(np.argmin(d))


def eig(W, max_sweeps: int | None = None) -> GeneralSpectrum:
    a = as_weight_matrix(W).entries
    n = a.shape[0]
    if n > MAX_N:
        raise ValueError(f"matrix too large for the dense solver: n={n} > {MAX_N}")
    norm = float(np.linalg.norm(a, 2))
    scale = norm if norm > 0.0 else 1.0

    raw = _clean_real(eigvals(a, max_sweeps=max_sweeps))
    order = np.lexsort((-raw.imag, -raw.real))
    raw = raw[order]

    reps, alg, geo, vecs = [], [], [], []
    for group in _clusters(raw, CLUSTER_TOL * scale):
        members = raw[group]
        value = complex(members.mean())
        if np.all(members.imag == 0.0):
            value = complex(value.real, 0.0)
        rank = numerical_rank(a - value * np.eye(n), RANK_TOL * scale)
        g = max(n - rank, 1)
        reps.append(value)
        alg.append(len(group))
        geo.append(min(g, len(group)))
        vecs.append(inverse_iteration(a, value, geo[-1], scale))
    reps_arr = np.array(reps, dtype=complex)
    order = np.lexsort((-reps_arr.imag, -reps_arr.real))
    return GeneralSpectrum(
        eigenvalues=raw,
        values=reps_arr[order],
        algebraic=np.array(alg)[order],
        geometric=np.array(geo)[order],
        eigenvectors=tuple(vecs[i] for i in order),
        scale=scale,
    )


def is_non_defective_real(W) -> bool:
    """All eigenvalues real and each algebraic multiplicity equals the geometric one."""
    spec = eig(W)
    return spec.all_real and not spec.defective
