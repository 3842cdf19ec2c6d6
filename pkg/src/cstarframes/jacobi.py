"""Cyclic Jacobi eigendecomposition for complex Hermitian matrices.

Each rotation first removes the phase of the pivot entry with a diagonal
unitary and then applies a real Givens rotation, so the update stays inside
the Hermitian matrices and the accumulated transform stays unitary.
"""
import math

import numpy as np

from .errors import NotHermitian

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

OFF_DIAGONAL_RTOL = 1e-13
MAX_SWEEPS = 60


@njit(cache=True)
def _sweeps(a, v, threshold, scale, max_sweeps):
    n = a.shape[0]
    for _ in range(max_sweeps):
        off = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    off += a[i, j].real ** 2 + a[i, j].imag ** 2
        if math.sqrt(off) <= threshold:
            return
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mod = abs(apq)
                if mod <= 1e-300 or mod < 1e-18 * scale:
                    continue
                phase = apq / mod
                theta = 0.5 * math.atan2(2.0 * mod, a[q, q].real - a[p, p].real)
                c = math.cos(theta)
                s = math.sin(theta)
                # G = diag(1, conj(phase)) @ [[c, s], [-s, c]]
                g10 = -s * phase.conjugate()
                g11 = c * phase.conjugate()
                for i in range(n):
                    xp = a[i, p]
                    xq = a[i, q]
                    a[i, p] = c * xp + g10 * xq
                    a[i, q] = s * xp + g11 * xq
                for i in range(n):
                    xp = a[p, i]
                    xq = a[q, i]
                    a[p, i] = c * xp + g10.conjugate() * xq
                    a[q, i] = s * xp + g11.conjugate() * xq
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                for i in range(n):
                    xp = v[i, p]
                    xq = v[i, q]
                    v[i, p] = c * xp + g10 * xq
                    v[i, q] = s * xp + g11 * xq


def jacobi_eigh(h, rtol=OFF_DIAGONAL_RTOL, max_sweeps=MAX_SWEEPS):
    """Eigenvalues (ascending) and unitary eigenvectors (columns) of ``h``.

    Sweeps stop once the Frobenius mass off the diagonal drops below
    ``rtol`` times the Frobenius norm of ``h``.
    """
    a = np.array(h, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotHermitian(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    a = np.ascontiguousarray(0.5 * (a + a.conj().T))
    v = np.eye(n, dtype=complex)
    if n == 1:
        return np.array([a[0, 0].real]), v
    scale = float(np.linalg.norm(a))
    _sweeps(a, v, rtol * scale, scale, max_sweeps)
    w = np.diagonal(a).real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def phase_normalize(vecs, tol=1e-12):
    """Rotate each column so its first non-negligible coordinate is real positive."""
    out = np.array(vecs, dtype=complex)
    for j in range(out.shape[1]):
        col = out[:, j]
        cutoff = tol * max(float(np.abs(col).max(initial=0.0)), 1e-300)
        big = np.nonzero(np.abs(col) > cutoff)[0]
        if big.size:
            z = col[big[0]]
            out[:, j] = col * (abs(z) / z)
    return out
