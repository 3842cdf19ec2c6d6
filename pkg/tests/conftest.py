"""Shared helpers: random inputs and independent numpy/scipy oracles."""
import math

import numpy as np
import pytest
import scipy.linalg as sla

from cstarframes import AlgebraSignature, CStarElement, FrameSystem, ModuleMatrix, ModuleVector

SIGNATURES = [(1,), (2,), (1, 1), (2, 3)]


def rand_element(sig, rng, hermitian=False, positive=False):
    sig = AlgebraSignature.of(sig)
    blocks = []
    for n in sig.block_sizes:
        b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        if positive:
            b = b @ b.conj().T + 0.5 * np.eye(n)
        elif hermitian:
            b = b + b.conj().T
        blocks.append(b)
    return CStarElement(sig, tuple(blocks))


def rand_vector(sig, d, rng):
    sig = AlgebraSignature.of(sig)
    return ModuleVector(sig, tuple(rng.standard_normal((d, n, n)) + 1j * rng.standard_normal((d, n, n))
                                   for n in sig.block_sizes))


def rand_matrix(sig, p, q, rng):
    sig = AlgebraSignature.of(sig)
    return ModuleMatrix(sig, tuple(rng.standard_normal((p, q, n, n)) + 1j * rng.standard_normal((p, q, n, n))
                                   for n in sig.block_sizes))


def rand_frame(sig, d, n, rng):
    return FrameSystem(rand_matrix(sig, n, d, rng))


# oracles: plain complex linear algebra on one flattened block


def oracle_inv_sqrt(h):
    return np.linalg.inv(sla.sqrtm(h))


def oracle_parseval(t):
    return t @ oracle_inv_sqrt(t.conj().T @ t)


def oracle_block_gram(t, n_i):
    """<tau_j, tau_j> blocks (n_i x n_i) of a flattened frame block."""
    rows = t.reshape(t.shape[0] // n_i, n_i, -1)
    return [r @ r.conj().T for r in rows]


def oracle_equal_inner(t, n_i, d, n):
    rows = t.reshape(n, n_i, -1)
    return np.concatenate([np.sqrt(d / n) * oracle_inv_sqrt(r @ r.conj().T) @ r for r in rows])


def _sphere_points(angles):
    """Hyperspherical angles (..., k-1) to unit vectors (..., k)."""
    k = angles.shape[-1] + 1
    out = np.ones(angles.shape[:-1] + (k,))
    for j in range(k - 1):
        out[..., j] *= np.cos(angles[..., j])
        out[..., j + 1 :] *= np.sin(angles[..., j])[..., None]
    return out


def grid_min_rayleigh(G, levels=8, points=41):
    """Minimum of x^T G x over the real unit sphere by repeated zooming grids."""
    k = G.shape[0]
    if k == 1:
        return float(G[0, 0].real)
    lo = np.zeros(k - 1)
    hi = np.full(k - 1, math.pi)
    hi[-1] = 2 * math.pi
    best = None
    for _ in range(levels):
        axes = [np.linspace(a, b, points) for a, b in zip(lo, hi)]
        ang = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        x = _sphere_points(ang)
        vals = np.einsum("...i,ij,...j->...", x, G.real, x)
        idx = np.unravel_index(np.argmin(vals), vals.shape)
        best = float(vals[idx])
        centre = ang[idx]
        width = (hi - lo) / (points - 1) * 2
        lo, hi = centre - width, centre + width
    return best


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[num])
