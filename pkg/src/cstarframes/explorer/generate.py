"""Seeded random inputs for experiments.

``seed`` arguments accept an int or a tuple of ints; the algebra block index
is appended to the key so each block draws from its own stream.
"""
from __future__ import annotations

import math

import numpy as np

from ..cstar import AlgebraSignature
from ..frames import FrameSystem, certify_frame, closest_parseval
from ..module import ModuleMatrix, vec_norm
from ..opscale import MatrixTuple
from ..paulsen import harmonic_frame
from .rng import complex_gaussian, stream


def _as_key(seed):
    return tuple(seed) if isinstance(seed, (tuple, list)) else (seed,)


def gaussian_frame(signature, d: int, n: int, seed) -> FrameSystem:
    sig = AlgebraSignature.of(signature)
    key = _as_key(seed)
    flats = [complex_gaussian(stream(key, i), (n * s, d * s)) for i, s in enumerate(sig.block_sizes)]
    return FrameSystem.from_flattened(sig, flats)


def random_parseval_frame(signature, d: int, n: int, seed) -> FrameSystem:
    if d < 1 or n < d:
        raise ValueError(f"a frame for A^{d} needs n >= d vectors, got n={n}")
    return closest_parseval(gaussian_frame(signature, d, n, seed))


def random_unitary(rng: np.random.Generator, size: int):
    q, r = np.linalg.qr(complex_gaussian(rng, (size, size)))
    ph = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * ph


def perturb_frame(F: FrameSystem, delta: float, seed) -> FrameSystem:
    """Add to every vector a Gaussian direction of modular norm exactly ``delta``."""
    if delta < 0:
        raise ValueError("delta must be non-negative")
    if delta == 0:
        return F
    key = _as_key(seed)
    noise = gaussian_frame(F.signature, F.d, F.n, key + (1_000_003,)).T
    rows = []
    for j in range(F.n):
        r = noise.row(j)
        rows.append(r * (delta / vec_norm(r)))
    return FrameSystem(F.T + ModuleMatrix.from_rows(rows))


def random_equal_parseval_frame(signature, d: int, n: int, seed) -> FrameSystem:
    """Harmonic frame rotated by a random unitary of each flattened block."""
    sig = AlgebraSignature.of(signature)
    key = _as_key(seed)
    G = harmonic_frame(sig, n, d)
    flats = [G.flatten(i) @ random_unitary(stream(key, i, 7), d * s) for i, s in enumerate(sig.block_sizes)]
    return FrameSystem.from_flattened(sig, flats)


def near_equal_parseval_frame(signature, d: int, n: int, eps_max: float, seed):
    """An eps-nearly equal inner product Parseval frame with eps <= eps_max.

    Returns (frame, certified eps).  The perturbation size is drawn from the
    stream and halved until the certificate lands under ``eps_max``.
    """
    key = _as_key(seed)
    rng = stream(key, 99)
    base = random_equal_parseval_frame(signature, d, n, key)
    delta = rng.uniform(0.05, 1.0) * eps_max * 0.5 * math.sqrt(d / n)
    for attempt in range(60):
        F = closest_parseval(perturb_frame(base, delta, key + (attempt,)))
        c = certify_frame(F)
        eps = max(c.parseval_eps, c.equal_inner_eps)
        if eps <= eps_max:
            return F, eps
        delta *= 0.5
    raise RuntimeError("could not reach the requested eps")


def near_equal_projection(signature, d: int, rank: int, eps_max: float, seed):
    """Projection of module rank ``rank`` on A^d with diagonal within eps_max of rank/d.

    Returns (P, certified eps).
    """
    from ..paulsen import diagonal_eps

    if not 1 <= rank <= d:
        raise ValueError(f"rank must lie in [1, d], got {rank}")
    F, _ = near_equal_parseval_frame(signature, rank, d, eps_max, seed)
    W = F.T  # d vectors in A^rank, Parseval
    P = W @ W.H
    return P, diagonal_eps(P, rank / d)


def unit_norm_tight_start(d: int, n: int, delta: float, seed) -> FrameSystem:
    """Perturbed and renormalized unit-norm tight frame of n vectors in C^d."""
    key = _as_key(seed)
    G = random_equal_parseval_frame((1,), d, n, key).scaled(math.sqrt(n / d))
    t = np.array(G.flatten(0))
    if delta > 0:
        t = t + complex_gaussian(stream(key, 5), t.shape, delta**2 / d)
    t = t / np.linalg.norm(t, axis=1, keepdims=True)
    return FrameSystem.from_flattened((1,), [t])


def random_tuple(signature, k: int, m: int, n: int, seed) -> MatrixTuple:
    sig = AlgebraSignature.of(signature)
    key = _as_key(seed)
    mats = []
    for j in range(k):
        flats = [complex_gaussian(stream(key, j, i), (m * s, n * s)) for i, s in enumerate(sig.block_sizes)]
        mats.append(ModuleMatrix.from_flattened(sig, flats))
    return MatrixTuple(tuple(mats))


def unit_column_matrix(signature, d: int, seed, real: bool = False) -> ModuleMatrix:
    """d x d matrix over a commutative A whose columns have <v_j, v_j> = 1_A."""
    sig = AlgebraSignature.of(signature)
    key = _as_key(seed)
    flats = []
    for i, s in enumerate(sig.block_sizes):
        rng = stream(key, i)
        x = rng.standard_normal((d * s, d * s)) if real else complex_gaussian(rng, (d * s, d * s))
        flats.append(x / np.linalg.norm(x, axis=0, keepdims=True))
    return ModuleMatrix.from_flattened(sig, flats)
