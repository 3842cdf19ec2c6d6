"""Desk-scale numeric probes for the restricted invertibility and
Johnson-Lindenstrauss conjectures over commutative and general A.

Nothing here asserts a conjecture; results are evidence for review.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..cstar import DEFAULT_TOL, AlgebraSignature, CStarElement, cstar_norm, order_leq
from ..errors import HypothesisViolated, NonCommutative, ShapeMismatch
from ..jacobi import jacobi_eigh
from ..module import ModuleMatrix, ModuleVector, inner, mat_apply
from .rng import complex_gaussian, stream

EXHAUSTIVE_LIMIT = 14
TIE_TOL = 1e-12


@dataclass
class BtSearchResult:
    sigma: tuple
    A: float
    mode: str


@dataclass
class JlTrial:
    success: bool
    max_distortion: float
    violations: int


def columns(M: ModuleMatrix) -> list:
    """The images M e_j, read as the columns of M."""
    return [ModuleVector(M.signature, tuple(b[:, j] for b in M.blocks)) for j in range(M.cols)]


def _column_gram_blocks(M: ModuleMatrix):
    # G[j, k] = sum_p M_pj M_pk^*  (commutative A: one scalar per block)
    return [np.einsum("pj,pk->jk", b[:, :, 0, 0], b[:, :, 0, 0].conj()) for b in M.blocks]


def _check_hypothesis(M: ModuleMatrix, tol: float):
    if not M.signature.commutative:
        raise NonCommutative("the restricted invertibility probe needs a commutative algebra")
    if M.rows != M.cols:
        raise ShapeMismatch(f"expected a square matrix, got {M.shape}")
    for j, v in enumerate(columns(M)):
        if cstar_norm(inner(v, v) - 1.0) > tol:
            raise HypothesisViolated(f"<Me_{j}, Me_{j}> is not 1_A")


def bt_certificate(M: ModuleMatrix, sigma, tol: float = 1e-8) -> float:
    """Largest A with sum_{j,k in sigma} a_j <Me_j, Me_k> a_k^* >= A sum a_j a_j^*."""
    _check_hypothesis(M, tol)
    sigma = sorted(set(sigma))
    if not sigma:
        raise ValueError("sigma must be nonempty")
    idx = np.array(sigma)
    return min(float(jacobi_eigh(g[np.ix_(idx, idx)])[0][0]) for g in _column_gram_blocks(M))


def _score(grams, idx):
    return min(float(np.linalg.eigvalsh(g[np.ix_(idx, idx)])[0]) for g in grams)


def _pick(candidates):
    best = max(v for _, v in candidates)
    return min(s for s, v in candidates if v >= best - TIE_TOL)


def bt_search(M: ModuleMatrix, min_card: int, tol: float = 1e-8) -> BtSearchResult:
    """Subset of cardinality >= min_card maximizing the certificate.

    Exhaustive for d <= 14, greedy removal beyond.  Subsets are ranked with
    LAPACK eigenvalues for speed; the winner is re-certified with Jacobi.
    """
    _check_hypothesis(M, tol)
    d = M.cols
    if not 1 <= min_card <= d:
        raise ValueError(f"min_card must lie in [1, {d}], got {min_card}")
    grams = _column_gram_blocks(M)
    if d <= EXHAUSTIVE_LIMIT:
        mode = "exhaustive"
        cands = [
            (s, _score(grams, np.array(s)))
            for r in range(min_card, d + 1)
            for s in itertools.combinations(range(d), r)
        ]
        sigma = _pick(cands)
    else:
        mode = "greedy"
        current = tuple(range(d))
        cands = [(current, _score(grams, np.array(current)))]
        while len(current) > min_card:
            steps = []
            for j in current:
                rest = tuple(x for x in current if x != j)
                steps.append((rest, _score(grams, np.array(rest))))
            current = _pick(steps)
            cands.append((current, dict(steps)[current]))
        sigma = _pick(cands)
    return BtSearchResult(sigma=tuple(sigma), A=bt_certificate(M, sigma, tol), mode=mode)


def random_points(signature, N: int, count: int, seed) -> list:
    sig = AlgebraSignature.of(signature)
    pts = []
    for p in range(count):
        blocks = [complex_gaussian(stream(seed, 1, p, i), (N, s, s)) for i, s in enumerate(sig.block_sizes)]
        pts.append(ModuleVector(sig, tuple(blocks)))
    return pts


def random_jl_matrix(signature, N: int, m: int, seed) -> ModuleMatrix:
    """N x m matrix over A acting on rows; block i has variance 1/(m n_i)."""
    sig = AlgebraSignature.of(signature)
    flats = [complex_gaussian(stream(seed, 2, i), (N * s, m * s), 1.0 / (m * s)) for i, s in enumerate(sig.block_sizes)]
    return ModuleMatrix.from_flattened(sig, flats)


def distortion(a: CStarElement, b: CStarElement) -> float:
    """Spectral distortion max |eig(a^(-1/2) b a^(-1/2)) - 1| over blocks."""
    worst = 0.0
    for x, y in zip(a.blocks, b.blocks):
        r = matrix_root_inverse(x)
        w = jacobi_eigh(r @ y @ r)[0]
        worst = max(worst, float(np.abs(w - 1.0).max()))
    return worst


def matrix_root_inverse(x):
    w, v = jacobi_eigh(x)
    return (v / np.sqrt(np.clip(w, 1e-300, None))) @ v.conj().T


def jl_trial(signature, N: int, num_points: int, eps: float, m: int, seed, tol: float = DEFAULT_TOL) -> JlTrial:
    """One draw of points and a Gaussian map; success iff every pair keeps its
    inner product within the (1 - eps, 1 + eps) order sandwich."""
    if not 1 <= m <= N:
        raise ValueError(f"need 1 <= m <= N, got m={m}, N={N}")
    if num_points < 2:
        raise ValueError("need at least two points")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    pts = random_points(signature, N, num_points, seed)
    G = random_jl_matrix(signature, N, m, seed)
    return jl_evaluate(pts, G, eps, tol)


def jl_evaluate(pts, G: ModuleMatrix, eps: float, tol: float = DEFAULT_TOL) -> JlTrial:
    violations = 0
    worst = 0.0
    for j, k in itertools.combinations(range(len(pts)), 2):
        diff = pts[j] - pts[k]
        a = inner(diff, diff)
        if cstar_norm(a) <= tol:
            continue
        img = mat_apply(diff, G)
        b = inner(img, img)
        ok = order_leq((1.0 - eps) * a, b, tol) and order_leq(b, (1.0 + eps) * a, tol)
        violations += not ok
        worst = max(worst, distortion(a, b))
    return JlTrial(success=violations == 0, max_distortion=worst, violations=violations)
