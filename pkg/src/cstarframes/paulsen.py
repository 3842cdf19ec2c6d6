"""Paulsen-problem tooling for modular frames.

The solver here is a heuristic: whether a Paulsen function exists over A is
an open question, so results report achieved distances and never a bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cstar import DEFAULT_TOL, AlgebraSignature, CStarElement, cstar_norm, spectrum
from .errors import (
    NotFrame,
    NotParseval,
    NotProjection,
    NotUnitNorm,
    ShapeMismatch,
    SignatureMismatch,
    SolverFailed,
    StepSizeOutOfRange,
)
from .frames import (
    FRAME_TOL,
    FrameSystem,
    analysis_image,
    certify_frame,
    closest_parseval,
    equal_inner_normalize,
    modular_distance,
)
from .jacobi import jacobi_eigh, phase_normalize
from .module import ModuleMatrix, diagonal, is_projection, mhs_norm, projection_rank

INNER_SOLVERS = ("alternate", "opscale")


@dataclass
class PaulsenResult:
    output: FrameSystem
    achieved_dist_sq: float
    iterations: int
    final_parseval_eps: float
    final_equal_inner_eps: float
    converged: bool


@dataclass
class ImpCheck:
    dist_sq: float
    image_dist_sq: float
    ratio: float
    hypothesis_ok: bool
    bound_ok: bool


@dataclass
class ProjectionReport:
    Q: ModuleMatrix
    rank: int
    epsilon_in: float
    projection_dist_sq: float
    solver_dist_sq: float
    bound_ok: bool
    converged: bool
    hypothesis_ok: bool
    idempotence_error: float
    selfadjoint_error: float
    max_diagonal_error: float
    solver: PaulsenResult


@dataclass
class FlowTrace:
    step: float
    residuals: list = field(default_factory=list)
    unit_norm_deviation: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.residuals) - 1


# equal inner product Parseval frames


def harmonic_frame(signature, n: int, d: int) -> FrameSystem:
    """n x d truncated DFT frame (scaled by 1/sqrt(n)), tensored with 1_A."""
    if d < 1 or n < d:
        raise ValueError(f"harmonic frame needs 1 <= d <= n, got n={n}, d={d}")
    sig = AlgebraSignature.of(signature)
    j = np.arange(n)[:, None]
    k = np.arange(d)[None, :]
    h = np.exp(2j * np.pi * j * k / n) / math.sqrt(n)
    return FrameSystem.from_flattened(sig, [np.kron(h, np.eye(s)) for s in sig.block_sizes])


def lower_bound_witness(eps: float, n: int, d: int, signature=(1,)) -> FrameSystem:
    """sqrt(1+eps) times an equal inner product Parseval frame.

    Both certified epsilons equal ``eps`` and the squared distance to the
    unscaled frame is d (sqrt(1+eps) - 1)^2.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if d < 1 or n < d:
        raise ValueError(f"witness needs 1 <= d <= n, got n={n}, d={d}")
    return harmonic_frame(signature, n, d).scaled(math.sqrt(1.0 + eps))


def witness_distance_sq(eps: float, d: int) -> float:
    return d * (math.sqrt(1.0 + eps) - 1.0) ** 2


# image distance checker


def imp_check(F: FrameSystem, G: FrameSystem, tol: float = FRAME_TOL) -> ImpCheck:
    """Compare the distance of two Parseval frames with that of their analysis images."""
    if F.T.shape != G.T.shape:
        raise ShapeMismatch(f"frames have shapes {F.T.shape} and {G.T.shape}")
    for name, X in (("first", F), ("second", G)):
        eps = certify_frame(X, tol).parseval_eps
        if eps > tol:
            raise NotParseval(f"{name} frame is not Parseval (eps = {eps:.3g})")
    dist_sq = modular_distance(F, G) ** 2
    image_sq = modular_distance(analysis_image(F), analysis_image(G)) ** 2
    return ImpCheck(
        dist_sq=dist_sq,
        image_dist_sq=image_sq,
        ratio=image_sq / dist_sq if dist_sq > 0 else 0.0,
        hypothesis_ok=F.signature.commutative,
        bound_ok=image_sq <= 4.0 * dist_sq + tol,
    )


# classical gradient flow


def _tight_residual(t, n, d):
    s = t.conj().T @ t
    return float(np.linalg.norm(s - (n / d) * np.eye(d)))


def cfm_flow(F: FrameSystem, t: float, max_iter: int = 500, tol: float = FRAME_TOL):
    """Discrete frame-potential flow on the unit sphere of C^d."""
    if F.signature.block_sizes != (1,):
        raise SignatureMismatch(f"the flow runs over C^d only, got signature {F.signature}")
    n, d = F.n, F.d
    if not 0.0 < t < 1.0 / (2 * n):
        raise StepSizeOutOfRange(f"step {t} outside (0, 1/(2n)) = (0, {1.0 / (2 * n):.4g})")
    tau = np.array(F.flatten(0))
    norms = np.linalg.norm(tau, axis=1)
    if np.abs(norms - 1.0).max() > tol:
        raise NotUnitNorm(f"vector norms deviate from 1 by {np.abs(norms - 1.0).max():.3g}")

    trace = FlowTrace(step=t)
    trace.residuals.append(_tight_residual(tau, n, d))
    trace.unit_norm_deviation.append(float(np.abs(norms - 1.0).max()))
    for _ in range(max_iter):
        if trace.residuals[-1] <= tol:
            break
        s = tau.conj().T @ tau
        st = tau @ s
        # dividing by |tau_j|^2 keeps omega exactly orthogonal to tau_j, so
        # rounding in the norms cannot feed back through omega / |omega|
        rayleigh = np.einsum("jk,jk->j", st, tau.conj()).real / np.einsum("jk,jk->j", tau, tau.conj()).real
        omega = st - rayleigh[:, None] * tau
        size = np.linalg.norm(omega, axis=1)
        moving = size > 0
        step = np.where(moving, size, 1.0)
        tau = np.where(
            moving[:, None],
            np.cos(size * t)[:, None] * tau - np.sin(size * t)[:, None] * omega / step[:, None],
            tau,
        )
        trace.residuals.append(_tight_residual(tau, n, d))
        trace.unit_norm_deviation.append(float(np.abs(np.linalg.norm(tau, axis=1) - 1.0).max()))
    return FrameSystem.from_flattened(F.signature, [tau]), trace


# heuristic Paulsen solver over A


def _opscale_step(F: FrameSystem, tol: float, max_iter: int):
    from .opscale import frame_to_tuple, operator_scale, tuple_to_frame

    res = operator_scale(frame_to_tuple(F), tol=tol, max_iter=max_iter)
    return tuple_to_frame(res.scaled).scaled(math.sqrt(F.d / F.n))


def modular_paulsen_solve(
    F: FrameSystem,
    tol: float = FRAME_TOL,
    max_iter: int = 500,
    inner_solver: str = "alternate",
) -> PaulsenResult:
    """Alternate Parseval-ization and inner-product normalization.

    Every half-step is certified; the returned frame is the iterate with the
    smallest max(parseval_eps, equal_inner_eps), earliest on ties.
    """
    if inner_solver not in INNER_SOLVERS:
        raise ValueError(f"inner_solver must be one of {INNER_SOLVERS}")
    if not certify_frame(F, tol).is_frame:
        raise NotFrame("input is not a frame")

    def score(X):
        c = certify_frame(X, tol)
        return max(c.parseval_eps, c.equal_inner_eps), c

    key, cert = score(F)
    best = (key, F, cert, 0)
    cur = F
    iterations = 0
    if key > tol:
        if inner_solver == "opscale":
            cur = _opscale_step(F, tol, max_iter)
            iterations = 1
            key, cert = score(cur)
            if key < best[0]:
                best = (key, cur, cert, iterations)
        else:
            for it in range(1, max_iter + 1):
                iterations = it
                for half in (closest_parseval, equal_inner_normalize):
                    cur = half(cur, tol)
                    key, cert = score(cur)
                    if key < best[0]:
                        best = (key, cur, cert, it)
                if best[0] <= tol:
                    break
    key, out, cert, it = best
    return PaulsenResult(
        output=out,
        achieved_dist_sq=modular_distance(F, out) ** 2,
        iterations=it,
        final_parseval_eps=cert.parseval_eps,
        final_equal_inner_eps=cert.equal_inner_eps,
        converged=key <= tol,
    )


# projection problem via the Paulsen solver


def _range_isometry(P: ModuleMatrix, rank: int):
    """Per block, columns spanning the range of the flattened projection."""
    charts = []
    for i, n_i in enumerate(P.signature.block_sizes):
        w, v = jacobi_eigh(P.flatten(i))
        cols = v[:, w > 0.5]
        if cols.shape[1] != rank * n_i:
            raise NotProjection(f"block {i}: range has dimension {cols.shape[1]}")
        charts.append(phase_normalize(cols))
    return charts


def diagonal_eps(P: ModuleMatrix, target: float, tol: float = DEFAULT_TOL) -> float:
    """Smallest eps with (1-eps) target <= <Pe_k, Pe_k> <= (1+eps) target for all k."""
    eps = 0.0
    for k in range(P.rows):
        row = P.row(k)
        g = CStarElement(P.signature, tuple(np.einsum("jrs,jts->rt", b, b.conj()) for b in row.blocks))
        s = spectrum(g, tol)
        eps = max(eps, 1.0 - s.min / target, s.max / target - 1.0)
    return eps


def projection_construct(
    P: ModuleMatrix,
    tol: float = FRAME_TOL,
    max_iter: int = 500,
    inner_solver: str = "alternate",
    strict: bool = False,
) -> ProjectionReport:
    """Replace a rank-n projection by one with constant diagonal n/d.

    The Parseval frame {P e_k} of the range is moved to an equal inner
    product Parseval frame {omega_k} inside the range (in coordinates given
    by an isometry onto the range), and Q = W W^* for the matrix W with rows
    omega_k.
    """
    if P.rows != P.cols or not is_projection(P, max(tol, 1e-8)):
        raise NotProjection("input is not an orthogonal projection")
    d = P.rows
    n = projection_rank(P, max(tol, 1e-8))
    eps_in = diagonal_eps(P, n / d)

    charts = _range_isometry(P, n)
    # coordinates of P e_k in the chart: rows of P U = U
    coords = FrameSystem.from_flattened(P.signature, charts)
    result = modular_paulsen_solve(coords, tol=tol, max_iter=max_iter, inner_solver=inner_solver)
    if strict and not result.converged:
        raise SolverFailed("inner Paulsen solve did not converge")
    # a final Parseval step makes Q idempotent to rounding; the diagonal
    # moves by at most the solver's parseval_eps
    polished = closest_parseval(result.output, tol)
    solver_sq = modular_distance(coords, polished) ** 2
    W = polished.T
    Q = W @ W.H

    proj_sq = mhs_norm(P - Q) ** 2
    target = n / d
    diag_err = max(cstar_norm(q - target) for q in diagonal(Q))
    return ProjectionReport(
        Q=Q,
        rank=n,
        epsilon_in=eps_in,
        projection_dist_sq=proj_sq,
        solver_dist_sq=solver_sq,
        bound_ok=proj_sq <= 4.0 * solver_sq + tol,
        converged=result.converged,
        hypothesis_ok=P.signature.commutative,
        idempotence_error=mhs_norm(Q @ Q - Q),
        selfadjoint_error=mhs_norm(Q - Q.H),
        max_diagonal_error=diag_err,
        solver=result,
    )
