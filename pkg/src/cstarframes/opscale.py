"""Matrix tuples over A: doubly stochastic certification, alternating operator
scaling, and radial isotropic position.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cstar import (
    DEFAULT_TOL,
    AlgebraSignature,
    CStarElement,
    check_same,
    cstar_norm,
    is_positive,
    spectral_map,
)
from .errors import (
    Degenerate,
    NonCommutative,
    ShapeMismatch,
    Singular,
    SingularGram,
    SingularMarginal,
)
from .frames import FrameSystem
from .module import (
    ModuleMatrix,
    ModuleVector,
    flat_spectral_norm,
    identity_matrix,
    inner,
    mat_apply,
    matrix_eigvals,
    matrix_spectral_map,
    mhs_inner,
    mhs_norm,
)

SCALING_TOL = 1e-8


@dataclass(frozen=True)
class MatrixTuple:
    matrices: tuple

    def __post_init__(self):
        mats = tuple(self.matrices)
        if not mats:
            raise ShapeMismatch("a matrix tuple needs at least one matrix")
        for j, m in enumerate(mats):
            check_same(mats[0].signature, m.signature)
            if m.shape != mats[0].shape:
                raise ShapeMismatch(f"matrix {j} has shape {m.shape}, expected {mats[0].shape}")
        object.__setattr__(self, "matrices", mats)

    @property
    def signature(self) -> AlgebraSignature:
        return self.matrices[0].signature

    @property
    def m(self) -> int:
        return self.matrices[0].rows

    @property
    def n(self) -> int:
        return self.matrices[0].cols

    @property
    def k(self) -> int:
        return len(self.matrices)

    def __len__(self):
        return self.k

    def __getitem__(self, j) -> ModuleMatrix:
        return self.matrices[j]

    def map(self, fn) -> "MatrixTuple":
        return MatrixTuple(tuple(fn(v) for v in self.matrices))


@dataclass
class BalanceReport:
    is_balanced: bool
    c: CStarElement | None
    is_doubly_stochastic: bool
    nearly_eps: float


@dataclass
class ScalingResult:
    L: ModuleMatrix
    R: ModuleMatrix
    scaled: MatrixTuple
    residual_trace: list
    converged: bool
    left_deviations: list = field(default_factory=list)
    right_deviations: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.residual_trace) - 1


@dataclass
class PaulsenProbe:
    scaled: MatrixTuple
    dist_sq: float
    input_eps: float
    converged: bool


@dataclass
class ForsterResult:
    A: ModuleMatrix
    transformed: list
    converged: bool
    residual_trace: list


def left_marginal(T: MatrixTuple) -> ModuleMatrix:
    out = T[0] @ T[0].H
    for v in T.matrices[1:]:
        out = out + v @ v.H
    return out


def right_marginal(T: MatrixTuple) -> ModuleMatrix:
    out = T[0].H @ T[0]
    for v in T.matrices[1:]:
        out = out + v.H @ v
    return out


def _sandwich_eps(marginal: ModuleMatrix, target: float) -> float:
    eps = 0.0
    for w in matrix_eigvals(marginal):
        eps = max(eps, 1.0 - w[0] / target, w[-1] / target - 1.0)
    return eps


def nearly_eps(T: MatrixTuple) -> float:
    """Smallest eps placing both marginals in their (1 +- eps) order sandwiches."""
    return max(_sandwich_eps(left_marginal(T), 1.0), _sandwich_eps(right_marginal(T), T.m / T.n))


def _scalar_diagonal(D: ModuleMatrix, tol: float):
    """Common diagonal entry of D if D = c I within tol, else None."""
    c = D.entry(0, 0)
    for a in range(D.rows):
        for b in range(D.cols):
            e = D.entry(a, b)
            if a == b:
                if cstar_norm(e - c) > tol:
                    return None
            elif cstar_norm(e) > tol:
                return None
    return c


def tuple_certify(T: MatrixTuple, tol: float = SCALING_TOL) -> BalanceReport:
    DL = left_marginal(T)
    DR = right_marginal(T)
    eps = nearly_eps(T)
    balanced = False
    c = None
    cl = _scalar_diagonal(DL, tol)
    cr = _scalar_diagonal(DR, tol)
    if cl is not None and cr is not None:
        cand = cl / T.n
        if cstar_norm(cr - T.m * cand) <= tol and is_positive(cand, tol) and cstar_norm(cand) > tol:
            balanced = True
            c = cand
    stochastic = balanced and cstar_norm(c - 1.0 / T.n) <= tol
    return BalanceReport(is_balanced=balanced, c=c, is_doubly_stochastic=stochastic, nearly_eps=eps)


def tuple_distance(U: MatrixTuple, V: MatrixTuple) -> float:
    """|| sum_j <U_j - V_j, U_j - V_j>_MHS ||^(1/2)."""
    if U.k != V.k:
        raise ShapeMismatch(f"tuples have lengths {U.k} and {V.k}")
    total = None
    for a, b in zip(U.matrices, V.matrices):
        diff = a - b
        term = mhs_inner(diff, diff)
        total = term if total is None else total + term
    return float(np.sqrt(cstar_norm(total)))


def _deviation(marginal: ModuleMatrix, target: float) -> float:
    return flat_spectral_norm(marginal - target * identity_matrix(marginal.signature, marginal.rows))


def operator_scale(U: MatrixTuple, tol: float = SCALING_TOL, max_iter: int = 500) -> ScalingResult:
    """Alternating left/right marginal normalization (Gurvits-style).

    ``residual_trace`` holds nearly_eps of the input and after every
    half-step; ``max_iter`` bounds the number of left-right rounds.
    """
    sig = U.signature
    m, n = U.m, U.n
    try:
        matrix_spectral_map(left_marginal(U), "inv_sqrt", tol)
        matrix_spectral_map(right_marginal(U), "inv_sqrt", tol)
    except Singular as exc:
        raise SingularMarginal(f"tuple marginal is singular: {exc}") from exc

    L = identity_matrix(sig, m)
    R = identity_matrix(sig, n)
    V = U
    trace = [nearly_eps(V)]
    left_dev, right_dev = [], []
    ratio = math.sqrt(m / n)
    rounds = 0
    while trace[-1] > tol and rounds < max_iter:
        rounds += 1
        X = matrix_spectral_map(left_marginal(V), "inv_sqrt", DEFAULT_TOL)
        V = V.map(lambda v: X @ v)
        L = X @ L
        left_dev.append(_deviation(left_marginal(V), 1.0))
        trace.append(nearly_eps(V))
        if trace[-1] <= tol:
            break
        Y = ratio * matrix_spectral_map(right_marginal(V), "inv_sqrt", DEFAULT_TOL)
        V = V.map(lambda v: v @ Y)
        R = R @ Y
        right_dev.append(_deviation(right_marginal(V), m / n))
        trace.append(nearly_eps(V))
    return ScalingResult(
        L=L,
        R=R,
        scaled=V,
        residual_trace=trace,
        converged=trace[-1] <= tol,
        left_deviations=left_dev,
        right_deviations=right_dev,
    )


def matrix_paulsen_probe(U: MatrixTuple, tol: float = SCALING_TOL, max_iter: int = 500) -> PaulsenProbe:
    res = operator_scale(U, tol, max_iter)
    return PaulsenProbe(
        scaled=res.scaled,
        dist_sq=tuple_distance(U, res.scaled) ** 2,
        input_eps=res.residual_trace[0],
        converged=res.converged,
    )


# frames as tuples: V_j carries tau_j in row j and zeros elsewhere


def frame_to_tuple(F: FrameSystem) -> MatrixTuple:
    mats = []
    for j in range(F.n):
        blocks = []
        for b in F.T.blocks:
            z = np.zeros_like(b)
            z[j] = b[j]
            blocks.append(z)
        mats.append(ModuleMatrix(F.signature, tuple(blocks)))
    return MatrixTuple(tuple(mats))


def tuple_to_frame(T: MatrixTuple) -> FrameSystem:
    """Inverse of frame_to_tuple: row j of the j-th matrix."""
    blocks = []
    for i in range(T.signature.num_blocks):
        blocks.append(np.stack([T[j].blocks[i][j] for j in range(T.k)]))
    return FrameSystem(ModuleMatrix(T.signature, tuple(blocks)))


# radial isotropic position


@dataclass(frozen=True)
class CoefficientVector:
    entries: tuple

    def __post_init__(self):
        ents = tuple(self.entries)
        if not ents:
            raise ShapeMismatch("coefficient vector is empty")
        for j, c in enumerate(ents):
            check_same(ents[0].signature, c.signature)
            if not is_positive(c):
                raise ValueError(f"coefficient {j} is not positive")
        object.__setattr__(self, "entries", ents)

    @classmethod
    def constant(cls, signature, value: float, count: int) -> "CoefficientVector":
        return cls(tuple(CStarElement.scalar(signature, value) for _ in range(count)))

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, j) -> CStarElement:
        return self.entries[j]


def _normalized(u: Sequence[ModuleVector], tol: float) -> list:
    out = []
    for j, v in enumerate(u):
        try:
            s = spectral_map(inner(v, v), "inv_sqrt", tol)
        except Singular as exc:
            raise SingularGram(f"<u_{j}, u_{j}> is not invertible: {exc}") from exc
        out.append(s * v)
    return out


def isotropy_matrix(u: Sequence[ModuleVector], c: CoefficientVector, tol: float = DEFAULT_TOL) -> ModuleMatrix:
    """sum_j outer(c_j; u_hat_j) with outer(c; v)_{p,q} = v_p^* c v_q."""
    if len(u) != len(c):
        raise ShapeMismatch(f"{len(u)} vectors but {len(c)} coefficients")
    hats = _normalized(u, tol)
    sig = hats[0].signature
    blocks = []
    for i in range(sig.num_blocks):
        acc = 0
        for v, cj in zip(hats, c.entries):
            x = v.blocks[i]
            acc = acc + np.einsum("psr,st,qtu->pqru", x.conj(), cj.blocks[i], x)
        blocks.append(acc)
    return ModuleMatrix(sig, tuple(blocks))


def radial_isotropic_check(u: Sequence[ModuleVector], c: CoefficientVector, tol: float = SCALING_TOL) -> bool:
    M = isotropy_matrix(u, c, DEFAULT_TOL)
    return mhs_norm(M - identity_matrix(M.signature, M.rows)) <= tol


def forster_transform(
    u: Sequence[ModuleVector],
    c: CoefficientVector,
    tol: float = SCALING_TOL,
    max_iter: int = 500,
    stall_window: int = 50,
) -> ForsterResult:
    """Iterate u_j <- u_j M^(-1/2) with M the current isotropy matrix.

    Raises Degenerate when the residual has not improved by 1% over
    ``stall_window`` iterations.
    """
    u = list(u)
    sig = u[0].signature
    if not sig.commutative:
        raise NonCommutative("forster_transform is defined for commutative algebras only")
    d = u[0].dim
    total = sum(np.array([cj.blocks[i][0, 0].real for i in range(sig.num_blocks)]) for cj in c.entries)
    if np.abs(total - d).max() > max(tol, 1e-9) * d:
        raise ValueError(f"coefficients must sum to d = {d} in every block, got {total}")

    A = identity_matrix(sig, d)
    eye = identity_matrix(sig, d)
    M = isotropy_matrix(u, c)
    trace = [mhs_norm(M - eye)]
    for it in range(max_iter):
        if trace[-1] <= tol:
            break
        if it >= stall_window and trace[-1] > 0.99 * min(trace[: -stall_window]):
            raise Degenerate(f"residual stalled at {trace[-1]:.3g} after {it} iterations")
        try:
            X = matrix_spectral_map(M, "inv_sqrt", DEFAULT_TOL)
        except Singular as exc:
            raise Degenerate(f"isotropy matrix became singular: {exc}") from exc
        A = A @ X
        u = [mat_apply(v, X) for v in u]
        M = isotropy_matrix(u, c)
        trace.append(mhs_norm(M - eye))
    return ForsterResult(A=A, transformed=u, converged=trace[-1] <= tol, residual_trace=trace)

