"""The Hilbert C*-module A^d and matrices over A.

Vectors are rows.  The A-valued inner product is <x, y> = sum_j x_j y_j^*,
scalars from A act on the left, and module maps act on the right:
``mat_apply(x, M) = x M``.  A matrix over A is stored per algebra block as an
array of shape (p, q, n_i, n_i); ``flatten_block`` turns block i into an
ordinary (p n_i) x (q n_i) complex matrix, which is a *-isomorphism and is
used for every spectral question.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from numbers import Number
from typing import Sequence

import numpy as np

from .cstar import (
    DEFAULT_TOL,
    AlgebraSignature,
    CStarElement,
    check_same,
    cstar_norm,
    hermitian_eigvals,
    hermitian_map,
    is_positive,
)
from .errors import NotProjection, RankMismatch, ShapeMismatch
from .jacobi import jacobi_eigh

log = logging.getLogger(__name__)

PROJECTION_TOL = 1e-8


def _frozen(arr):
    arr = np.array(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ModuleVector:
    signature: AlgebraSignature
    blocks: tuple  # block i has shape (d, n_i, n_i)

    def __post_init__(self):
        sig = AlgebraSignature.of(self.signature)
        if len(self.blocks) != sig.num_blocks:
            raise ShapeMismatch(f"expected {sig.num_blocks} blocks, got {len(self.blocks)}")
        blocks = tuple(_frozen(b) for b in self.blocks)
        d = blocks[0].shape[0] if blocks[0].ndim == 3 else -1
        for i, (b, n) in enumerate(zip(blocks, sig.block_sizes)):
            if b.shape != (d, n, n):
                raise ShapeMismatch(f"block {i} must have shape ({d}, {n}, {n}), got {b.shape}")
        object.__setattr__(self, "signature", sig)
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def from_entries(cls, entries: Sequence[CStarElement]) -> "ModuleVector":
        if not entries:
            raise ShapeMismatch("a module vector needs at least one entry")
        sig = entries[0].signature
        for e in entries:
            check_same(sig, e.signature)
        blocks = tuple(np.stack([e.blocks[i] for e in entries]) for i in range(sig.num_blocks))
        return cls(sig, blocks)

    @classmethod
    def zeros(cls, signature, d: int) -> "ModuleVector":
        sig = AlgebraSignature.of(signature)
        return cls(sig, tuple(np.zeros((d, n, n)) for n in sig.block_sizes))

    @property
    def dim(self) -> int:
        return self.blocks[0].shape[0]

    @property
    def entries(self) -> list:
        return [
            CStarElement(self.signature, tuple(b[j] for b in self.blocks)) for j in range(self.dim)
        ]

    def __len__(self):
        return self.dim

    def _check(self, other):
        check_same(self.signature, other.signature)
        if other.dim != self.dim:
            raise ShapeMismatch(f"dimensions differ: {self.dim} vs {other.dim}")

    def __add__(self, other):
        if not isinstance(other, ModuleVector):
            return NotImplemented
        self._check(other)
        return ModuleVector(self.signature, tuple(a + b for a, b in zip(self.blocks, other.blocks)))

    def __sub__(self, other):
        if not isinstance(other, ModuleVector):
            return NotImplemented
        self._check(other)
        return ModuleVector(self.signature, tuple(a - b for a, b in zip(self.blocks, other.blocks)))

    def __neg__(self):
        return ModuleVector(self.signature, tuple(-b for b in self.blocks))

    def __mul__(self, other):
        if isinstance(other, Number):
            return ModuleVector(self.signature, tuple(other * b for b in self.blocks))
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, Number):
            return self * other
        if isinstance(other, CStarElement):
            check_same(self.signature, other.signature)
            return ModuleVector(
                self.signature,
                tuple(np.einsum("rs,jst->jrt", a, b) for a, b in zip(other.blocks, self.blocks)),
            )
        return NotImplemented

    def flatten(self, i: int):
        """Block i as an n_i x (d n_i) complex matrix."""
        b = self.blocks[i]
        d, n, _ = b.shape
        return b.transpose(1, 0, 2).reshape(n, d * n)

    def allclose(self, other, atol=1e-12) -> bool:
        self._check(other)
        return all(np.allclose(a, b, rtol=0, atol=atol) for a, b in zip(self.blocks, other.blocks))


@dataclass(frozen=True, eq=False)
class ModuleMatrix:
    signature: AlgebraSignature
    blocks: tuple  # block i has shape (p, q, n_i, n_i)

    def __post_init__(self):
        sig = AlgebraSignature.of(self.signature)
        if len(self.blocks) != sig.num_blocks:
            raise ShapeMismatch(f"expected {sig.num_blocks} blocks, got {len(self.blocks)}")
        blocks = tuple(_frozen(b) for b in self.blocks)
        if blocks[0].ndim != 4:
            raise ShapeMismatch(f"matrix blocks must be 4-dimensional, got {blocks[0].shape}")
        p, q = blocks[0].shape[:2]
        for i, (b, n) in enumerate(zip(blocks, sig.block_sizes)):
            if b.shape != (p, q, n, n):
                raise ShapeMismatch(f"block {i} must have shape ({p}, {q}, {n}, {n}), got {b.shape}")
        object.__setattr__(self, "signature", sig)
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def from_entries(cls, grid: Sequence[Sequence[CStarElement]]) -> "ModuleMatrix":
        if not grid or not grid[0]:
            raise ShapeMismatch("matrix needs at least one entry")
        sig = grid[0][0].signature
        q = len(grid[0])
        for r, row in enumerate(grid):
            if len(row) != q:
                raise ShapeMismatch(f"row {r} has {len(row)} entries, expected {q}")
            for e in row:
                check_same(sig, e.signature)
        blocks = tuple(
            np.array([[e.blocks[i] for e in row] for row in grid]) for i in range(sig.num_blocks)
        )
        return cls(sig, blocks)

    @classmethod
    def from_rows(cls, rows: Sequence[ModuleVector]) -> "ModuleMatrix":
        if not rows:
            raise ShapeMismatch("matrix needs at least one row")
        sig = rows[0].signature
        for r in rows:
            rows[0]._check(r)
        return cls(sig, tuple(np.stack([r.blocks[i] for r in rows]) for i in range(sig.num_blocks)))

    @classmethod
    def from_flattened(cls, signature, flats: Sequence[np.ndarray]) -> "ModuleMatrix":
        sig = AlgebraSignature.of(signature)
        blocks = []
        for f, n in zip(flats, sig.block_sizes):
            f = np.asarray(f, dtype=complex)
            if f.shape[0] % n or f.shape[1] % n:
                raise ShapeMismatch(f"flattened shape {f.shape} not divisible by block size {n}")
            p, q = f.shape[0] // n, f.shape[1] // n
            blocks.append(f.reshape(p, n, q, n).transpose(0, 2, 1, 3))
        return cls(sig, tuple(blocks))

    @property
    def rows(self) -> int:
        return self.blocks[0].shape[0]

    @property
    def cols(self) -> int:
        return self.blocks[0].shape[1]

    @property
    def shape(self):
        return (self.rows, self.cols)

    def entry(self, a: int, b: int) -> CStarElement:
        return CStarElement(self.signature, tuple(blk[a, b] for blk in self.blocks))

    def row(self, j: int) -> ModuleVector:
        return ModuleVector(self.signature, tuple(blk[j] for blk in self.blocks))

    def row_vectors(self) -> list:
        return [self.row(j) for j in range(self.rows)]

    def flatten(self, i: int):
        b = self.blocks[i]
        p, q, n, _ = b.shape
        return b.transpose(0, 2, 1, 3).reshape(p * n, q * n)

    def _check(self, other):
        check_same(self.signature, other.signature)
        if other.shape != self.shape:
            raise ShapeMismatch(f"shapes differ: {self.shape} vs {other.shape}")

    def __add__(self, other):
        if not isinstance(other, ModuleMatrix):
            return NotImplemented
        self._check(other)
        return ModuleMatrix(self.signature, tuple(a + b for a, b in zip(self.blocks, other.blocks)))

    def __sub__(self, other):
        if not isinstance(other, ModuleMatrix):
            return NotImplemented
        self._check(other)
        return ModuleMatrix(self.signature, tuple(a - b for a, b in zip(self.blocks, other.blocks)))

    def __neg__(self):
        return ModuleMatrix(self.signature, tuple(-b for b in self.blocks))

    def __mul__(self, other):
        if isinstance(other, Number):
            return ModuleMatrix(self.signature, tuple(other * b for b in self.blocks))
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, Number):
            return self * other
        return NotImplemented

    def __matmul__(self, other):
        if isinstance(other, ModuleMatrix):
            return mat_compose(self, other)
        return NotImplemented

    @property
    def H(self) -> "ModuleMatrix":
        return mat_adjoint(self)

    def allclose(self, other, atol=1e-12) -> bool:
        self._check(other)
        return all(np.allclose(a, b, rtol=0, atol=atol) for a, b in zip(self.blocks, other.blocks))


@dataclass(frozen=True)
class FlattenedBlock:
    block_index: int
    matrix: np.ndarray


# vectors


def standard_basis(signature, d: int) -> list:
    if d < 1:
        raise ValueError(f"module dimension must be >= 1, got {d}")
    sig = AlgebraSignature.of(signature)
    basis = []
    for j in range(d):
        blocks = []
        for n in sig.block_sizes:
            b = np.zeros((d, n, n))
            b[j] = np.eye(n)
            blocks.append(b)
        basis.append(ModuleVector(sig, tuple(blocks)))
    return basis


def inner(x: ModuleVector, y: ModuleVector) -> CStarElement:
    """<x, y> = sum_j x_j y_j^*."""
    x._check(y)
    return CStarElement(
        x.signature,
        tuple(np.einsum("jrs,jts->rt", a, b.conj()) for a, b in zip(x.blocks, y.blocks)),
    )


def vec_norm(x: ModuleVector) -> float:
    return float(np.sqrt(cstar_norm(inner(x, x))))


# matrices


def identity_matrix(signature, d: int) -> ModuleMatrix:
    sig = AlgebraSignature.of(signature)
    blocks = []
    for n in sig.block_sizes:
        b = np.zeros((d, d, n, n))
        for j in range(d):
            b[j, j] = np.eye(n)
        blocks.append(b)
    return ModuleMatrix(sig, tuple(blocks))


def zero_matrix(signature, p: int, q: int) -> ModuleMatrix:
    sig = AlgebraSignature.of(signature)
    return ModuleMatrix(sig, tuple(np.zeros((p, q, n, n)) for n in sig.block_sizes))


def scalar_matrix(c: CStarElement, d: int) -> ModuleMatrix:
    """c I_d for an algebra element c."""
    blocks = []
    for blk in c.blocks:
        n = blk.shape[0]
        b = np.zeros((d, d, n, n), dtype=complex)
        for j in range(d):
            b[j, j] = blk
        blocks.append(b)
    return ModuleMatrix(c.signature, tuple(blocks))


def mat_compose(m: ModuleMatrix, n: ModuleMatrix) -> ModuleMatrix:
    check_same(m.signature, n.signature)
    if m.cols != n.rows:
        raise ShapeMismatch(f"cannot compose {m.shape} with {n.shape}")
    return ModuleMatrix(
        m.signature,
        tuple(np.einsum("abrs,bcst->acrt", a, b) for a, b in zip(m.blocks, n.blocks)),
    )


def mat_apply(x: ModuleVector, m: ModuleMatrix) -> ModuleVector:
    """Right action x M of a p x q matrix on a length-p row vector."""
    check_same(x.signature, m.signature)
    if x.dim != m.rows:
        raise ShapeMismatch(f"vector of length {x.dim} cannot act on a {m.shape} matrix")
    return ModuleVector(
        x.signature,
        tuple(np.einsum("brs,bcst->crt", a, b) for a, b in zip(x.blocks, m.blocks)),
    )


def mat_adjoint(m: ModuleMatrix) -> ModuleMatrix:
    return ModuleMatrix(m.signature, tuple(b.transpose(1, 0, 3, 2).conj() for b in m.blocks))


def left_multiply_rows(coeffs: Sequence[CStarElement], m: ModuleMatrix) -> ModuleMatrix:
    """Multiply row j of ``m`` on the left by the algebra element coeffs[j]."""
    if len(coeffs) != m.rows:
        raise ShapeMismatch(f"{len(coeffs)} coefficients for {m.rows} rows")
    blocks = []
    for i, b in enumerate(m.blocks):
        c = np.stack([coeffs[j].blocks[i] for j in range(m.rows)])
        blocks.append(np.einsum("jrs,jkst->jkrt", c, b))
    return ModuleMatrix(m.signature, tuple(blocks))


def diagonal(m: ModuleMatrix) -> list:
    if m.rows != m.cols:
        raise ShapeMismatch(f"diagonal needs a square matrix, got {m.shape}")
    return [m.entry(j, j) for j in range(m.rows)]


def mhs_inner(a: ModuleMatrix, b: ModuleMatrix) -> CStarElement:
    """Modular Hilbert-Schmidt inner product sum_{j,k} a_jk b_jk^*."""
    a._check(b)
    return CStarElement(
        a.signature,
        tuple(np.einsum("abrs,abts->rt", x, y.conj()) for x, y in zip(a.blocks, b.blocks)),
    )


def mhs_norm(a: ModuleMatrix) -> float:
    return float(np.sqrt(cstar_norm(mhs_inner(a, a))))


def trace(m: ModuleMatrix) -> CStarElement:
    if m.rows != m.cols:
        raise ShapeMismatch(f"trace needs a square matrix, got {m.shape}")
    return CStarElement(m.signature, tuple(np.einsum("jjrs->rs", b) for b in m.blocks))


def flatten_block(m: ModuleMatrix, i: int) -> FlattenedBlock:
    if not 0 <= i < m.signature.num_blocks:
        raise IndexError(f"block index {i} out of range for signature {m.signature}")
    return FlattenedBlock(i, m.flatten(i))


def matrix_spectral_map(m: ModuleMatrix, fn: str, tol: float = DEFAULT_TOL) -> ModuleMatrix:
    """Functional calculus in the C*-algebra M_d(A), one flattened block at a time."""
    if m.rows != m.cols:
        raise ShapeMismatch(f"spectral map needs a square matrix, got {m.shape}")
    flats = [hermitian_map(m.flatten(i), fn, tol) for i in range(m.signature.num_blocks)]
    return ModuleMatrix.from_flattened(m.signature, flats)


def matrix_eigvals(m: ModuleMatrix, tol: float = DEFAULT_TOL) -> list:
    """Ascending eigenvalues of each flattened block of a Hermitian matrix."""
    return [hermitian_eigvals(m.flatten(i), tol) for i in range(m.signature.num_blocks)]


def flat_spectral_norm(m: ModuleMatrix) -> float:
    """Operator norm of m as a map on A^q, the largest flattened singular value."""
    best = 0.0
    for i in range(m.signature.num_blocks):
        f = m.flatten(i)
        w = jacobi_eigh(f.conj().T @ f)[0]
        best = max(best, float(np.sqrt(max(w[-1], 0.0))))
    return best


# projections


def is_projection(p: ModuleMatrix, tol: float = PROJECTION_TOL) -> bool:
    if p.rows != p.cols:
        return False
    return mhs_norm(p - p.H) <= tol and mhs_norm(p @ p - p) <= tol


def projection_rank(p: ModuleMatrix, tol: float = PROJECTION_TOL) -> int:
    """Module rank n of a projection: every block must have complex rank n * n_i."""
    if not is_projection(p, tol):
        raise NotProjection("matrix is not an orthogonal projection")
    ranks = set()
    for i, n_i in enumerate(p.signature.block_sizes):
        w = jacobi_eigh(p.flatten(i))[0]
        r = int(np.count_nonzero(w > 0.5))
        if r % n_i:
            raise RankMismatch(f"block {i} has complex rank {r}, not a multiple of {n_i}")
        ranks.add(r // n_i)
    if len(ranks) != 1:
        raise RankMismatch(f"blocks disagree on module rank: {sorted(ranks)}")
    return ranks.pop()


def chordal_expression(p: ModuleMatrix, q: ModuleMatrix, tol: float = PROJECTION_TOL) -> CStarElement:
    """m 1_A - (tr(PQ) + tr(QP)) / 2 for projections of common module rank m."""
    p._check(q)
    if not is_projection(p, tol) or not is_projection(q, tol):
        raise NotProjection("chordal distance needs two orthogonal projections")
    m = projection_rank(p, tol)
    if projection_rank(q, tol) != m:
        raise RankMismatch("projections have different module ranks")
    return m - 0.5 * (trace(p @ q) + trace(q @ p))


def chordal_distance(p: ModuleMatrix, q: ModuleMatrix, tol: float = PROJECTION_TOL) -> float:
    expr = chordal_expression(p, q, tol)
    if not is_positive(expr, max(tol, DEFAULT_TOL)):
        log.warning("chordal expression is not positive: %r", expr)
    return float(np.sqrt(cstar_norm(expr)))
