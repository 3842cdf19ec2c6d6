"""Finite-dimensional C*-algebras A = M_{n_1}(C) + ... + M_{n_m}(C).

Elements are stored as tuples of complex square blocks.  Spectral questions
(positivity, norms, square roots) are answered block by block with the
Jacobi solver in :mod:`cstarframes.jacobi`.
"""
from __future__ import annotations

from dataclasses import dataclass
from numbers import Number
from typing import Sequence

import numpy as np

from .errors import NotHermitian, NotPositive, SignatureMismatch, Singular
from .jacobi import jacobi_eigh

DEFAULT_TOL = 1e-9
SPECTRAL_FUNCTIONS = ("sqrt", "inv_sqrt", "inverse")


@dataclass(frozen=True)
class AlgebraSignature:
    block_sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.block_sizes)
        if not sizes:
            raise ValueError("signature needs at least one block")
        if any(s < 1 for s in sizes):
            raise ValueError(f"block sizes must be positive, got {sizes}")
        object.__setattr__(self, "block_sizes", sizes)

    @classmethod
    def of(cls, sig) -> "AlgebraSignature":
        if isinstance(sig, AlgebraSignature):
            return sig
        if isinstance(sig, int):
            return cls((sig,))
        return cls(tuple(sig))

    @property
    def commutative(self) -> bool:
        return all(s == 1 for s in self.block_sizes)

    @property
    def num_blocks(self) -> int:
        return len(self.block_sizes)

    def __iter__(self):
        return iter(self.block_sizes)

    def __len__(self):
        return len(self.block_sizes)

    def __str__(self):
        return "[" + ",".join(map(str, self.block_sizes)) + "]"


def _frozen(arr):
    arr = np.array(arr, dtype=complex)
    arr.setflags(write=False)
    return arr


def check_same(sig_a: AlgebraSignature, sig_b: AlgebraSignature):
    if sig_a != sig_b:
        raise SignatureMismatch(f"signatures differ: {sig_a} vs {sig_b}")


@dataclass(frozen=True, eq=False)
class CStarElement:
    signature: AlgebraSignature
    blocks: tuple

    def __post_init__(self):
        sig = AlgebraSignature.of(self.signature)
        if len(self.blocks) != sig.num_blocks:
            raise ValueError(f"expected {sig.num_blocks} blocks, got {len(self.blocks)}")
        blocks = []
        for i, (b, n) in enumerate(zip(self.blocks, sig.block_sizes)):
            b = np.asarray(b, dtype=complex)
            if b.shape != (n, n):
                raise ValueError(f"block {i} must be {n}x{n}, got shape {b.shape}")
            blocks.append(_frozen(b))
        object.__setattr__(self, "signature", sig)
        object.__setattr__(self, "blocks", tuple(blocks))

    # construction helpers
    @classmethod
    def scalar(cls, signature, value) -> "CStarElement":
        sig = AlgebraSignature.of(signature)
        return cls(sig, tuple(value * np.eye(n) for n in sig.block_sizes))

    @classmethod
    def from_scalars(cls, signature, values: Sequence[complex]) -> "CStarElement":
        """Element of a commutative algebra given by one scalar per block."""
        sig = AlgebraSignature.of(signature)
        return cls(sig, tuple(v * np.eye(n) for v, n in zip(values, sig.block_sizes)))

    # arithmetic
    def _coerce(self, other):
        if isinstance(other, CStarElement):
            check_same(self.signature, other.signature)
            return other
        if isinstance(other, Number):
            return CStarElement.scalar(self.signature, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return CStarElement(self.signature, tuple(a + b for a, b in zip(self.blocks, other.blocks)))

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return CStarElement(self.signature, tuple(a - b for a, b in zip(self.blocks, other.blocks)))

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return CStarElement(self.signature, tuple(-a for a in self.blocks))

    def __mul__(self, other):
        if isinstance(other, Number):
            return CStarElement(self.signature, tuple(other * a for a in self.blocks))
        if isinstance(other, CStarElement):
            return multiply(self, other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, Number):
            return CStarElement(self.signature, tuple(other * a for a in self.blocks))
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, Number):
            return self * (1.0 / other)
        return NotImplemented

    @property
    def H(self) -> "CStarElement":
        return adjoint(self)

    def allclose(self, other, atol=1e-12) -> bool:
        other = self._coerce(other)
        return all(np.allclose(a, b, rtol=0, atol=atol) for a, b in zip(self.blocks, other.blocks))

    def __repr__(self):
        inner = ", ".join(np.array2string(b, precision=4) for b in self.blocks)
        return f"CStarElement({self.signature}, {inner})"


@dataclass(frozen=True)
class SpectrumReport:
    per_block_eigenvalues: tuple
    min: float
    max: float


def identity(signature) -> CStarElement:
    return CStarElement.scalar(signature, 1.0)


def zero(signature) -> CStarElement:
    return CStarElement.scalar(signature, 0.0)


def random_element(signature, rng, hermitian=False) -> CStarElement:
    sig = AlgebraSignature.of(signature)
    blocks = []
    for n in sig.block_sizes:
        b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        if hermitian:
            b = b + b.conj().T
        blocks.append(b)
    return CStarElement(sig, tuple(blocks))


def adjoint(a: CStarElement) -> CStarElement:
    return CStarElement(a.signature, tuple(b.conj().T for b in a.blocks))


def multiply(a: CStarElement, b: CStarElement) -> CStarElement:
    check_same(a.signature, b.signature)
    return CStarElement(a.signature, tuple(x @ y for x, y in zip(a.blocks, b.blocks)))


def _hermitian_defect(block) -> float:
    if block.size == 0:
        return 0.0
    return float(np.abs(block - block.conj().T).max())


def is_hermitian_block(block, tol=DEFAULT_TOL) -> bool:
    return _hermitian_defect(block) <= tol * max(1.0, float(np.linalg.norm(block)))


def hermitian_eigvals(block, tol=DEFAULT_TOL):
    if not is_hermitian_block(block, tol):
        raise NotHermitian(f"block is not Hermitian (defect {_hermitian_defect(block):.3g})")
    return jacobi_eigh(block)[0]


def is_positive(a: CStarElement, tol: float = DEFAULT_TOL) -> bool:
    """Hermitian with spectrum >= -tol, measured after scaling to unit norm."""
    if tol < 0:
        raise ValueError("tol must be non-negative")
    if not all(is_hermitian_block(b, tol) for b in a.blocks):
        return False
    eigs = [jacobi_eigh(b)[0] for b in a.blocks]
    scale = max(1.0, max(float(np.abs(e).max()) for e in eigs))
    return all(float(e.min()) >= -tol * scale for e in eigs)


def order_leq(a: CStarElement, b: CStarElement, tol: float = DEFAULT_TOL) -> bool:
    check_same(a.signature, b.signature)
    return is_positive(b - a, tol)


def block_norm(block) -> float:
    """Operator norm of a complex matrix, as sqrt of the top eigenvalue of b^H b."""
    if block.size == 0:
        return 0.0
    w = jacobi_eigh(block.conj().T @ block)[0]
    return float(np.sqrt(max(w[-1], 0.0)))


def cstar_norm(a: CStarElement) -> float:
    return max(block_norm(b) for b in a.blocks)


def hermitian_map(block, fn: str, tol: float = DEFAULT_TOL):
    """Apply ``fn`` to the spectrum of one Hermitian complex matrix."""
    if fn not in SPECTRAL_FUNCTIONS:
        raise ValueError(f"unknown spectral function {fn!r}")
    if not is_hermitian_block(block, tol):
        raise NotHermitian(f"block is not Hermitian (defect {_hermitian_defect(block):.3g})")
    w, v = jacobi_eigh(block)
    scale = max(1.0, float(np.abs(w).max(initial=0.0)))
    if fn == "sqrt":
        if w.size and w[0] < -tol * scale:
            raise NotPositive(f"smallest eigenvalue {w[0]:.3g} is negative")
        f = np.sqrt(np.clip(w, 0.0, None))
    else:
        if w.size and w[0] < tol * scale:
            raise Singular(f"smallest eigenvalue {w[0]:.3g} is below tolerance {tol:.3g}")
        f = 1.0 / np.sqrt(w) if fn == "inv_sqrt" else 1.0 / w
    out = (v * f) @ v.conj().T
    return 0.5 * (out + out.conj().T)


def spectral_map(a: CStarElement, fn: str, tol: float = DEFAULT_TOL) -> CStarElement:
    return CStarElement(a.signature, tuple(hermitian_map(b, fn, tol) for b in a.blocks))


def spectrum(a: CStarElement, tol: float = DEFAULT_TOL) -> SpectrumReport:
    eigs = tuple(hermitian_eigvals(b, tol) for b in a.blocks)
    return SpectrumReport(
        per_block_eigenvalues=eigs,
        min=min(float(e.min()) for e in eigs),
        max=max(float(e.max()) for e in eigs),
    )
