"""Modular frames for A^d.

A frame of n vectors is held through its n x d frame matrix T whose rows are
the vectors.  Analysis is x -> x T^*, synthesis a -> a T and the frame
operator is S = T^* T.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cstar import DEFAULT_TOL, AlgebraSignature, spectral_map, spectrum
from .errors import NoComplement, NotFrame, NotParseval, ShapeMismatch, Singular, SingularGram
from .jacobi import jacobi_eigh, phase_normalize
from .module import (
    ModuleMatrix,
    ModuleVector,
    inner,
    left_multiply_rows,
    matrix_eigvals,
    matrix_spectral_map,
    mhs_norm,
)

FRAME_TOL = 1e-8


@dataclass(frozen=True)
class FrameSystem:
    T: ModuleMatrix

    @property
    def signature(self) -> AlgebraSignature:
        return self.T.signature

    @property
    def n(self) -> int:
        return self.T.rows

    @property
    def d(self) -> int:
        return self.T.cols

    @property
    def frame_matrix(self) -> ModuleMatrix:
        return self.T

    @property
    def vectors(self) -> list:
        return self.T.row_vectors()

    def __len__(self):
        return self.n

    def __getitem__(self, j) -> ModuleVector:
        return self.T.row(j)

    def flatten(self, i: int):
        return self.T.flatten(i)

    @classmethod
    def from_flattened(cls, signature, flats) -> "FrameSystem":
        return cls(ModuleMatrix.from_flattened(signature, flats))

    def scaled(self, c: float) -> "FrameSystem":
        return FrameSystem(c * self.T)


@dataclass(frozen=True)
class FrameCertificate:
    lower: float
    upper: float
    parseval_eps: float
    equal_inner_eps: float
    is_frame: bool
    per_vector_spectra: tuple


def build_frame(vectors: Sequence[ModuleVector]) -> FrameSystem:
    if not vectors:
        raise ShapeMismatch("a frame needs at least one vector")
    return FrameSystem(ModuleMatrix.from_rows(list(vectors)))


def frame_operator(F: FrameSystem) -> ModuleMatrix:
    return F.T.H @ F.T


def gram_diagonal(F: FrameSystem) -> list:
    """The algebra elements <tau_j, tau_j>."""
    return [inner(v, v) for v in F.vectors]


def equal_inner_eps(F: FrameSystem, tol: float = DEFAULT_TOL):
    """Smallest eps with (1-eps)(d/n) <= <tau_j, tau_j> <= (1+eps)(d/n) for all j."""
    ratio = F.n / F.d
    spectra = tuple(spectrum(g, tol) for g in gram_diagonal(F))
    eps = max(max(1.0 - ratio * s.min, ratio * s.max - 1.0) for s in spectra)
    return max(eps, 0.0), spectra


def certify_frame(F: FrameSystem, tol: float = FRAME_TOL) -> FrameCertificate:
    eigs = matrix_eigvals(frame_operator(F))
    a = min(float(w[0]) for w in eigs)
    b = max(float(w[-1]) for w in eigs)
    eip, spectra = equal_inner_eps(F)
    return FrameCertificate(
        lower=a,
        upper=b,
        parseval_eps=max(1.0 - a, b - 1.0, 0.0),
        equal_inner_eps=eip,
        is_frame=a > tol,
        per_vector_spectra=spectra,
    )


def modular_distance(F: FrameSystem, G: FrameSystem) -> float:
    """|| sum_j <tau_j - omega_j, tau_j - omega_j> ||^(1/2)."""
    if F.T.shape != G.T.shape:
        raise ShapeMismatch(f"frames have shapes {F.T.shape} and {G.T.shape}")
    return mhs_norm(F.T - G.T)


def _inverse_sqrt_frame_operator(F: FrameSystem, tol: float):
    try:
        return matrix_spectral_map(frame_operator(F), "inv_sqrt", tol)
    except Singular as exc:
        raise NotFrame(f"frame operator is not invertible: {exc}") from exc


def closest_parseval(F: FrameSystem, tol: float = FRAME_TOL) -> FrameSystem:
    """Right action of S^(-1/2) on every frame vector."""
    return FrameSystem(F.T @ _inverse_sqrt_frame_operator(F, tol))


def equal_inner_normalize(F: FrameSystem, tol: float = FRAME_TOL) -> FrameSystem:
    """omega_j = sqrt(d/n) <tau_j, tau_j>^(-1/2) tau_j."""
    coeffs = []
    for j, g in enumerate(gram_diagonal(F)):
        try:
            coeffs.append(np.sqrt(F.d / F.n) * spectral_map(g, "inv_sqrt", tol))
        except Singular as exc:
            raise SingularGram(f"<tau_{j}, tau_{j}> is not invertible: {exc}") from exc
    return FrameSystem(left_multiply_rows(coeffs, F.T))


def canonical_projection(F: FrameSystem, tol: float = FRAME_TOL) -> ModuleMatrix:
    """P = T S^(-1) T^*, the projection onto the range of the analysis map."""
    try:
        s_inv = matrix_spectral_map(frame_operator(F), "inverse", tol)
    except Singular as exc:
        raise NotFrame(f"frame operator is not invertible: {exc}") from exc
    return F.T @ s_inv @ F.T.H


def analysis_image(F: FrameSystem) -> FrameSystem:
    """The vectors tau_j T^* in A^n, i.e. the rows of the Gram matrix T T^*."""
    return FrameSystem(F.T @ F.T.H)


def is_parseval(F: FrameSystem, tol: float = FRAME_TOL) -> bool:
    return certify_frame(F, tol).parseval_eps <= tol


def naimark_complement(F: FrameSystem, tol: float = FRAME_TOL) -> FrameSystem:
    """Parseval frame of n vectors in A^(n-d) built from the projection I - T T^*."""
    if F.n == F.d:
        raise NoComplement("n = d: the complementary projection is zero")
    if F.n < F.d:
        raise NotParseval("fewer vectors than the module dimension")
    cert = certify_frame(F, tol)
    if cert.parseval_eps > tol:
        raise NotParseval(f"input is not Parseval (eps = {cert.parseval_eps:.3g})")
    flats = []
    for i, n_i in enumerate(F.signature.block_sizes):
        t = F.flatten(i)
        comp = np.eye(t.shape[0]) - t @ t.conj().T
        w, v = jacobi_eigh(comp)
        keep = w > 0.5
        if int(keep.sum()) != (F.n - F.d) * n_i:
            raise NotParseval(f"block {i}: complementary projection has rank {int(keep.sum())}")
        flats.append(phase_normalize(v[:, keep]))
    return FrameSystem.from_flattened(F.signature, flats)
