import math

import numpy as np
import pytest

from cstarframes.cstar import CStarElement, cstar_norm
from cstarframes.errors import Degenerate, NonCommutative, ShapeMismatch, SingularGram, SingularMarginal
from cstarframes.explorer import generate
from cstarframes.frames import FrameSystem
from cstarframes.module import ModuleMatrix, ModuleVector, flat_spectral_norm, identity_matrix, mhs_inner, standard_basis
from cstarframes.opscale import (
    CoefficientVector,
    MatrixTuple,
    forster_transform,
    frame_to_tuple,
    isotropy_matrix,
    left_marginal,
    matrix_paulsen_probe,
    nearly_eps,
    operator_scale,
    radial_isotropic_check,
    right_marginal,
    tuple_certify,
    tuple_distance,
    tuple_to_frame,
)

from conftest import oracle_inv_sqrt, rand_frame


def tup(sig, *flats):
    return MatrixTuple(tuple(ModuleMatrix.from_flattened(sig, f) for f in flats))


def ctup(*mats):
    return tup((1,), *[[np.array(m, dtype=complex)] for m in mats])


def classical_vectors(rows):
    return [ModuleVector((1,), (np.array(r, dtype=complex).reshape(-1, 1, 1),)) for r in rows]


class TestTuple:
    def test_shape_checks(self, rng):
        with pytest.raises(ShapeMismatch):
            ctup(np.eye(2), np.eye(3))
        with pytest.raises(ShapeMismatch):
            MatrixTuple(())

    def test_frame_roundtrip(self, rng):
        F = rand_frame((2, 1), 2, 3, rng)
        T = frame_to_tuple(F)
        assert T.k == 3 and (T.m, T.n) == (3, 2)
        assert tuple_to_frame(T).T.allclose(F.T)
        # sum V_j^* V_j is the frame operator
        assert right_marginal(T).allclose(F.T.H @ F.T, atol=1e-12)


class TestCertify:
    def test_doubly_stochastic(self):
        r = tuple_certify(ctup(np.eye(2) / math.sqrt(2), np.eye(2) / math.sqrt(2)))
        assert r.is_balanced and r.is_doubly_stochastic
        assert r.nearly_eps == pytest.approx(0, abs=1e-14)

    def test_single_identity(self):
        # sum V V^* = I = c n I and sum V^* V = I = c m I with c = 1/2 = 1/n:
        # balanced, and by the definition (c = 1/n) also doubly stochastic
        r = tuple_certify(ctup(np.eye(2)))
        assert r.is_balanced
        assert r.c.allclose(CStarElement.scalar((1,), 0.5))
        assert r.is_doubly_stochastic

    def test_not_balanced(self):
        r = tuple_certify(ctup(np.diag([1.0, 0.0])))
        assert not r.is_balanced and r.c is None and not r.is_doubly_stochastic

    def test_balanced_not_stochastic(self):
        r = tuple_certify(ctup(2 * np.eye(2)))
        assert r.is_balanced and not r.is_doubly_stochastic
        assert r.c.allclose(CStarElement.scalar((1,), 2.0))
        assert r.nearly_eps == pytest.approx(3.0)

    def test_nearly_eps_oracle(self, rng):
        T = generate.random_tuple((1, 2), 3, 2, 3, 4)
        want = 0.0
        for i in range(2):
            L = sum(v.flatten(i) @ v.flatten(i).conj().T for v in T.matrices)
            R = sum(v.flatten(i).conj().T @ v.flatten(i) for v in T.matrices)
            wl, wr = np.linalg.eigvalsh(L), np.linalg.eigvalsh(R) / (2 / 3)
            want = max(want, 1 - wl[0], wl[-1] - 1, 1 - wr[0], wr[-1] - 1)
        assert nearly_eps(T) == pytest.approx(want, rel=1e-9)


class TestDistance:
    def test_examples(self, rng):
        T = generate.random_tuple((2,), 2, 2, 2, 1)
        assert tuple_distance(T, T) == 0
        assert tuple_distance(ctup([[1]]), ctup([[0]])) == pytest.approx(1)

    def test_block_oracle(self):
        U, V = generate.random_tuple((1, 1), 3, 2, 2, 1), generate.random_tuple((1, 1), 3, 2, 2, 2)
        per = [sum(np.sum(np.abs(a.flatten(i) - b.flatten(i)) ** 2) for a, b in zip(U.matrices, V.matrices))
               for i in range(2)]
        assert tuple_distance(U, V) ** 2 == pytest.approx(max(per))
        assert tuple_distance(U, V) == pytest.approx(tuple_distance(V, U))

    def test_length_mismatch(self):
        with pytest.raises(ShapeMismatch):
            tuple_distance(ctup([[1]]), ctup([[1]], [[1]]))


def _oracle_scale(mats, m, n, tol=1e-12, max_iter=5000):
    mats = [np.array(v) for v in mats]
    for _ in range(max_iter):
        X = oracle_inv_sqrt(sum(v @ v.conj().T for v in mats))
        mats = [X @ v for v in mats]
        Y = math.sqrt(m / n) * oracle_inv_sqrt(sum(v.conj().T @ v for v in mats))
        mats = [v @ Y for v in mats]
        L = sum(v @ v.conj().T for v in mats)
        if np.abs(np.linalg.eigvalsh(L) - 1).max() < tol:
            break
    return mats


class TestScale:
    def test_fixed_point(self):
        U = ctup(np.eye(2) / math.sqrt(2), np.eye(2) / math.sqrt(2))
        r = operator_scale(U)
        assert r.iterations == 0 and r.converged
        assert r.L.allclose(identity_matrix((1,), 2)) and r.R.allclose(identity_matrix((1,), 2))

    def test_scalars(self):
        r = operator_scale(ctup([[3]], [[4]]))
        assert r.iterations == 1 and r.converged
        assert np.allclose([v.flatten(0)[0, 0] for v in r.scaled.matrices], [0.6, 0.8])

    def test_random_convergence(self):
        ok = 0
        for s in range(40):
            r = operator_scale(generate.random_tuple((1,), 3, 2, 2, (3, s)), max_iter=500)
            ok += r.residual_trace[-1] <= 1e-6
        assert ok >= 38

    def test_half_steps_and_reproduction(self):
        for sig in [(1,), (2,), (1, 2)]:
            U = generate.random_tuple(sig, 3, 2, 3, 9)
            r = operator_scale(U)
            assert r.converged
            assert max(r.left_deviations) <= 1e-10 and max(r.right_deviations) <= 1e-10
            for u, v in zip(U.matrices, r.scaled.matrices):
                assert flat_spectral_norm(r.L @ u @ r.R - v) <= 1e-9
            assert r.residual_trace[-1] <= 1e-8
            rep = tuple_certify(r.scaled, 1e-7)
            assert rep.nearly_eps <= 1e-8

    def test_block_oracle(self):
        U = generate.random_tuple((1, 2), 2, 2, 3, 5)
        r = operator_scale(U, tol=1e-12, max_iter=5000)
        for i in range(2):
            want = _oracle_scale([v.flatten(i) for v in U.matrices], 2, 3)
            for v, w in zip(r.scaled.matrices, want):
                assert np.allclose(v.flatten(i), w, atol=1e-9)

    def test_singular(self):
        with pytest.raises(SingularMarginal):
            operator_scale(ctup(np.diag([1.0, 0.0])))


class TestProbe:
    def test_doubly_stochastic(self):
        p = matrix_paulsen_probe(ctup(np.eye(2) / math.sqrt(2), np.eye(2) / math.sqrt(2)))
        assert p.dist_sq == 0 and p.input_eps == pytest.approx(0, abs=1e-14)

    def test_scaled(self):
        eps = 0.3
        T = operator_scale(generate.random_tuple((1, 2), 2, 2, 3, 6)).scaled
        U = T.map(lambda v: math.sqrt(1 + eps) * v)
        p = matrix_paulsen_probe(U)
        assert p.input_eps == pytest.approx(eps, abs=1e-7)
        total = sum((mhs_inner(v, v) for v in T.matrices[1:]), mhs_inner(T[0], T[0]))
        assert p.dist_sq == pytest.approx((math.sqrt(1 + eps) - 1) ** 2 * cstar_norm(total), rel=1e-6)


class TestRadial:
    def test_basis(self):
        for sig in [(1,), (2, 1)]:
            for d in range(1, 9):
                e = standard_basis(sig, d)
                assert radial_isotropic_check(e, CoefficientVector.constant(sig, 1.0, d))
        e = standard_basis((1,), 3)
        assert not radial_isotropic_check(e, CoefficientVector.constant((1,), 2.0, 3))

    def test_three_vector_example(self):
        u = classical_vectors([[1, 0], [0, 1], [1 / math.sqrt(2), 1 / math.sqrt(2)]])
        c = CoefficientVector(tuple(CStarElement.scalar((1,), v) for v in (0.5, 0.5, 1.0)))
        # direct sum: diag(1/2, 1/2) + [[1/2, 1/2], [1/2, 1/2]] = [[1, 1/2], [1/2, 1]]
        M = isotropy_matrix(u, c)
        assert np.allclose(M.flatten(0), [[1, 0.5], [0.5, 1]])
        assert not radial_isotropic_check(u, c)

    def test_sandwich_order(self, rng):
        # over M_2, outer(c; v)_{p,q} = v_p^* c v_q
        v = ModuleVector((2,), (np.eye(2)[None] * 1.0 + 0j,))
        c = CStarElement((2,), (np.array([[2.0, 1.0], [1.0, 3.0]]),))
        M = isotropy_matrix([v], CoefficientVector((c,)))
        assert np.allclose(M.entry(0, 0).blocks[0], c.blocks[0])

    def test_singular_gram(self):
        u = classical_vectors([[1, 0], [0, 0]])
        with pytest.raises(SingularGram):
            radial_isotropic_check(u, CoefficientVector.constant((1,), 1.0, 2))

    def test_coefficients_positive(self):
        with pytest.raises(ValueError):
            CoefficientVector((CStarElement.scalar((1,), -1.0),))


class TestForster:
    def test_fixed_point(self):
        e = standard_basis((1, 1), 2)
        r = forster_transform(e, CoefficientVector.constant((1, 1), 1.0, 2))
        assert r.converged and r.A.allclose(identity_matrix((1, 1), 2))

    def test_generic(self):
        rng = np.random.default_rng(3)
        rows = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
        u = classical_vectors(rows)
        c = CoefficientVector.constant((1,), 2 / 3, 3)
        r = forster_transform(u, c)
        assert r.converged and r.residual_trace[-1] <= 1e-8
        assert radial_isotropic_check(r.transformed, c)
        # the transformed vectors are the originals acted on by A
        for a, b in zip(u, r.transformed):
            assert np.allclose(a.flatten(0) @ r.A.flatten(0), b.flatten(0))

    def test_colinear(self):
        u = classical_vectors([[1, 0], [2, 0], [0.3, 1]])
        with pytest.raises(Degenerate):
            forster_transform(u, CoefficientVector.constant((1,), 2 / 3, 3))

    def test_errors(self):
        e = standard_basis((2,), 2)
        with pytest.raises(NonCommutative):
            forster_transform(e, CoefficientVector.constant((2,), 1.0, 2))
        with pytest.raises(ValueError):
            forster_transform(standard_basis((1,), 2), CoefficientVector.constant((1,), 0.5, 2))
