import math

import numpy as np
import pytest

from cstarframes.cstar import cstar_norm
from cstarframes.errors import (
    NotFrame,
    NotParseval,
    NotProjection,
    NotUnitNorm,
    ShapeMismatch,
    SignatureMismatch,
    SolverFailed,
    StepSizeOutOfRange,
)
from cstarframes.explorer import generate
from cstarframes.frames import (
    FrameSystem,
    analysis_image,
    certify_frame,
    closest_parseval,
    gram_diagonal,
    modular_distance,
)
from cstarframes.module import ModuleMatrix, diagonal, identity_matrix
from cstarframes.paulsen import (
    cfm_flow,
    diagonal_eps,
    harmonic_frame,
    imp_check,
    lower_bound_witness,
    modular_paulsen_solve,
    projection_construct,
    witness_distance_sq,
)

from conftest import oracle_equal_inner, oracle_parseval, rand_frame


def classical(rows, sig=(1,)):
    return FrameSystem.from_flattened(sig, [np.array(rows, dtype=complex)])


def mercedes(phase=0.0):
    j = np.arange(3)
    a = 2 * np.pi * j / 3 + phase
    return classical(np.sqrt(2 / 3) * np.stack([np.cos(a), np.sin(a)], axis=1))


def line_projection(thetas):
    flats = [np.outer([math.cos(t), math.sin(t)], [math.cos(t), math.sin(t)]) for t in thetas]
    return ModuleMatrix.from_flattened((1,) * len(thetas), flats)


class TestImpCheck:
    def test_identical(self):
        r = imp_check(mercedes(), mercedes())
        assert r.dist_sq == 0 and r.image_dist_sq == 0 and r.bound_ok and r.hypothesis_ok

    def test_rotation(self):
        F, G = mercedes(), mercedes(0.05)
        r = imp_check(F, G)
        # both sides evaluated directly
        t, s = F.flatten(0), G.flatten(0)
        assert r.dist_sq == pytest.approx(np.sum(np.abs(t - s) ** 2))
        assert r.image_dist_sq == pytest.approx(np.sum(np.abs(t @ t.T - s @ s.T) ** 2))
        assert r.image_dist_sq <= 4 * r.dist_sq

    def test_random_commutative_pairs(self):
        rng = np.random.default_rng(7)
        for trial in range(100):
            d = int(rng.integers(1, 5))
            n = int(rng.integers(d, 9))
            F = generate.random_parseval_frame((1, 1), d, n, (7, trial))
            G = closest_parseval(generate.perturb_frame(F, float(rng.uniform(0.01, 0.5)), (7, trial)))
            r = imp_check(F, G)
            # independent recomputation, block by block
            ds = max(np.sum(np.abs(F.flatten(i) - G.flatten(i)) ** 2) for i in range(2))
            im = max(
                np.sum(np.abs(F.flatten(i) @ F.flatten(i).conj().T - G.flatten(i) @ G.flatten(i).conj().T) ** 2)
                for i in range(2)
            )
            assert r.dist_sq == pytest.approx(ds, rel=1e-9)
            assert r.image_dist_sq == pytest.approx(im, rel=1e-9)
            assert r.bound_ok and r.image_dist_sq <= 4 * r.dist_sq + 1e-8

    def test_noncommutative_probe(self):
        F = generate.random_parseval_frame((2,), 2, 3, 1)
        G = closest_parseval(generate.perturb_frame(F, 0.1, 1))
        assert imp_check(F, G).hypothesis_ok is False

    def test_errors(self, rng):
        with pytest.raises(NotParseval):
            imp_check(rand_frame((1,), 2, 3, rng), mercedes())
        with pytest.raises(ShapeMismatch):
            imp_check(mercedes(), classical(np.eye(2)))


class TestCfm:
    def unit_tight(self):
        return mercedes().scaled(math.sqrt(3 / 2))

    def test_fixed_point(self):
        F = self.unit_tight()
        t = F.flatten(0)
        s = t.conj().T @ t
        st = t @ s
        omega = st - np.einsum("jk,jk->j", st, t.conj())[:, None] * t
        assert np.allclose(omega, 0, atol=1e-14)
        G, tr = cfm_flow(F, 0.1)
        assert tr.iterations == 0 and np.allclose(G.flatten(0), t)

    def test_monotone_decrease(self):
        F = generate.unit_norm_tight_start(2, 3, 0.1, 3)
        _, tr = cfm_flow(F, 0.1, max_iter=100, tol=1e-15)
        r = np.array(tr.residuals)
        assert np.all(np.diff(r[:101]) <= 0)
        assert max(tr.unit_norm_deviation) <= 1e-8

    def test_update_matches_formula(self):
        F = generate.unit_norm_tight_start(2, 3, 0.2, 5)
        t = np.array(F.flatten(0))
        G, _ = cfm_flow(F, 0.1, max_iter=1)
        s = t.conj().T @ t
        out = []
        for tau in t:
            w = tau @ s - np.vdot(tau, tau @ s).conjugate() * tau
            nw = np.linalg.norm(w)
            out.append(np.cos(nw * 0.1) * tau - np.sin(nw * 0.1) * w / nw)
        assert np.allclose(G.flatten(0), out, atol=1e-14)

    def test_errors(self):
        with pytest.raises(StepSizeOutOfRange):
            cfm_flow(self.unit_tight(), 1.0)
        with pytest.raises(StepSizeOutOfRange):
            cfm_flow(self.unit_tight(), 0.0)
        with pytest.raises(NotUnitNorm):
            cfm_flow(mercedes(), 0.1)
        with pytest.raises(SignatureMismatch):
            cfm_flow(harmonic_frame((1, 1), 3, 2), 0.1)


def _oracle_alternation(t, n_i, d, n, tol=1e-13, max_iter=5000):
    for _ in range(max_iter):
        t = oracle_parseval(t)
        t = oracle_equal_inner(t, n_i, d, n)
        s = t.conj().T @ t
        if np.abs(np.linalg.eigvalsh(s) - 1).max() < tol:
            break
    return t


class TestSolver:
    def test_fixed_point(self):
        F = harmonic_frame((2, 1), 5, 3)
        r = modular_paulsen_solve(F)
        assert r.achieved_dist_sq == 0 and r.converged and r.iterations == 0

    def test_witness(self):
        F = lower_bound_witness(0.2, 3, 2)
        r = modular_paulsen_solve(F)
        assert r.converged
        assert r.achieved_dist_sq >= 2 * (math.sqrt(1.2) - 1) ** 2 - 1e-9
        # the unscaled frame is the nearest candidate: the solver lands on it
        assert r.achieved_dist_sq == pytest.approx(witness_distance_sq(0.2, 2), rel=1e-6)

    def test_invariants(self, rng):
        F = rand_frame((1, 2), 2, 3, rng)
        r = modular_paulsen_solve(F)
        assert r.achieved_dist_sq == pytest.approx(modular_distance(F, r.output) ** 2)
        if r.converged:
            assert r.final_parseval_eps <= 1e-8 and r.final_equal_inner_eps <= 1e-8
            again = modular_paulsen_solve(r.output)
            assert again.achieved_dist_sq <= 1e-12

    def test_deterministic(self, rng):
        F = rand_frame((2,), 2, 4, rng)
        a, b = modular_paulsen_solve(F), modular_paulsen_solve(F)
        assert a.output.T.allclose(b.output.T, atol=0)

    def test_yardstick(self):
        ok = 0
        for trial in range(20):
            rng = np.random.default_rng(trial)
            d = int(rng.integers(2, 6))
            n = int(rng.integers(d, 2 * d + 1))
            F, eps = generate.near_equal_parseval_frame((1,), d, n, 0.1, (11, trial))
            r = modular_paulsen_solve(F)
            ok += r.converged and r.achieved_dist_sq <= 20 * eps * d * d
        assert ok >= 18

    def test_per_block_equivalence(self, rng):
        F = rand_frame((1, 1), 2, 3, rng)
        r = modular_paulsen_solve(F, tol=1e-12, max_iter=5000)
        assert r.converged
        for i in range(2):
            want = _oracle_alternation(np.array(F.flatten(i)), 1, 2, 3)
            assert np.allclose(r.output.flatten(i), want, atol=1e-9)

    def test_opscale_inner_solver(self, rng):
        F = closest_parseval(rand_frame((1,), 2, 3, rng))
        r = modular_paulsen_solve(F, inner_solver="opscale")
        c = certify_frame(r.output)
        assert max(c.parseval_eps, c.equal_inner_eps) <= 1e-6
        with pytest.raises(ValueError):
            modular_paulsen_solve(F, inner_solver="newton")

    def test_not_frame(self, rng):
        with pytest.raises(NotFrame):
            modular_paulsen_solve(rand_frame((1,), 3, 2, rng))


class TestProjection:
    def test_equal_norm_line(self):
        P = line_projection([math.pi / 4])
        rep = projection_construct(P)
        assert rep.epsilon_in == pytest.approx(0, abs=1e-12)
        assert rep.Q.allclose(P, atol=1e-10)
        assert rep.projection_dist_sq == pytest.approx(0, abs=1e-18)

    def test_tilted_line(self):
        th = math.pi / 4 + 0.05
        P = line_projection([th])
        rep = projection_construct(P)
        # closed form: the equal-norm line through (1, 1)
        assert np.allclose(rep.Q.flatten(0), 0.5 * np.ones((2, 2)), atol=1e-9)
        assert rep.bound_ok and rep.rank == 1
        want_solver = (math.cos(th) - math.sqrt(0.5)) ** 2 + (math.sin(th) - math.sqrt(0.5)) ** 2
        assert rep.solver_dist_sq == pytest.approx(want_solver, rel=1e-6)
        assert rep.projection_dist_sq == pytest.approx(np.sum((P.flatten(0) - 0.5) ** 2), rel=1e-6)

    def test_block_pair(self):
        ths = [math.pi / 4 + 0.05, math.pi / 4 - 0.1]
        rep = projection_construct(line_projection(ths))
        assert rep.bound_ok and rep.converged
        for i, th in enumerate(ths):
            single = projection_construct(line_projection([th]))
            assert np.allclose(rep.Q.flatten(i), single.Q.flatten(0), atol=1e-9)

    def test_random_invariants(self):
        for trial in range(10):
            P, eps = generate.near_equal_projection((1, 1), 5, 2, 0.1, (5, trial))
            rep = projection_construct(P)
            assert rep.epsilon_in == pytest.approx(eps)
            assert rep.converged
            assert rep.idempotence_error <= 1e-8 and rep.selfadjoint_error <= 1e-8
            assert all(cstar_norm(q - 0.4) <= 1e-6 for q in diagonal(rep.Q))
            assert rep.projection_dist_sq <= 4 * rep.solver_dist_sq + 1e-6

    def test_errors(self):
        with pytest.raises(NotProjection):
            projection_construct(2 * identity_matrix((1,), 2))
        P, _ = generate.near_equal_projection((2,), 4, 2, 0.3, 0)
        with pytest.raises(SolverFailed):
            projection_construct(P, max_iter=1, strict=True)
        rep = projection_construct(P, max_iter=1)
        assert not rep.converged and not rep.hypothesis_ok


class TestWitness:
    def test_certificates(self):
        for eps in (0.05, 0.1, 0.2):
            W = lower_bound_witness(eps, 3, 2)
            c = certify_frame(W)
            assert c.parseval_eps == pytest.approx(eps, abs=1e-10)
            assert c.equal_inner_eps == pytest.approx(eps, abs=1e-10)

    def test_distance(self):
        G = harmonic_frame((1,), 3, 2)
        assert modular_distance(lower_bound_witness(0.2, 3, 2), G) ** 2 == pytest.approx(0.0183, abs=1e-4)
        assert witness_distance_sq(1e-9, 2) < 1e-18

    def test_other_signature(self):
        W = lower_bound_witness(0.1, 4, 2, (2, 1))
        assert certify_frame(W).parseval_eps == pytest.approx(0.1, abs=1e-10)

    def test_invalid(self):
        with pytest.raises(ValueError):
            lower_bound_witness(0.1, 1, 2)
        with pytest.raises(ValueError):
            lower_bound_witness(1.5, 3, 2)


def test_harmonic_is_equal_inner_parseval():
    for sig in [(1,), (2, 3)]:
        c = certify_frame(harmonic_frame(sig, 7, 3))
        assert c.parseval_eps < 1e-12 and c.equal_inner_eps < 1e-12


def test_diagonal_eps():
    P = line_projection([math.pi / 3])
    # |Pe_1|^2 = cos^2 = 1/4 and |Pe_2|^2 = 3/4 against the target 1/2
    assert diagonal_eps(P, 0.5) == pytest.approx(0.5)
