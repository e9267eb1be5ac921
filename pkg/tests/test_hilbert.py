"""Tests for weighted spaces, adjoints, coercivity classes, and probe gaps."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homlab.errors import MissingTranspose, ShapeError
from homlab.hilbert import (
    HilbertSpace,
    LinearOp,
    ProbeSet,
    Subspace,
    adjoint,
    coercivity_check,
    kernel_range,
    strong_gap,
    wot_gap,
)


def random_space(dim, seed, diagonal=True, field="real"):
    rng = np.random.default_rng(seed)
    if diagonal:
        w = rng.uniform(0.5, 2.0, size=dim)
    else:
        m = rng.standard_normal((dim, dim))
        w = m @ m.T + dim * np.eye(dim)
    return HilbertSpace(dim, weight=w, field=field)


class TestHilbertSpace:
    def test_inner_antilinear_first_slot(self):
        space = HilbertSpace(3, weight=np.array([1.0, 2.0, 3.0]), field="complex")
        x = np.array([1.0 + 1j, 0.0, 2.0])
        y = np.array([0.5, 1j, -1.0])
        lam = 0.7 - 0.3j
        assert np.isclose(space.inner(lam * x, y), np.conj(lam) * space.inner(x, y))
        assert np.isclose(space.inner(x, lam * y), lam * space.inner(x, y))

    def test_weight_must_be_positive(self):
        with pytest.raises(ShapeError):
            HilbertSpace(2, weight=np.array([1.0, -1.0]))
        with pytest.raises(ShapeError):
            HilbertSpace(2, weight=np.array([[1.0, 3.0], [3.0, 1.0]]))

    def test_dense_weight_inner(self):
        w = np.array([[2.0, 0.5], [0.5, 1.0]])
        space = HilbertSpace(2, weight=w)
        x = np.array([1.0, 2.0])
        assert np.isclose(space.inner(x, x), x @ w @ x)


class TestAdjoint:
    def test_identity_weight_symmetric(self):
        # symmetric real matrix, W = I: adjoint is the matrix itself
        space = HilbertSpace(4)
        rng = np.random.default_rng(0)
        m = rng.standard_normal((4, 4))
        m = m + m.T
        op = LinearOp(space, space, matrix=m)
        np.testing.assert_allclose(adjoint(op).to_dense(), m, atol=1e-14)

    def test_pairing_identity_random(self):
        # oracle: direct inner-product comparison on random vectors
        src = random_space(10, 1)
        tgt = random_space(10, 2)
        rng = np.random.default_rng(3)
        a = LinearOp(src, tgt, matrix=rng.standard_normal((10, 10)))
        astar = adjoint(a)
        for _ in range(5):
            x = rng.standard_normal(10)
            y = rng.standard_normal(10)
            assert abs(tgt.inner(y, a(x)) - src.inner(astar(y), x)) < 1e-12

    def test_pairing_identity_complex_dense_weight(self):
        src = random_space(6, 4, diagonal=False, field="complex")
        tgt = random_space(6, 5, field="complex")
        rng = np.random.default_rng(6)
        m = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        a = LinearOp(src, tgt, matrix=m)
        astar = adjoint(a)
        for _ in range(5):
            x = rng.standard_normal(6) + 1j * rng.standard_normal(6)
            y = rng.standard_normal(6) + 1j * rng.standard_normal(6)
            assert abs(tgt.inner(y, a(x)) - src.inner(astar(y), x)) < 1e-11

    def test_block_offdiagonal_adjoint(self):
        # [[0, B], [C, 0]] has adjoint [[0, C*], [B*, 0]]
        h0 = random_space(3, 7)
        h1 = random_space(4, 8)
        rng = np.random.default_rng(9)
        b = rng.standard_normal((3, 4))   # B : H1 -> H0
        c = rng.standard_normal((4, 3))   # C : H0 -> H1
        w = np.concatenate([h0.weight, h1.weight])
        big = HilbertSpace(7, weight=w)
        block = np.zeros((7, 7))
        block[:3, 3:] = b
        block[3:, :3] = c
        op = LinearOp(big, big, matrix=block)
        bstar = adjoint(LinearOp(h1, h0, matrix=b)).to_dense()
        cstar = adjoint(LinearOp(h0, h1, matrix=c)).to_dense()
        expected = np.zeros((7, 7))
        expected[:3, 3:] = cstar
        expected[3:, :3] = bstar
        np.testing.assert_allclose(adjoint(op).to_dense(), expected, atol=1e-12)

    def test_involution(self):
        src = random_space(8, 11)
        tgt = random_space(8, 12)
        rng = np.random.default_rng(13)
        a = LinearOp(src, tgt, matrix=rng.standard_normal((8, 8)))
        np.testing.assert_allclose(adjoint(adjoint(a)).to_dense(), a.to_dense(), atol=1e-12)

    def test_matrix_free_without_transpose_raises(self):
        space = HilbertSpace(3)
        op = LinearOp(space, space, apply=lambda x: 2 * x)
        with pytest.raises(MissingTranspose):
            adjoint(op)

    def test_matrix_free_with_transpose(self):
        space = random_space(5, 14)
        rng = np.random.default_rng(15)
        m = rng.standard_normal((5, 5))
        op = LinearOp(space, space, apply=lambda x: m @ x, rmatvec=lambda y: m.T @ y)
        astar = adjoint(op)
        x = rng.standard_normal(5)
        y = rng.standard_normal(5)
        assert abs(space.inner(y, op(x)) - space.inner(astar(y), x)) < 1e-12

    def test_linearity_guard(self):
        from homlab.hilbert import check_linear

        space = HilbertSpace(4)
        rng = np.random.default_rng(16)
        m = rng.standard_normal((4, 4))
        assert check_linear(LinearOp(space, space, apply=lambda x: m @ x))
        crooked = LinearOp(space, space, apply=lambda x: m @ x + 0.01)
        with pytest.raises(ShapeError):
            check_linear(crooked)


class TestKernelRange:
    def test_zero_operator(self):
        space = HilbertSpace(5)
        op = LinearOp(space, space, matrix=np.zeros((5, 5)))
        ker, ran = kernel_range(op)
        assert ker.dim == 5
        assert ran.dim == 0

    def test_rank_nullity_with_adjoint(self):
        src = random_space(7, 20)
        tgt = random_space(5, 21)
        rng = np.random.default_rng(22)
        m = rng.standard_normal((5, 3)) @ rng.standard_normal((3, 7))  # rank 3
        op = LinearOp(src, tgt, matrix=m)
        ker, ran = kernel_range(op)
        ker_adj, ran_adj = kernel_range(adjoint(op))
        assert ker.dim + ran_adj.dim == src.dim
        assert ran.dim == ran_adj.dim == 3

    def test_kernel_perp_range_of_adjoint(self):
        # cross Gram between ker(A) and ran(A*) vanishes
        src = random_space(6, 23)
        tgt = random_space(6, 24)
        rng = np.random.default_rng(25)
        m = rng.standard_normal((6, 2)) @ rng.standard_normal((2, 6))
        op = LinearOp(src, tgt, matrix=m)
        ker, _ = kernel_range(op)
        _, ran_adj = kernel_range(adjoint(op))
        g = np.array([[src.inner(ker.basis[:, i], ran_adj.basis[:, j])
                       for j in range(ran_adj.dim)] for i in range(ker.dim)])
        assert np.abs(g).max() < 1e-8


class TestCoercivity:
    def test_scalar_multiple_of_identity(self):
        space = HilbertSpace(4)
        op = LinearOp(space, space, matrix=2.0 * np.eye(4))
        rep = coercivity_check(op, 2.0, 2.0)
        assert np.isclose(rep.re_min, 2.0)
        assert np.isclose(rep.re_inv_min, 0.5)
        assert rep.passed

    def test_rotation_like_2x2(self):
        # T = [[1,-1],[1,1]]: Re T = I, Re T^{-1} = I/2, so T is in F(1, 2)
        space = HilbertSpace(2)
        op = LinearOp(space, space, matrix=np.array([[1.0, -1.0], [1.0, 1.0]]))
        rep = coercivity_check(op, 1.0, 2.0)
        assert np.isclose(rep.re_min, 1.0)
        assert np.isclose(rep.re_inv_min, 0.5)
        assert rep.passed

    def test_failing_alpha(self):
        # eigenvalue oracle: symmetric matrix with lambda_min(Re T) = 0.3
        rng = np.random.default_rng(30)
        q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
        m = q @ np.diag([0.3, 1.0, 2.0, 3.0, 4.0]) @ q.T
        space = HilbertSpace(5)
        op = LinearOp(space, space, matrix=m)
        rep = coercivity_check(op, 1.0, 10.0)
        assert np.isclose(rep.re_min, 0.3)
        assert not rep.alpha_ok

    def test_singular_flagged(self):
        space = HilbertSpace(3)
        op = LinearOp(space, space, matrix=np.diag([1.0, 1.0, 0.0]))
        rep = coercivity_check(op, 0.5, 2.0)
        assert rep.singular
        assert not rep.beta_ok

    def test_inverse_symmetry(self):
        # T in F(alpha, beta)  =>  T^{-1} in F(1/beta, 1/alpha)
        rng = np.random.default_rng(31)
        for trial in range(20):
            n = 6
            m = rng.standard_normal((n, n))
            m = 0.5 * (m + m.T) + n * np.eye(n) + 0.3 * (m - m.T)
            space = random_space(n, 100 + trial)
            op = LinearOp(space, space, matrix=m)
            alpha = coercivity_check(op, 1e-6, 1e6).re_min
            beta = 1.0 / coercivity_check(op, 1e-6, 1e6).re_inv_min
            assert coercivity_check(op, alpha - 1e-9, beta + 1e-9).passed
            inv = LinearOp(space, space, matrix=np.linalg.inv(m))
            assert coercivity_check(inv, 1.0 / beta - 1e-9, 1.0 / alpha + 1e-9).passed

    def test_weighted_pencil_matches_rayleigh_sampling(self):
        # independent oracle: minimize the Rayleigh quotient by dense search
        space = random_space(5, 32)
        rng = np.random.default_rng(33)
        m = rng.standard_normal((5, 5)) + 3 * np.eye(5)
        op = LinearOp(space, space, matrix=m)
        rep = coercivity_check(op, 1e-9, 1e9)
        samples = []
        for _ in range(2000):
            x = rng.standard_normal(5)
            samples.append(space.inner(x, m @ x).real / space.inner(x, x).real)
        assert rep.re_min <= min(samples) + 1e-9


class TestSubspace:
    def test_explicit_orthonormality_enforced(self):
        space = random_space(5, 40)
        bad = np.eye(5)[:, :2]  # not W-orthonormal for non-unit weight
        with pytest.raises(ShapeError):
            Subspace(space, basis=bad)
        sub = Subspace.from_span(space, [bad[:, 0], bad[:, 1]])
        assert sub.dim == 2

    def test_projection_idempotent(self):
        space = random_space(8, 41)
        rng = np.random.default_rng(42)
        sub = Subspace.from_span(space, [rng.standard_normal(8) for _ in range(3)])
        v = rng.standard_normal(8)
        p = sub.project(v)
        np.testing.assert_allclose(sub.project(p), p, atol=1e-12)
        # residual orthogonal to the subspace
        assert abs(space.inner(p, v - p)) < 1e-12

    def test_implicit_generator_matches_explicit(self):
        import scipy.sparse as sp

        space = random_space(9, 43)
        rng = np.random.default_rng(44)
        g = rng.standard_normal((9, 4))
        sub_e = Subspace.from_span(space, [g[:, j] for j in range(4)])
        sub_i = Subspace.from_generator(space, sp.csr_matrix(g))
        v = rng.standard_normal(9)
        np.testing.assert_allclose(sub_i.project(v), sub_e.project(v), atol=1e-10)

    def test_complement(self):
        space = random_space(6, 45)
        rng = np.random.default_rng(46)
        sub = Subspace.from_span(space, [rng.standard_normal(6) for _ in range(2)])
        comp = Subspace.complement(sub)
        assert comp.dim == 4
        v = rng.standard_normal(6)
        np.testing.assert_allclose(sub.project(v) + comp.project(v), v, atol=1e-12)


class TestProbeSet:
    def test_unit_norm_enforced(self):
        space = HilbertSpace(4)
        with pytest.raises(ShapeError):
            ProbeSet(space, [np.array([2.0, 0, 0, 0])])
        with pytest.raises(ShapeError):
            ProbeSet(space, [])

    def test_random_reproducible(self):
        space = random_space(6, 50)
        a = ProbeSet.random(space, count=5, seed=7)
        b = ProbeSet.random(space, count=5, seed=7)
        for va, vb in zip(a, b):
            np.testing.assert_array_equal(va, vb)


class TestGaps:
    def setup_method(self):
        self.space = random_space(12, 60)
        self.probes = ProbeSet.random(self.space, count=6, seed=61)

    def _op(self, m):
        return LinearOp(self.space, self.space, matrix=m)

    def test_identical_operators(self):
        rng = np.random.default_rng(62)
        m = rng.standard_normal((12, 12))
        assert wot_gap(self._op(m), self._op(m.copy()), self.probes, self.probes) == 0.0
        assert strong_gap(self._op(m), self._op(m.copy()), self.probes) == 0.0

    def test_rank_one_difference(self):
        # s - t = phi1 <psi1, .> with unit probes: gap exactly 1
        phi = self.probes.vectors[0]
        psi = self.probes.vectors[1]
        w_psi = self.space.apply_weight(psi)
        d = np.outer(phi, np.conj(w_psi))
        s = self._op(np.eye(12) + d)
        t = self._op(np.eye(12))
        assert np.isclose(wot_gap(s, t, self.probes, self.probes), 1.0, atol=1e-12)
        assert np.isclose(strong_gap(s, t, self.probes), 1.0, atol=1e-12)

    def test_pseudo_metric(self):
        rng = np.random.default_rng(63)
        ops = [self._op(rng.standard_normal((12, 12))) for _ in range(3)]
        d01 = wot_gap(ops[0], ops[1], self.probes, self.probes)
        d10 = wot_gap(ops[1], ops[0], self.probes, self.probes)
        d02 = wot_gap(ops[0], ops[2], self.probes, self.probes)
        d12 = wot_gap(ops[1], ops[2], self.probes, self.probes)
        assert np.isclose(d01, d10, rtol=1e-12)
        assert d02 <= d01 + d12 + 1e-12

    def test_oscillatory_multiplier_weak_but_not_strong(self):
        # quadrature oracle: multiplication by sin(2 pi n x) pairs to zero
        # against smooth probes while its image norms stay order one
        m = 4096
        h = 1.0 / m
        x = (np.arange(m) + 0.5) * h
        space = HilbertSpace(m, weight=np.full(m, h))
        modes = [np.sqrt(2) * np.sin((k + 1) * np.pi * x) for k in range(5)]
        probes = ProbeSet.from_vectors(space, modes)
        zero = LinearOp(space, space, matrix=np.zeros((2, 2)) if False else None,
                        apply=lambda v: 0 * v, rmatvec=lambda v: 0 * v)
        gaps_w, gaps_s = [], []
        for n in (4, 16, 64):
            mult = LinearOp(space, space, apply=lambda v, n=n: np.sin(2 * np.pi * n * x) * v,
                            rmatvec=lambda v, n=n: np.sin(2 * np.pi * n * x) * v)
            gaps_w.append(wot_gap(mult, zero, probes, probes))
            gaps_s.append(strong_gap(mult, zero, probes))
        assert gaps_w[0] > gaps_w[1] > gaps_w[2]
        assert gaps_w[2] < 5e-3
        assert all(g > 0.5 for g in gaps_s)

    def test_dimension_mismatch(self):
        other = HilbertSpace(5)
        op5 = LinearOp(other, other, matrix=np.eye(5))
        op12 = self._op(np.eye(12))
        with pytest.raises(ShapeError):
            wot_gap(op5, op12, self.probes, self.probes)


class TestClosureSurrogate:
    def test_coercivity_closed_under_probe_limits(self):
        # if every T_n passes and wot gaps against T vanish with spanning
        # probes, T passes up to 1e-8
        space = random_space(6, 70)
        rng = np.random.default_rng(71)
        base = rng.standard_normal((6, 6))
        base = 0.5 * (base + base.T) + 6 * np.eye(6)
        t_lim = LinearOp(space, space, matrix=base)
        alpha = coercivity_check(t_lim, 1e-9, 1e9).re_min - 1e-12
        beta = 1.0 / coercivity_check(t_lim, 1e-9, 1e9).re_inv_min + 1e-12
        probes = ProbeSet.random(space, count=8, seed=72)  # spans the space w.p. 1
        pert = rng.standard_normal((6, 6))
        pert = 0.1 * (pert + pert.T)
        gaps = []
        for n in (1, 2, 4, 8, 16):
            tn = LinearOp(space, space, matrix=base + pert / n)
            gaps.append(wot_gap(tn, t_lim, probes, probes))
        assert gaps[-1] < gaps[0]
        assert coercivity_check(t_lim, alpha, beta, tol=1e-8).passed


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=2, max_value=8), st.integers(min_value=0, max_value=10**6))
def test_adjoint_involution_property(dim, seed):
    rng = np.random.default_rng(seed)
    space = HilbertSpace(dim, weight=rng.uniform(0.5, 2.0, size=dim))
    m = rng.standard_normal((dim, dim))
    op = LinearOp(space, space, matrix=m)
    np.testing.assert_allclose(adjoint(adjoint(op)).to_dense(), m, atol=1e-11)
