"""Tests for oscillation families, effective limits, and the convergence
experiments."""

import numpy as np
import pytest
import scipy.integrate

from homlab.elliptic import CoefficientField, GridDomain, RHSFunctional, build_grad
from homlab.errors import CoercivityError, MeshRuleViolation, ShapeError
from homlab.homogenize import (
    CoefficientSequence,
    MeshRule,
    adjoint_symmetry_check,
    cell_problem,
    hconvergence_experiment,
    homogenized_tensor,
    laminate_limit,
    log_gap_correlation,
    qdind_check,
    schur_equiv_check,
)

TWO_PHASE = lambda y: np.where(np.asarray(y) < 0.5, 1.0, 4.0)
SIN_PROFILE = lambda y: 2.0 + np.sin(2 * np.pi * np.asarray(y))


def checkerboard(points):
    p = np.atleast_2d(points)
    return np.where(((np.floor(2 * p[:, 0]) + np.floor(2 * p[:, 1])) % 2) == 0, 1.0, 4.0)


class TestLaminateLimit:
    def test_two_phase_means(self):
        a_h, a_m = laminate_limit(TWO_PHASE)
        assert np.isclose(a_h, 1.6, atol=1e-9)
        assert np.isclose(a_m, 2.5, atol=1e-9)

    def test_constant(self):
        a_h, a_m = laminate_limit(lambda y: 3.3 + 0 * np.asarray(y))
        assert np.isclose(a_h, 3.3) and np.isclose(a_m, 3.3)

    def test_sin_profile_quadrature_oracle(self):
        # oracle: direct quadrature of 1/(2 + sin) equals 1/sqrt(3)
        val = scipy.integrate.quad(lambda x: 1.0 / (2.0 + np.sin(2 * np.pi * x)),
                                   0, 1, epsabs=1e-12)[0]
        assert np.isclose(val, 1.0 / np.sqrt(3.0), atol=1e-10)
        a_h, a_m = laminate_limit(SIN_PROFILE)
        assert np.isclose(a_h, np.sqrt(3.0), atol=1e-9)
        assert np.isclose(a_m, 2.0, atol=1e-9)

    def test_modulated_profile_closed_form(self):
        # oracle: the fast average of 1/(c + a sin) is 1/sqrt(c^2 - a^2)
        from homlab.homogenize import modulated_laminate_limit

        profile = lambda x, y: (2.0 + x) + 0.8 * np.sin(2 * np.pi * y)
        a_h, a_m = modulated_laminate_limit(profile)
        xs = np.array([0.0, 0.3, 0.9])
        np.testing.assert_allclose(a_h(xs), np.sqrt((2.0 + xs) ** 2 - 0.64),
                                   atol=1e-9)
        np.testing.assert_allclose(a_m(xs), 2.0 + xs, atol=1e-9)

    def test_mean_inequality(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            c0, c1 = rng.uniform(0.5, 4.0, size=2)
            k = int(rng.integers(1, 4))
            prof = lambda y: c0 + c1 * 0.2 * np.sin(2 * np.pi * k * np.asarray(y)) ** 2
            a_h, a_m = laminate_limit(prof)
            assert a_h <= a_m + 1e-12
        a_h, a_m = laminate_limit(lambda y: 2.0 + 0 * np.asarray(y))
        assert abs(a_h - a_m) < 1e-12


class TestCellProblem:
    def test_constant_coefficient_trivial_corrector(self):
        dom = GridDomain.box((8, 8))
        a = CoefficientField.constant(dom, np.array([[2.0, 0.3], [0.3, 1.5]]),
                                      bounds=(1.0, 3.0))
        v, w = cell_problem(a, np.array([1.0, 0.0]))
        assert np.abs(w).max() < 1e-12
        g = build_grad(dom, "periodic")
        np.testing.assert_allclose(g.field_as_elements(v)[:, 0], 1.0, atol=1e-12)

    def test_laminate_corrector_matches_1d_closed_form(self):
        # 1-d oracle: for a laminate the corrected field is a_h / a(x1) in the
        # first component and the corrector is independent of x2
        m = 64
        dom = GridDomain.box((m, m))
        a = CoefficientField.from_function(dom, lambda p: TWO_PHASE(p[:, 0] % 1.0),
                                           bounds=(0.5, 5.0))
        v, w = cell_problem(a, np.array([1.0, 0.0]))
        g = build_grad(dom, "periodic")
        ve = g.field_as_elements(v)
        a_h, _ = laminate_limit(TWO_PHASE)
        expected = a_h / TWO_PHASE(g.elem_mid[:, 0] % 1.0)
        np.testing.assert_allclose(ve[:, 0], expected, atol=1e-9)
        np.testing.assert_allclose(ve[:, 1], 0.0, atol=1e-9)
        # corrector potential constant along x2: nodal variance per x1-slice
        w_grid = w.reshape(m, m)
        assert np.abs(w_grid - w_grid[:, :1]).max() < 1e-9

    def test_checkerboard_flux_residual(self):
        dom = GridDomain.box((32, 32))
        a = CoefficientField.from_function(dom, checkerboard, bounds=(0.5, 5.0))
        v, _ = cell_problem(a, np.array([0.0, 1.0]))
        g = build_grad(dom, "periodic")
        flux = a.apply(g, v)
        res = np.linalg.norm(g.matrix.conj().T @ g.vector_space.apply_weight(flux))
        assert res < 1e-9

    def test_wrong_domain_rejected(self):
        dom = GridDomain.box((8,), lo=(0.0,), hi=(2.0,))
        a = CoefficientField.constant(dom, 1.0, bounds=(0.5, 2.0))
        with pytest.raises(ShapeError):
            cell_problem(a, np.array([1.0]))


class TestHomogenizedTensor:
    def test_constant(self):
        dom = GridDomain.box((8, 8))
        mat = np.array([[2.0, 0.4], [0.4, 3.0]])
        a = CoefficientField.constant(dom, mat, bounds=(1.0, 4.0))
        np.testing.assert_allclose(homogenized_tensor(a), mat, atol=1e-12)

    def test_2d_laminate(self):
        dom = GridDomain.box((64, 64))
        a = CoefficientField.from_function(dom, lambda p: TWO_PHASE(p[:, 0] % 1.0),
                                           bounds=(0.5, 5.0))
        a_hom = homogenized_tensor(a)
        np.testing.assert_allclose(a_hom, np.diag([1.6, 2.5]), atol=0.016)

    def test_checkerboard_vs_duality_closed_form(self):
        # closed-form oracle: the symmetric two-phase checkerboard homogenizes
        # to sqrt(alpha beta) times the identity
        dom = GridDomain.box((128, 128))
        a = CoefficientField.from_function(dom, checkerboard, bounds=(0.5, 5.0))
        a_hom = homogenized_tensor(a)
        np.testing.assert_allclose(a_hom, 2.0 * np.eye(2), atol=0.04 * 2.0)

    def test_symmetry_inheritance(self):
        dom = GridDomain.box((16, 16))
        a = CoefficientField.from_function(dom, checkerboard, bounds=(0.5, 5.0))
        a_hom = homogenized_tensor(a)
        assert np.abs(a_hom - a_hom.T).max() < 1e-8

    def test_coercivity_inheritance(self):
        from homlab.hilbert import HilbertSpace, LinearOp, coercivity_check

        dom = GridDomain.box((32, 32))
        a = CoefficientField.from_function(dom, checkerboard, bounds=(1.0, 4.0))
        a_hom = homogenized_tensor(a)
        space = HilbertSpace(2)
        rep = coercivity_check(LinearOp(space, space, matrix=a_hom), 1.0, 4.0, tol=1e-8)
        assert rep.passed

    def test_refinement_convergence_smooth_profile(self):
        errs = []
        for m in (16, 32, 64):
            dom = GridDomain.box((m, m))
            a = CoefficientField.from_function(dom, lambda p: SIN_PROFILE(p[:, 0] % 1.0),
                                               bounds=(0.9, 3.1))
            a_hom = homogenized_tensor(a)
            errs.append(abs(a_hom[0, 0] - np.sqrt(3.0)))
        assert errs[0] > errs[-1]
        assert errs[-1] < 1e-3


class TestCoefficientSequence:
    def test_bounds_enforced(self):
        seq = CoefficientSequence.laminate(SIN_PROFILE, bounds=(2.5, 3.0))
        with pytest.raises(CoercivityError):
            seq.field(2, GridDomain.interval(0, 1, 64))

    def test_predicted_limit(self):
        seq = CoefficientSequence.laminate(TWO_PHASE, bounds=(0.5, 5.0))
        np.testing.assert_allclose(seq.predicted_laminate_limit(2),
                                   np.diag([1.6, 2.5]), atol=1e-9)

    def test_periodic_kind(self):
        seq = CoefficientSequence.periodic(checkerboard, bounds=(0.5, 5.0))
        f = seq.field(2, GridDomain.box((16, 16)))
        assert f.values.shape == (256, 2, 2)

    def test_adjoint_sequence(self):
        prof = lambda y: 2.0 + 0.3j + np.sin(2 * np.pi * np.asarray(y))
        seq = CoefficientSequence.laminate(prof, bounds=(0.9, 4.0))
        f = seq.field(2, GridDomain.interval(0, 1, 32))
        fa = seq.adjoint().field(2, GridDomain.interval(0, 1, 32))
        np.testing.assert_allclose(fa.values, f.values.conj().transpose(0, 2, 1))

    def test_explicit_list_kind(self):
        table = {
            1: lambda dom: CoefficientField.constant(dom, 1.0, bounds=(0.5, 2.0)),
            2: lambda dom: CoefficientField.constant(dom, 1.5, bounds=(0.5, 2.0)),
        }
        seq = CoefficientSequence.explicit(table, bounds=(0.5, 2.0))
        dom = GridDomain.interval(0, 1, 8)
        assert seq.field(2, dom).values[0, 0, 0] == 1.5
        with pytest.raises(ShapeError):
            seq.field(3, dom)


class TestHConvergence:
    def test_constant_sequence_at_solver_tolerance(self):
        seq = CoefficientSequence.explicit(
            lambda n, dom: CoefficientField.constant(dom, 2.0, bounds=(1.0, 3.0)),
            bounds=(1.0, 3.0),
        )
        f = RHSFunctional.density(lambda p: np.ones(len(p)))
        rep = hconvergence_experiment(seq, f, 2.0, [1, 2, 4], mesh_rule=MeshRule(16))
        assert rep.values("err_solution").max() < 1e-9
        assert rep.values("err_flux").max() < 1e-9

    def test_1d_sin_family(self):
        seq = CoefficientSequence.laminate(SIN_PROFILE, bounds=(1.0, 3.0))
        f = RHSFunctional.density(lambda p: np.ones(len(p)))
        rep = hconvergence_experiment(seq, f, np.sqrt(3.0), [1, 2, 4, 8, 16],
                                      mesh_rule=MeshRule(32))
        ok, msg = rep.check_decay(("err_solution", "err_flux"), 0.05)
        assert ok, msg

    def test_wrong_candidate_detected(self):
        # arithmetic mean is NOT the 1-d limit; errors must stall high
        seq = CoefficientSequence.laminate(SIN_PROFILE, bounds=(1.0, 3.0))
        f = RHSFunctional.density(lambda p: np.ones(len(p)))
        rep = hconvergence_experiment(seq, f, 2.0, [4, 8, 16], mesh_rule=MeshRule(32))
        assert rep.final("err_solution") > 0.05

    def test_budget_guard(self, monkeypatch):
        monkeypatch.setenv("HOMLAB_BUDGET", "10000")
        seq = CoefficientSequence.laminate(SIN_PROFILE, bounds=(1.0, 3.0))
        f = RHSFunctional.density(lambda p: np.ones(len(p)))
        with pytest.raises(MeshRuleViolation):
            hconvergence_experiment(seq, f, np.sqrt(3.0), [512], mesh_rule=MeshRule(32))

    def test_fitted_limit_is_estimate(self):
        seq = CoefficientSequence.laminate(SIN_PROFILE, bounds=(1.0, 3.0))
        f = RHSFunctional.density(lambda p: np.ones(len(p)))
        rep = hconvergence_experiment(seq, f, None, [2, 4, 8], mesh_rule=MeshRule(32))
        assert rep.estimates is not None
        assert rep.estimates["estimate_only"] is True
        assert np.isnan(rep.final("err_solution"))

    def test_modulated_laminate_converges_to_field_limit(self):
        # slow modulation on top of the oscillation: the limit is a genuine
        # coefficient field of the slow variable
        from homlab.homogenize import modulated_candidate

        profile = lambda x, y: (2.0 + x) + 0.8 * np.sin(2 * np.pi * y)
        seq = CoefficientSequence.laminate_modulated(profile, bounds=(1.1, 3.9))
        f = RHSFunctional.density(lambda p: np.ones(len(p)))
        cand = modulated_candidate(profile, d=1)
        rep = hconvergence_experiment(seq, f, cand, [2, 4, 8, 16],
                                      mesh_rule=MeshRule(32))
        ok, msg = rep.check_decay(("err_solution",), 0.03)
        assert ok, msg

    def test_neumann_flavor_boundary_condition_independence(self):
        # the same family converges to the same limit under the mean-free
        # natural-boundary problem
        seq = CoefficientSequence.laminate(SIN_PROFILE, bounds=(1.0, 3.0))
        f = RHSFunctional.density(lambda p: np.cos(np.pi * p[:, 0]))
        rep = hconvergence_experiment(seq, f, np.sqrt(3.0), [2, 4, 8, 16],
                                      mesh_rule=MeshRule(32), flavor="neumann")
        ok, msg = rep.check_decay(("err_solution",), 0.05)
        assert ok, msg


class TestQdind:
    def test_constant_all_zero(self):
        seq = CoefficientSequence.explicit(
            lambda n, dom: CoefficientField.constant(dom, 2.0, bounds=(1.0, 3.0)),
            bounds=(1.0, 3.0),
        )
        rep = qdind_check(seq, [1, 2, 4], candidate=2.0, mesh_rule=MeshRule(16))
        for col in ("gap_inverse", "gap_projected", "gap_flux"):
            assert rep.values(col).max() < 1e-12

    def test_sin_family_joint_decay(self):
        seq = CoefficientSequence.laminate(SIN_PROFILE, bounds=(1.0, 3.0))
        rep = qdind_check(seq, [2, 4, 8, 16, 32], mesh_rule=MeshRule(32))
        for col in ("gap_inverse", "gap_projected", "gap_flux"):
            v = rep.values(col)
            assert v[-1] < v[0]
        assert log_gap_correlation(rep, "gap_inverse", "gap_projected") > 0.9

    def test_alternating_blocks_harmonic_limit(self):
        prof = TWO_PHASE
        seq = CoefficientSequence.laminate(prof, bounds=(0.5, 5.0))
        rep = qdind_check(seq, [2, 4, 8, 16], candidate=1.6, mesh_rule=MeshRule(32))
        assert rep.final("gap_inverse") < 5e-3
        assert rep.decreasing("gap_inverse")


class TestSchurEquiv:
    def test_constant_trivial(self):
        seq = CoefficientSequence.explicit(
            lambda n, dom: CoefficientField.constant(dom, 2.0, bounds=(1.0, 3.0)),
            bounds=(1.0, 3.0),
        )
        rep = schur_equiv_check(seq, [1, 2], 2.0, mesh_rule=MeshRule(16))
        for col in ("gap_m00inv", "gap_m01", "gap_m10", "gap_ms", "gap_solution"):
            assert rep.values(col).max() < 1e-9

    def test_1d_sin_family_joint_decay(self):
        seq = CoefficientSequence.laminate(SIN_PROFILE, bounds=(1.0, 3.0))
        rep = schur_equiv_check(seq, [2, 4, 8, 16], np.sqrt(3.0), mesh_rule=MeshRule(32))
        for col in ("gap_m00inv", "gap_m01", "gap_m10", "gap_solution"):
            v = rep.values(col)
            assert v[-1] < v[0]
        assert rep.final("gap_solution") < 0.05

    def test_2d_laminate_all_four_decay(self):
        seq = CoefficientSequence.laminate(TWO_PHASE, bounds=(0.5, 5.0))
        rep = schur_equiv_check(seq, [1, 2, 4, 8], np.diag([1.6, 2.5]), dim=2,
                                mesh_rule=MeshRule(16))
        for col in ("gap_m00inv", "gap_m01", "gap_m10", "gap_ms", "gap_solution"):
            v = rep.values(col)
            assert v[-1] < v[0], col


class TestAdjointSymmetry:
    def test_real_symmetric_identical_reports(self):
        seq = CoefficientSequence.laminate(TWO_PHASE, bounds=(0.5, 5.0))
        primal, adj = adjoint_symmetry_check(seq, [2, 4], np.array([[1.6]]),
                                             mesh_rule=MeshRule(16))
        for col in ("gap_m00inv", "gap_ms", "gap_solution"):
            np.testing.assert_allclose(primal.values(col), adj.values(col), rtol=1e-10)

    def test_complex_family(self):
        prof = lambda y: 2.0 + 0.3j + np.sin(2 * np.pi * np.asarray(y))
        seq = CoefficientSequence.laminate(prof, bounds=(0.9, 4.0))
        a_h, _ = laminate_limit(prof)
        primal, adj = adjoint_symmetry_check(seq, [2, 4, 8], np.array([[a_h]]),
                                             mesh_rule=MeshRule(32))
        assert primal.final("gap_solution") < primal.rows[0]["gap_solution"]
        assert adj.final("gap_solution") < adj.rows[0]["gap_solution"]

    def test_nonsymmetric_constant_field(self):
        mat = np.array([[2.0, 0.5], [-0.5, 2.0]])
        seq = CoefficientSequence.explicit(
            lambda n, dom: CoefficientField.constant(dom, mat, bounds=(1.0, 4.0)),
            bounds=(1.0, 4.0),
        )
        primal, adj = adjoint_symmetry_check(seq, [1, 2], mat, dim=2,
                                             mesh_rule=MeshRule(8))
        assert primal.values("gap_solution").max() < 1e-9
        assert adj.values("gap_solution").max() < 1e-9
