"""Coupled heat/elasticity block system on a grid: assembly of the two
material blocks, the congruence transform that decouples the thermal stress,
and the resolvent homogenisation experiment.

Fields are (velocity, stress, heat, heat flux) with clamped velocity and
zero-temperature boundary; the spatial block pairs two div/grad couples and
is structurally skew-adjoint. The zeroth-order material block carries the
thermo-elastic coupling through a constant coupling operator mapping the
scalar heat field into the stress slot; a unit-triangular congruence removes
the coupling exactly, block-diagonalising the material while preserving the
dissipative block and the skew-adjointness of the transformed spatial
operator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .elliptic import CoefficientField, GridDomain, build_grad
from .errors import CoercivityError
from .hilbert import HilbertSpace, LinearOp, ProbeSet
from .hilbert import _sym_lambda_min
from .homogenize import ExperimentReport, default_mesh_rule, laminate_limit
from .schur import Decomposition, schur_maps, tau_gap

__all__ = [
    "ThermoSystem",
    "assemble_thermo",
    "congruence_diagonalize",
    "thermo_homogenization_experiment",
]


def _coupling_map(grad, gamma, direction=None):
    """gamma times (vertex-average interpolation tensor a fixed unit
    direction): the constant scalar-to-stress coupling operator."""
    d = grad.d
    if direction is None:
        direction = np.zeros(d)
        direction[0] = 1.0
    direction = np.asarray(direction, dtype=float)
    direction /= np.linalg.norm(direction)
    ev = grad.elem_vertices
    n_e = grad.n_elem
    rows, cols, data = [], [], []
    for c in range(d):
        if direction[c] == 0.0:
            continue
        for v in range(ev.shape[1]):
            m = ev[:, v] >= 0
            rows.append(np.arange(n_e)[m] * d + c)
            cols.append(ev[m, v])
            data.append(np.full(m.sum(), gamma * direction[c] / ev.shape[1]))
    if not rows:
        return sp.csr_matrix((n_e * d, grad.scalar_space.dim))
    return sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n_e * d, grad.scalar_space.dim),
    )


def _scalar_samples(grad, fn, bounds, what):
    vals = np.asarray(fn(grad.node_coords)) if callable(fn) \
        else np.broadcast_to(np.asarray(fn), (grad.scalar_space.dim,))
    if bounds is not None:
        alpha, beta = bounds
        if vals.real.min() < alpha - 1e-12 or vals.real.max() > beta + 1e-12:
            raise CoercivityError(
                f"{what} in [{vals.real.min():.4g}, {vals.real.max():.4g}] "
                f"violates [{alpha}, {beta}]"
            )
    return vals


@dataclass
class ThermoSystem:
    """Assembled 4-field block system with its material blocks."""

    domain: GridDomain
    grad: object
    space: HilbertSpace
    a_matrix: sp.spmatrix
    m0: sp.spmatrix
    m1: sp.spmatrix
    lam: float
    coercivity: float
    gamma_map: sp.spmatrix
    dims: tuple

    def evolution_matrix(self):
        return (self.lam * self.m0 + self.m1 + self.a_matrix).tocsc()

    def resolvent_solver(self):
        return spla.splu(self.evolution_matrix())

    def a_op(self):
        return LinearOp(self.space, self.space, matrix=self.a_matrix)


def assemble_thermo(domain, rho0, c_field, gamma, w, kappa_field, lam,
                    bounds=None, direction=None):
    """Assemble the coupled system at frequency parameter lam.

    ``rho0`` and ``w`` are scalar fields (callable or constant) bounded by
    the declared interval; ``c_field`` and ``kappa_field`` are cell-wise
    coefficient fields; ``gamma`` is the constant coupling strength. The
    coercivity constant of lam m0 + m1 is computed and a failure reports a
    suggested minimal lam.
    """
    grad = build_grad(domain, "dirichlet")
    ns, nv = grad.scalar_space.dim, grad.vector_space.dim
    rho_vals = _scalar_samples(grad, rho0, bounds, "rho0")
    w_vals = _scalar_samples(grad, w, bounds, "w")
    if bounds is not None:
        for f, name in ((c_field, "C"), (kappa_field, "kappa")):
            if not f.is_member(*bounds):
                raise CoercivityError(f"{name} violates the declared bounds")

    g = grad.matrix
    div = -(sp.diags(1.0 / grad.scalar_space.weight)
            @ (g.conj().T @ sp.diags(grad.vector_space.weight)))
    z_ss = None
    a_matrix = sp.bmat([
        [z_ss, div, None, None],
        [g, None, None, None],
        [None, None, None, div],
        [None, None, g, None],
    ]).tocsr()

    cinv = c_field.inverse_field().operator(grad).matrix
    kinv = kappa_field.inverse_field().operator(grad).matrix
    gam = _coupling_map(grad, gamma, direction)
    gam_star = sp.diags(1.0 / grad.scalar_space.weight) \
        @ (gam.conj().T @ sp.diags(grad.vector_space.weight))
    m0 = sp.bmat([
        [sp.diags(rho_vals), None, None, None],
        [None, cinv, cinv @ gam, None],
        [None, gam_star @ cinv, sp.diags(w_vals) + gam_star @ (cinv @ gam), None],
        [None, None, None, sp.csr_matrix((nv, nv))],
    ]).tocsr()
    m1 = sp.bmat([
        [sp.csr_matrix((ns, ns)), None, None, None],
        [None, sp.csr_matrix((nv, nv)), None, None],
        [None, None, sp.csr_matrix((ns, ns)), None],
        [None, None, None, kinv],
    ]).tocsr()

    weight = np.concatenate([grad.scalar_space.weight, grad.vector_space.weight] * 2)
    space = HilbertSpace(2 * (ns + nv), weight=weight)
    c = _sym_lambda_min(space, (lam * m0 + m1).tocsr())
    if c <= 0:
        suggested = lam
        for _ in range(40):
            suggested *= 2
            if _sym_lambda_min(space, (suggested * m0 + m1).tocsr()) > 0:
                break
        raise CoercivityError(
            f"lam={lam} gives nonpositive material bound {c:.3e}; "
            f"lam >= {suggested} works"
        )
    return ThermoSystem(domain, grad, space, a_matrix, m0, m1, float(lam),
                        float(c), gam, (ns, nv, ns, nv))


def congruence_diagonalize(sys, tol=1e-9):
    """Unit lower-triangular congruence removing the thermal-stress coupling.

    Verifies S m0 S* = diag(rho0, C^{-1}, w, 0), S m1 S = m1, and that
    S A S* has the coupled-divergence block pattern while staying
    skew-adjoint. Returns (S as an operator, residual report).
    """
    ns, nv = sys.dims[0], sys.dims[1]
    n = sys.space.dim
    eye_s, eye_v = sp.eye(ns), sp.eye(nv)
    gam = sys.gamma_map
    grad = sys.grad
    gam_star = sp.diags(1.0 / grad.scalar_space.weight) \
        @ (gam.conj().T @ sp.diags(grad.vector_space.weight))
    s_mat = sp.bmat([
        [eye_s, None, None, None],
        [None, eye_v, None, None],
        [None, -gam_star, eye_s, None],
        [None, None, None, eye_v],
    ]).tocsr()
    s_star = sp.bmat([
        [eye_s, None, None, None],
        [None, eye_v, -gam, None],
        [None, None, eye_s, None],
        [None, None, None, eye_v],
    ]).tocsr()

    cinv = sys.m0[ns:ns + nv, ns:ns + nv]
    w_block = sys.m0[ns + nv:2 * ns + nv, ns + nv:2 * ns + nv] \
        - gam_star @ (cinv @ gam)
    expected_m0 = sp.bmat([
        [sys.m0[:ns, :ns], None, None, None],
        [None, cinv, None, None],
        [None, None, w_block, None],
        [None, None, None, sp.csr_matrix((nv, nv))],
    ]).tocsr()
    g = grad.matrix
    div = -(sp.diags(1.0 / grad.scalar_space.weight)
            @ (g.conj().T @ sp.diags(grad.vector_space.weight)))
    expected_a = sp.bmat([
        [None, div, -(div @ gam), sp.csr_matrix((ns, nv))],
        [g, None, None, None],
        [-(gam_star @ g), None, None, div],
        [None, None, g, None],
    ]).tocsr()

    def resid(x, y):
        diff = (x - y).tocoo()
        return float(np.abs(diff.data).max()) if diff.nnz else 0.0

    sas = (s_mat @ sys.a_matrix @ s_star).tocsr()
    # weighted adjoint of S A S* must be its negative
    wd = sp.diags(sys.space.weight)
    wd_inv = sp.diags(1.0 / sys.space.weight)
    sas_adj = (wd_inv @ (sas.conj().T @ wd)).tocsr()
    checks = {
        "m0_diagonalized": resid(s_mat @ sys.m0 @ s_star, expected_m0),
        "m1_invariant": resid(s_mat @ sys.m1 @ s_mat, sys.m1),
        "a_block_pattern": resid(sas, expected_a),
        "a_skewness": resid(sas_adj, -sas),
    }
    if max(checks.values()) > tol:
        raise CoercivityError(f"congruence identities violated: {checks}")
    return LinearOp(sys.space, sys.space, matrix=s_mat), checks


def _thermo_probes(sys, count=8, seed=0):
    grad = sys.grad
    ns, nv = sys.dims[0], sys.dims[1]
    x_n = grad.node_coords[:, 0]
    x_e = grad.elem_mid[:, 0]
    lo, hi = sys.domain.extents[0]
    span = hi - lo
    vecs = []
    for k in (1, 2, 3):
        s_mode = np.sin(k * np.pi * (x_n - lo) / span)
        v_mode = np.zeros(nv)
        v_mode[::grad.d] = np.sin(k * np.pi * (x_e - lo) / span)
        for slot in range(4):
            parts = [np.zeros(ns), np.zeros(nv), np.zeros(ns), np.zeros(nv)]
            parts[slot] = s_mode if slot % 2 == 0 else v_mode
            vecs.append(np.concatenate(parts))
    return ProbeSet.from_vectors(sys.space, vecs[:count * 2], seed=seed)


def thermo_homogenization_experiment(c_profile, kappa_profile, w_profile,
                                     rho_profile, gamma, lam, n_list,
                                     bounds, mesh_rule=None, probe_seed=0):
    """Resolvent convergence of the oscillating 1-d system toward the limit
    built from the effective coefficients: harmonic means for the two flux
    coefficients, weak-star (arithmetic) means for the two state multipliers.

    Emits the resolvent probe gap next to the four block-map gaps of the
    elastic coefficient on the gradient splitting and the plain multiplier
    gaps of the state coefficients.
    """
    mesh_rule = mesh_rule or default_mesh_rule(1)
    c_h, _ = laminate_limit(c_profile)
    k_h, _ = laminate_limit(kappa_profile)
    _, w_m = laminate_limit(w_profile)
    _, rho_m = laminate_limit(rho_profile)

    rows = []
    for n in n_list:
        m = mesh_rule.cells(n)
        dom = GridDomain.interval(0, 1, m)
        osc = lambda prof: (lambda pts: prof((n * np.atleast_2d(pts)[:, 0]) % 1.0))
        c_n = CoefficientField.from_function(dom, osc(c_profile), bounds=bounds)
        k_n = CoefficientField.from_function(dom, osc(kappa_profile), bounds=bounds)
        sys_n = assemble_thermo(dom, osc(rho_profile), c_n, gamma,
                                osc(w_profile), k_n, lam, bounds=bounds)
        c_lim = CoefficientField.constant(dom, c_h, bounds=bounds, check=False)
        k_lim = CoefficientField.constant(dom, k_h, bounds=bounds, check=False)
        sys_lim = assemble_thermo(dom, rho_m, c_lim, gamma, w_m, k_lim, lam,
                                  bounds=None)
        probes = _thermo_probes(sys_n, seed=probe_seed)
        lu_n = sys_n.resolvent_solver()
        lu_lim = sys_lim.resolvent_solver()
        gap_res = 0.0
        for psi in probes:
            d = lu_n.solve(np.asarray(psi)) - lu_lim.solve(np.asarray(psi))
            for phi in probes:
                gap_res = max(gap_res, abs(sys_n.space.inner(phi, d)))

        grad = sys_n.grad
        dec = Decomposition.from_generator(grad.vector_space, grad.matrix)
        from .homogenize import complement_probes, g0_probes

        p0 = g0_probes(grad, dec, seed=probe_seed)
        p1 = complement_probes(grad, dec, seed=probe_seed)
        op_n = c_n.operator(grad)
        op_lim = c_lim.operator(grad)
        maps_n = schur_maps(op_n, dec, check_membership=False)
        maps_lim = schur_maps(op_lim, dec, check_membership=False)
        g00, g01, g10, gs = tau_gap(maps_n, maps_lim, dec, p0, p1)

        sspace = grad.scalar_space
        smodes = [v[: sys_n.dims[0]] for v in probes if np.abs(v[: sys_n.dims[0]]).max() > 0]
        smodes = [sspace.normalize(v) for v in smodes[:4]]
        w_n = np.asarray(osc(w_profile)(grad.node_coords))
        rho_n = np.asarray(osc(rho_profile)(grad.node_coords))
        gap_w = max(abs(sspace.inner(phi, (w_n - w_m) * psi))
                    for phi in smodes for psi in smodes)
        gap_rho = max(abs(sspace.inner(phi, (rho_n - rho_m) * psi))
                      for phi in smodes for psi in smodes)
        rows.append({
            "n": n,
            "cells": m,
            "gap_resolvent": gap_res,
            "gap_c_m00inv": g00,
            "gap_c_m01": g01,
            "gap_c_m10": g10,
            "gap_c_ms": gs,
            "gap_w": gap_w,
            "gap_rho": gap_rho,
        })
    return ExperimentReport(
        kind="thermo",
        columns=("n", "cells", "gap_resolvent", "gap_c_m00inv", "gap_c_m01",
                 "gap_c_m10", "gap_c_ms", "gap_w", "gap_rho"),
        rows=rows,
        meta={"lambda": lam, "gamma": gamma, "probe_seed": probe_seed,
              "limits": {"C": c_h, "kappa": k_h, "w": w_m, "rho0": rho_m}},
    )
