"""Coefficient oscillation families, predicted effective limits (means,
laminates, periodic cell problems), and the two-parameter convergence
experiments.

The convergence of oscillating problems toward their effective limit is a
statement about the oscillation index n alone; the discretisation enters as a
second parameter. Experiments therefore couple the mesh to the oscillation
through a cells-per-period rule, and weak convergence is measured exclusively
through pairings with fixed smooth probes, never through norms of differences
-- that distinction is exactly where weak and strong convergence part ways at
desk scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.integrate

from .elliptic import (
    CoefficientField,
    GridDomain,
    RHSFunctional,
    build_grad,
    scalar_probes,
    solve_elliptic,
    unknown_budget,
    vector_probes,
)
from .errors import CoercivityError, MeshRuleViolation, ShapeError
from .hilbert import LinearOp, ProbeSet, coercivity_check
from .schur import Decomposition, schur_maps, tau_gap

__all__ = [
    "CoefficientSequence",
    "MeshRule",
    "ExperimentReport",
    "laminate_limit",
    "modulated_laminate_limit",
    "modulated_candidate",
    "cell_problem",
    "homogenized_tensor",
    "hconvergence_experiment",
    "qdind_check",
    "log_gap_correlation",
    "schur_equiv_check",
    "adjoint_symmetry_check",
    "g0_decomposition",
    "g0_probes",
    "complement_probes",
]


class CoefficientSequence:
    """n-indexed oscillation family producing a coefficient field per mesh.

    Kinds: ``laminate_x1`` (profile of the first coordinate times the
    identity), ``periodic_rescale`` (a unit-cell field evaluated at n times
    the position), and ``explicit`` (arbitrary generator). Bounds are uniform
    in n and every generated field is checked against them.
    """

    def __init__(self, kind, generator, bounds, profile=None, cell_fn=None):
        self.kind = kind
        self._generator = generator
        self.bounds = bounds
        self.profile = profile
        self.cell_fn = cell_fn

    @classmethod
    def laminate(cls, profile, bounds):
        """a_n(x) = profile(n x_1 mod 1) times the identity."""

        def gen(n, domain):
            def fn(points):
                return profile((n * points[:, 0]) % 1.0)

            return CoefficientField.from_function(domain, fn, bounds=bounds)

        return cls("laminate_x1", gen, bounds, profile=profile)

    @classmethod
    def laminate_modulated(cls, profile, bounds):
        """a_n(x) = profile(x_1, n x_1 mod 1) times the identity: slow
        modulation in the first coordinate on top of the fast oscillation.
        The effective limit is then a field of the slow variable (harmonic
        mean across the layers, arithmetic along), see
        :func:`modulated_laminate_limit`."""

        def gen(n, domain):
            def fn(points):
                x1 = points[:, 0]
                return profile(x1, (n * x1) % 1.0)

            return CoefficientField.from_function(domain, fn, bounds=bounds)

        seq = cls("laminate_x1_modulated", gen, bounds)
        seq.modulated_profile = profile
        return seq

    @classmethod
    def periodic(cls, cell_fn, bounds):
        """a_n(x) = A(n x mod 1) for a unit-cell field A."""

        def gen(n, domain):
            def fn(points):
                return cell_fn((n * points) % 1.0)

            return CoefficientField.from_function(domain, fn, bounds=bounds)

        return cls("periodic_rescale", gen, bounds, cell_fn=cell_fn)

    @classmethod
    def explicit(cls, generator, bounds):
        """Arbitrary family: a callable (n, domain) -> field, or a dict
        mapping each index n to such a callable."""
        if isinstance(generator, dict):
            table = dict(generator)

            def gen(n, domain):
                if n not in table:
                    raise ShapeError(f"explicit sequence has no member n={n}")
                return table[n](domain)

            return cls("explicit_list", gen, bounds)
        return cls("explicit", generator, bounds)

    def field(self, n, domain):
        f = self._generator(n, domain)
        if self.bounds is not None and not f.is_member(*self.bounds, tol=1e-10):
            raise CoercivityError(f"generated field at n={n} violates uniform bounds")
        return f

    def adjoint(self):
        base = self._generator

        def gen(n, domain):
            return base(n, domain).adjoint_field()

        return CoefficientSequence(f"{self.kind}*", gen, self.bounds)

    def predicted_laminate_limit(self, d):
        """diag(harmonic mean, arithmetic mean, ...) for laminate families."""
        if self.profile is None:
            return None
        a_h, a_m = laminate_limit(self.profile)
        return np.diag([a_h] + [a_m] * (d - 1))


def _quad_complex(fn, tol):
    re = scipy.integrate.quad(lambda x: np.real(fn(x)), 0.0, 1.0,
                              epsabs=tol, epsrel=tol, limit=400)[0]
    im = scipy.integrate.quad(lambda x: np.imag(fn(x)), 0.0, 1.0,
                              epsabs=tol, epsrel=tol, limit=400)[0]
    return re + 1j * im if abs(im) > tol else re


def laminate_limit(profile, tol=1e-10):
    """Harmonic and arithmetic means of a periodic scalar profile by adaptive
    quadrature: (1 / mean(1/a), mean(a))."""
    prof = np.vectorize(profile)
    inv_mean = _quad_complex(lambda x: 1.0 / prof(x), tol)
    mean = _quad_complex(lambda x: prof(x), tol)
    return 1.0 / inv_mean, mean


def modulated_laminate_limit(profile, tol=1e-10):
    """Slow-variable mean functions of a modulated profile(x, y): returns
    callables (alpha_h, alpha_m) with the fast variable integrated out at
    each requested slow position."""

    def a_h(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.array([
            1.0 / _quad_complex(lambda y, xx=xx: 1.0 / profile(xx, y), tol)
            for xx in x
        ])

    def a_m(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.array([
            _quad_complex(lambda y, xx=xx: profile(xx, y), tol) for xx in x
        ])

    return a_h, a_m


def modulated_candidate(profile, d, bounds=None, tol=1e-8):
    """Candidate effective field for a modulated laminate: per-cell
    diag(alpha_h(x1), alpha_m(x1), ...) as a domain -> field factory."""
    a_h, a_m = modulated_laminate_limit(profile, tol)

    def factory(domain):
        mids = domain.cell_midpoints()
        x1 = mids[:, 0]
        uniq, inverse = np.unique(x1, return_inverse=True)
        h_vals = a_h(uniq)[inverse]
        m_vals = a_m(uniq)[inverse]
        vals = np.zeros((domain.n_cells, d, d), dtype=h_vals.dtype)
        vals[:, 0, 0] = h_vals
        for c in range(1, d):
            vals[:, c, c] = m_vals
        return CoefficientField(domain, vals, bounds=bounds, check=False)

    return factory


def _check_unit_cell(domain):
    for a, b in domain.extents:
        if abs(a) > 1e-14 or abs(b - 1.0) > 1e-14:
            raise ShapeError("cell problems live on the unit cell (0,1)^d")


def cell_problem(a_cell, xi, residual_tol=1e-9):
    """Periodic corrector field for direction xi: the unique v with
    v - xi in the periodic gradient range and a v weakly divergence-free.

    Returns (v, w) with v = xi + grad_# w and w the mean-free corrector
    potential; both defining residuals are verified at tolerance.
    """
    domain = a_cell.domain
    _check_unit_cell(domain)
    xi = np.asarray(xi, dtype=complex if np.iscomplexobj(a_cell.values) else float)
    if xi.shape != (domain.dim,):
        raise ShapeError(f"xi must be a {domain.dim}-vector")
    grad = build_grad(domain, "periodic")
    xi_field = np.tile(xi, grad.n_elem)
    rhs = RHSFunctional.flux(a_cell.apply(grad, xi_field))
    # G^H W a (G w + xi) = 0  <=>  K_a w = -G^H W a xi
    w, _ = solve_elliptic(domain, a_cell, _NegatedFlux(rhs), flavor="periodic")
    v = xi_field + grad.matrix @ w
    flux = a_cell.apply(grad, v)
    res = np.linalg.norm(grad.matrix.conj().T @ grad.vector_space.apply_weight(flux))
    scale = max(1.0, grad.vector_space.norm(flux))
    if res > residual_tol * scale:
        raise CoercivityError(f"cell problem residual {res:.3e} misses tolerance")
    return v, w


class _NegatedFlux:
    """Load G^H W (a xi) with the sign of the corrector equation."""

    def __init__(self, flux_rhs):
        self._rhs = flux_rhs

    def assemble(self, grad):
        return self._rhs.assemble(grad)

    def __call__(self, grad, phi):
        return self._rhs(grad, phi)


def homogenized_tensor(a_cell, coercivity_tol=1e-8):
    """Effective tensor of a periodic unit-cell coefficient: column j is the
    cell average of a v_{e_j} over the corrector fields.

    Inherits the coercivity bounds of the cell coefficient (checked when the
    cell field declares bounds)."""
    domain = a_cell.domain
    d = domain.dim
    grad = build_grad(domain, "periodic")
    cols = []
    for j in range(d):
        v, _ = cell_problem(a_cell, np.eye(d)[j])
        flux = grad.field_as_elements(a_cell.apply(grad, v))
        cols.append((grad.elem_measure[:, None] * flux).sum(axis=0) / domain.volume)
    a_hom = np.stack(cols, axis=-1)
    if a_cell.bounds is not None:
        alpha, beta = a_cell.bounds
        from .hilbert import HilbertSpace

        space = HilbertSpace(d, field="complex" if np.iscomplexobj(a_hom) else "real")
        rep = coercivity_check(LinearOp(space, space, matrix=a_hom), alpha, beta,
                               tol=coercivity_tol)
        if not rep.passed:
            raise CoercivityError(
                f"effective tensor lost the declared bounds: Re min {rep.re_min:.6g}, "
                f"Re inv min {rep.re_inv_min:.6g}"
            )
    return a_hom


@dataclass(frozen=True)
class MeshRule:
    """Couples the mesh to the oscillation: at least ``cells_per_period``
    cells per oscillation period per axis."""

    cells_per_period: int
    min_cells: int | None = None

    def __post_init__(self):
        if self.cells_per_period < 2:
            raise MeshRuleViolation("need at least 2 cells per oscillation period")

    def cells(self, n):
        base = self.min_cells if self.min_cells else self.cells_per_period
        return max(self.cells_per_period * n, base)


def default_mesh_rule(d):
    return MeshRule(32 if d == 1 else 16)


def default_n_list(d):
    return [1, 2, 4, 8, 16, 32] if d == 1 else [1, 2, 4, 8, 16]


@dataclass
class ExperimentReport:
    """Per-n experiment table with a frozen column schema.

    Rows are dicts keyed by the column names; metadata records mesh rule,
    probe seed, and the candidate limit. Fitted limits produced without a
    candidate are estimates, flagged as such, never asserted as truth.
    """

    kind: str
    columns: tuple
    rows: list
    meta: dict = field(default_factory=dict)
    estimates: dict | None = None

    def values(self, col):
        return np.array([row[col] for row in self.rows])

    def final(self, col):
        return self.rows[-1][col]

    def decreasing(self, col):
        v = self.values(col)
        return bool(v[0] >= v[-1])

    def check_decay(self, cols, tol):
        """Final value below tol and first >= last, per column."""
        msgs = []
        ok = True
        for col in cols:
            v = self.values(col)
            if not v[-1] <= tol:
                ok = False
                msgs.append(f"{col}: final {v[-1]:.3e} above {tol:.1e}")
            if len(v) > 1 and not v[0] >= v[-1]:
                ok = False
                msgs.append(f"{col}: not decreasing ({v[0]:.3e} -> {v[-1]:.3e})")
        return ok, "; ".join(msgs) if msgs else "ok"


def _as_candidate_field(candidate, domain, bounds):
    if candidate is None:
        return None
    if isinstance(candidate, CoefficientField):
        return candidate
    if callable(candidate):
        return candidate(domain)
    cand = np.asarray(candidate, dtype=complex if np.iscomplexobj(candidate) else float)
    if cand.ndim == 0:
        cand = cand[()] * np.eye(domain.dim)
    return CoefficientField.constant(domain, cand, bounds=bounds, check=False)


def _guarded_domain(n, mesh_rule, d, extents=None):
    c = mesh_rule.cells(n)
    cells = (c,) * d
    dom = GridDomain(extents, cells) if extents else GridDomain.box(cells)
    per_cell = {1: 1, 2: 2, 3: 6}[d]
    unknowns = math.prod(cells) * (per_cell * d + 1)
    if unknowns > unknown_budget():
        raise MeshRuleViolation(
            f"n={n} needs ~{unknowns} unknowns, beyond budget {unknown_budget()}"
        )
    return dom


def _aitken(values):
    """Richardson-style limit estimate from the last three values."""
    if len(values) < 3:
        return None
    p0, p1, p2 = values[-3:]
    denom = p2 - 2 * p1 + p0
    if abs(denom) < 1e-300:
        return p2
    return p2 - (p2 - p1) ** 2 / denom


def hconvergence_experiment(seq, f, candidate, n_list=None, dim=1, mesh_rule=None,
                            probe_seed=0, flavor="dirichlet", extents=None):
    """Dirichlet (or mean-free Neumann) solves along the oscillation family,
    probe-paired against the candidate effective solve on the same mesh.

    For each n, records the maximal normalized probe pairing of the solution
    difference and of the flux difference. Without a candidate, extrapolated
    pairing limits are attached as estimates.
    """
    probes_cache = {}
    rows = []
    raw_u, raw_q = [], []
    d = len(extents) if extents else dim
    n_list = n_list or default_n_list(d)
    mesh_rule = mesh_rule or default_mesh_rule(d)

    for n in n_list:
        dom = _guarded_domain(n, mesh_rule, d, extents)
        grad = build_grad(dom, flavor)
        a_n = seq.field(n, dom)
        u_n, q_n = solve_elliptic(dom, a_n, f, flavor=flavor)
        key = dom.cells
        if key not in probes_cache:
            probes_cache[key] = (
                scalar_probes(grad, seed=probe_seed),
                vector_probes(grad, seed=probe_seed),
            )
        sp_probes, vp_probes = probes_cache[key]
        cand_field = _as_candidate_field(candidate, dom, seq.bounds)
        if cand_field is not None:
            u_h, q_h = solve_elliptic(dom, cand_field, f, flavor=flavor)
            pair_u = np.array([grad.scalar_space.inner(g, u_n - u_h) for g in sp_probes])
            pair_q = np.array([grad.vector_space.inner(g, q_n - q_h) for g in vp_probes])
            den_u = max(abs(grad.scalar_space.inner(g, u_h)) for g in sp_probes)
            den_q = max(abs(grad.vector_space.inner(g, q_h)) for g in vp_probes)
            err_u = float(np.abs(pair_u).max() / max(den_u, 1e-300))
            err_q = float(np.abs(pair_q).max() / max(den_q, 1e-300))
        else:
            err_u = err_q = float("nan")
        raw_u.append(np.array([grad.scalar_space.inner(g, u_n) for g in sp_probes]))
        raw_q.append(np.array([grad.vector_space.inner(g, q_n) for g in vp_probes]))
        rows.append({
            "n": n,
            "cells_per_axis": dom.cells[0],
            "unknowns": grad.scalar_space.dim + grad.vector_space.dim,
            "err_solution": err_u,
            "err_flux": err_q,
        })
    estimates = None
    if candidate is None and len(n_list) >= 3:
        estimates = {
            "pairing_limit_solution": _aitken([r[0] for r in raw_u]),
            "pairing_limit_flux": _aitken([r[0] for r in raw_q]),
            "estimate_only": True,
        }
    return ExperimentReport(
        kind="hconv",
        columns=("n", "cells_per_axis", "unknowns", "err_solution", "err_flux"),
        rows=rows,
        meta={
            "mesh_rule": mesh_rule.cells_per_period,
            "probe_seed": probe_seed,
            "flavor": flavor,
            "candidate": None if candidate is None else np.asarray(
                candidate if not callable(candidate) else "callable", dtype=object
            ),
        },
        estimates=estimates,
    )


def g0_decomposition(grad):
    """Splitting of the vector space along the gradient range (implicit,
    generator-backed)."""
    return Decomposition.from_generator(grad.vector_space, grad.matrix)


def _projected_probes(grad, project, count, seed, keep_frac=0.05):
    """Project smooth vector modes into a subspace, keeping only those that
    retain an order-one fraction of their mass; near-annihilated modes would
    normalize into mesh-scale noise with no continuum meaning."""
    base = vector_probes(grad, kinds=("component", "gradient"), seed=seed)
    kept = []
    for v in base:
        p = project(np.asarray(v))
        if grad.vector_space.norm(p) >= keep_frac:
            kept.append(p)
        if len(kept) == count:
            break
    return ProbeSet.from_vectors(grad.vector_space, kept, seed=seed)


def g0_probes(grad, dec=None, count=8, seed=0):
    dec = dec or g0_decomposition(grad)
    return _projected_probes(grad, dec.h0.project, count, seed)


def complement_probes(grad, dec=None, count=8, seed=0):
    dec = dec or g0_decomposition(grad)
    return _projected_probes(grad, dec.h1.project, count, seed)


def qdind_check(seq, n_list, candidate=None, mesh_rule=None, probe_seed=0):
    """One-dimensional equivalence tracker: the inverse-multiplier gaps and
    the two gradient-range compression gaps must vanish together.

    Gaps are measured on one fixed mesh resolving the finest oscillation.
    The compressed inverses go through the closed 1-d formula, so this route
    is independent of the generic projected solver.
    """
    from .elliptic import projected_inverse_1d

    mesh_rule = mesh_rule or default_mesh_rule(1)
    n_max = max(n_list)
    dom = _guarded_domain(n_max, mesh_rule, 1)
    grad = build_grad(dom, "dirichlet")
    space = grad.vector_space
    mids = grad.elem_mid
    if candidate is None:
        lim = seq.predicted_laminate_limit(1)
        if lim is None:
            raise ShapeError("need a candidate limit for non-laminate sequences")
        candidate = float(np.real(lim[0, 0])) if not np.iscomplexobj(lim) else lim[0, 0]

    base = vector_probes(grad, seed=probe_seed)
    mean_free = ProbeSet.from_vectors(
        space, [np.asarray(v) - grad.elem_measure @ np.asarray(v) / dom.volume
                for v in base], seed=probe_seed)
    full = base

    rows = []
    for n in n_list:
        a_vals = seq.field(n, dom).values[:, 0, 0][grad.elem_cell]
        inv_gap = 0.0
        for psi in full:
            diff = psi / a_vals - psi / candidate
            for phi in full:
                inv_gap = max(inv_gap, abs(space.inner(phi, diff)))
        proj_gap = 0.0
        flux_gap = 0.0
        for psi in mean_free:
            compressed = projected_inverse_1d(a_vals, np.asarray(psi))
            limit_compressed = np.asarray(psi) / candidate
            limit_compressed = limit_compressed - grad.elem_measure @ limit_compressed / dom.volume
            dproj = compressed - limit_compressed
            dflux = a_vals * compressed - candidate * limit_compressed
            for phi in mean_free:
                proj_gap = max(proj_gap, abs(space.inner(phi, dproj)))
            for phi in full:
                flux_gap = max(flux_gap, abs(space.inner(phi, dflux)))
        rows.append({
            "n": n,
            "cells": dom.cells[0],
            "gap_inverse": inv_gap,
            "gap_projected": proj_gap,
            "gap_flux": flux_gap,
        })
    return ExperimentReport(
        kind="qdind",
        columns=("n", "cells", "gap_inverse", "gap_projected", "gap_flux"),
        rows=rows,
        meta={"candidate": candidate, "probe_seed": probe_seed,
              "mesh_rule": mesh_rule.cells_per_period},
    )


def log_gap_correlation(report, col_a, col_b):
    """Correlation coefficient of log-gaps across two report columns."""
    a = np.log(np.maximum(report.values(col_a), 1e-300))
    b = np.log(np.maximum(report.values(col_b), 1e-300))
    if a.std() == 0 or b.std() == 0:
        return 1.0
    return float(np.corrcoef(a, b)[0, 1])


def schur_equiv_check(seq, n_list=None, candidate=None, dim=1, mesh_rule=None,
                      probe_seed=0, f=None, extents=None):
    """Per-n table of the four block-map gaps on the gradient-range splitting
    against the candidate limit, next to the solution-operator pairing gap of
    the corresponding variational problems; the two families must decay
    jointly."""
    d = len(extents) if extents else dim
    n_list = n_list or default_n_list(d)
    if candidate is None:
        lim = seq.predicted_laminate_limit(d)
        if lim is None:
            raise ShapeError("need a candidate limit for non-laminate sequences")
        candidate = lim
    mesh_rule = mesh_rule or default_mesh_rule(d)
    if f is None:
        f = RHSFunctional.density(lambda p: np.ones(len(p)))
    rows = []
    for n in n_list:
        dom = _guarded_domain(n, mesh_rule, d, extents)
        grad = build_grad(dom, "dirichlet")
        dec = g0_decomposition(grad)
        p0 = g0_probes(grad, dec, seed=probe_seed)
        p1 = complement_probes(grad, dec, seed=probe_seed)
        a_n = seq.field(n, dom)
        cand_field = _as_candidate_field(candidate, dom, seq.bounds)
        op_n = a_n.operator(grad)
        op_h = cand_field.operator(grad)
        maps_n = schur_maps(op_n, dec, check_membership=False)
        maps_h = schur_maps(op_h, dec, check_membership=False)
        g00, g01, g10, gs = tau_gap(maps_n, maps_h, dec, p0, p1)
        u_n, _ = solve_elliptic(dom, a_n, f)
        u_h, _ = solve_elliptic(dom, cand_field, f)
        spr = scalar_probes(grad, seed=probe_seed)
        den = max(abs(grad.scalar_space.inner(g, u_h)) for g in spr)
        gap_sol = max(abs(grad.scalar_space.inner(g, u_n - u_h)) for g in spr) / den
        rows.append({
            "n": n,
            "cells_per_axis": dom.cells[0],
            "gap_m00inv": g00,
            "gap_m01": g01,
            "gap_m10": g10,
            "gap_ms": gs,
            "gap_solution": float(gap_sol),
        })
    return ExperimentReport(
        kind="schur",
        columns=("n", "cells_per_axis", "gap_m00inv", "gap_m01", "gap_m10",
                 "gap_ms", "gap_solution"),
        rows=rows,
        meta={"probe_seed": probe_seed, "mesh_rule": mesh_rule.cells_per_period},
    )


def adjoint_symmetry_check(seq, n_list, candidate, **kwargs):
    """Run the block-map tracker on the adjoint family against the adjoint
    candidate; decay of the primal run must be matched by the adjoint run."""
    primal = schur_equiv_check(seq, n_list, candidate, **kwargs)
    cand_adj = np.conj(np.asarray(candidate)).T if not callable(candidate) else None
    if cand_adj is None:
        raise ShapeError("adjoint check needs an explicit candidate matrix")
    adj = schur_equiv_check(seq.adjoint(), n_list, cand_adj, **kwargs)
    return primal, adj
