"""Weighted finite-dimensional Hilbert spaces, operators, and operator-gap
diagnostics.

Every space carries an explicit quadrature weight (the discrete L2 mass
matrix, usually diagonal). Inner products are linear in the second slot and
anti-linear in the first, and all adjoints are taken with respect to the
weighted inner products: for ``A : S -> T`` the adjoint is
``A* = W_S^{-1} A^H W_T``.

Weak-operator-topology statements are operationalised against finite probe
families: :func:`wot_gap` measures ``max |<phi_i, (S-T) psi_j>|`` over a fixed
probe set, :func:`strong_gap` the corresponding maximal image-norm gap. Probe
gaps over a fixed family form a pseudo-metric, not the metric of the abstract
compactness theorems; that metric is never exhibited and is deliberately out
of scope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import MissingTranspose, ShapeError

__all__ = [
    "HilbertSpace",
    "Subspace",
    "LinearOp",
    "ProbeSet",
    "CoercivityReport",
    "adjoint",
    "kernel_range",
    "coercivity_check",
    "check_linear",
    "wot_gap",
    "strong_gap",
]

# dense fallbacks engage below these sizes; above, sparse/iterative paths
_DENSE_EIG_CUTOFF = 1200
_DENSE_SVD_CUTOFF = 5000


def _is_sparse(m):
    return sp.issparse(m)


class HilbertSpace:
    """Finite-dimensional inner-product space with a quadrature weight.

    Parameters
    ----------
    dim : int
        Dimension, strictly positive.
    weight : array_like, optional
        Either a 1-d array of strictly positive diagonal mass entries (the
        common grid-backed case) or a small dense Hermitian positive-definite
        matrix. Defaults to the identity weight.
    field : {"real", "complex"}
        Scalar field flag. Real is the default; ``Re T`` always means
        ``(T + T*)/2`` with the weighted adjoint in either mode.
    """

    def __init__(self, dim, weight=None, field="real"):
        dim = int(dim)
        if dim <= 0:
            raise ShapeError(f"space dimension must be positive, got {dim}")
        if field not in ("real", "complex"):
            raise ShapeError(f"field must be 'real' or 'complex', got {field!r}")
        self.dim = dim
        self.field = field
        if weight is None:
            weight = np.ones(dim)
        weight = np.asarray(weight)
        if weight.ndim == 1:
            if weight.shape != (dim,):
                raise ShapeError(f"diagonal weight has shape {weight.shape}, expected ({dim},)")
            if not np.all(weight.real > 0) or np.any(weight.imag != 0):
                raise ShapeError("diagonal weight entries must be strictly positive reals")
            self.weight = weight.real.astype(float)
            self._diagonal = True
            self._w_chol = None
        elif weight.ndim == 2:
            if weight.shape != (dim, dim):
                raise ShapeError(f"weight has shape {weight.shape}, expected ({dim},{dim})")
            if not np.allclose(weight, weight.conj().T, rtol=0, atol=1e-12 * max(1.0, abs(weight).max())):
                raise ShapeError("weight matrix must be Hermitian")
            evals = scipy.linalg.eigvalsh(weight)
            if evals[0] <= 0:
                raise ShapeError("weight matrix must be positive definite")
            self.weight = weight
            self._diagonal = False
            self._w_chol = scipy.linalg.cho_factor(weight)
        else:
            raise ShapeError("weight must be a vector of diagonal entries or a matrix")

    # -- basic algebra ------------------------------------------------------

    def check_member(self, v):
        v = np.asarray(v)
        if v.shape != (self.dim,):
            raise ShapeError(f"vector shape {v.shape} does not match space dim {self.dim}")
        return v

    def apply_weight(self, v):
        if self._diagonal:
            return self.weight * v
        return self.weight @ v

    def solve_weight(self, v):
        if self._diagonal:
            return v / self.weight
        return scipy.linalg.cho_solve(self._w_chol, v)

    def inner(self, x, y):
        """<x, y> = conj(x)^T W y, anti-linear in x."""
        return np.vdot(self.check_member(x), self.apply_weight(self.check_member(y)))

    def norm(self, x):
        return float(np.sqrt(max(self.inner(x, x).real, 0.0)))

    def normalize(self, x):
        n = self.norm(x)
        if n == 0.0:
            raise ShapeError("cannot normalize the zero vector")
        return x / n

    def scale_to_ortho(self, v):
        """Coordinates of v in the W-orthonormal frame (W^{1/2} v)."""
        if self._diagonal:
            return np.sqrt(self.weight) * v
        L = scipy.linalg.cholesky(self.weight, lower=True)
        return L.conj().T @ v

    def scale_from_ortho(self, v):
        """Inverse of :meth:`scale_to_ortho`."""
        if self._diagonal:
            return v / np.sqrt(self.weight)
        L = scipy.linalg.cholesky(self.weight, lower=True)
        return scipy.linalg.solve_triangular(L.conj().T, v, lower=False)

    def weight_operator(self):
        if self._diagonal:
            return sp.diags(self.weight)
        return self.weight

    def compatible(self, other):
        if self.dim != other.dim:
            return False
        if self._diagonal != other._diagonal:
            return False
        return np.allclose(self.weight, other.weight, rtol=1e-12, atol=0)

    def __repr__(self):
        kind = "diag" if self._diagonal else "dense"
        return f"HilbertSpace(dim={self.dim}, weight={kind}, field={self.field})"


class LinearOp:
    """Bounded operator between two weighted spaces.

    Backed either by a dense/sparse matrix or by a pair of applicators
    ``(apply, rmatvec)`` where ``rmatvec(y) = A^H y`` is the plain
    conjugate-transpose action (the weighted adjoint is assembled on top).
    """

    def __init__(self, source, target, matrix=None, apply=None, rmatvec=None):
        self.source = source
        self.target = target
        if matrix is not None:
            if matrix.shape != (target.dim, source.dim):
                raise ShapeError(
                    f"matrix shape {matrix.shape} does not map dim {source.dim} -> {target.dim}"
                )
            self.matrix = matrix
            self._apply = None
            self._rmatvec = None
        else:
            if apply is None:
                raise ShapeError("need a matrix or an apply callable")
            self.matrix = None
            self._apply = apply
            self._rmatvec = rmatvec

    @classmethod
    def identity(cls, space):
        return cls(space, space, matrix=sp.eye(space.dim, format="csr"))

    def __call__(self, x):
        x = self.source.check_member(x)
        if self.matrix is not None:
            return self.matrix @ x
        return self._apply(x)

    def apply(self, x):
        return self(x)

    def to_dense(self):
        if self.matrix is None:
            cols = [self(np.eye(self.source.dim)[:, j]) for j in range(self.source.dim)]
            return np.column_stack(cols)
        if _is_sparse(self.matrix):
            return self.matrix.toarray()
        return np.asarray(self.matrix)

    @property
    def square(self):
        return self.source.dim == self.target.dim

    def __add__(self, other):
        _check_same_spaces(self, other)
        if self.matrix is not None and other.matrix is not None:
            return LinearOp(self.source, self.target, matrix=self.matrix + other.matrix)
        return LinearOp(
            self.source,
            self.target,
            apply=lambda x: self(x) + other(x),
            rmatvec=_combine_rmatvec(self, other, 1.0),
        )

    def __sub__(self, other):
        _check_same_spaces(self, other)
        if self.matrix is not None and other.matrix is not None:
            return LinearOp(self.source, self.target, matrix=self.matrix - other.matrix)
        return LinearOp(
            self.source,
            self.target,
            apply=lambda x: self(x) - other(x),
            rmatvec=_combine_rmatvec(self, other, -1.0),
        )

    def _raw_rmatvec(self):
        """A^H y as a callable, or None when unavailable."""
        if self.matrix is not None:
            m = self.matrix
            return lambda y: (m.conj().T @ y)
        return self._rmatvec

    def __repr__(self):
        kind = "matrix-free" if self.matrix is None else ("sparse" if _is_sparse(self.matrix) else "dense")
        return f"LinearOp({self.source.dim} -> {self.target.dim}, {kind})"


def _check_same_spaces(a, b):
    if not (a.source.compatible(b.source) and a.target.compatible(b.target)):
        raise ShapeError("operators do not share source/target spaces")


def _combine_rmatvec(a, b, sign):
    ra = a._raw_rmatvec()
    rb = b._raw_rmatvec()
    if ra is None or rb is None:
        return None
    return lambda y: ra(y) + sign * rb(y)


def adjoint(op):
    """Weighted adjoint A* = W_s^{-1} A^H W_t.

    For all x, y: <y, A x>_target == <A* y, x>_source. Raises
    :class:`MissingTranspose` for a matrix-free operator without a transpose
    applicator.
    """
    src, tgt = op.source, op.target
    if op.matrix is not None:
        m = op.matrix
        if _is_sparse(m):
            ws_inv = sp.diags(1.0 / src.weight) if src._diagonal else None
            wt = sp.diags(tgt.weight) if tgt._diagonal else None
            if ws_inv is not None and wt is not None:
                return LinearOp(tgt, src, matrix=(ws_inv @ (m.conj().T.tocsr() @ wt)).tocsr())
            m = m.toarray()
        mh = np.asarray(m).conj().T
        if src._diagonal and tgt._diagonal:
            mat = (mh * tgt.weight[None, :]) / src.weight[:, None]
        else:
            mat = np.column_stack([src.solve_weight(mh @ tgt.apply_weight(e)) for e in np.eye(tgt.dim).T])
        return LinearOp(tgt, src, matrix=mat)
    rmv = op._raw_rmatvec()
    if rmv is None:
        raise MissingTranspose("matrix-free operator has no transpose applicator")
    fwd = op._apply
    return LinearOp(
        tgt,
        src,
        apply=lambda y: src.solve_weight(rmv(tgt.apply_weight(y))),
        rmatvec=lambda x: tgt.solve_weight(fwd(src.apply_weight(x))),
    )


class Subspace:
    """Closed subspace of a weighted space.

    Explicit mode stores a weighted-orthonormal basis matrix ``B`` with
    ``B^H W B = I`` (checked to 1e-10). Implicit mode stores an orthogonal
    projector applicator, typically ``P = G (G^H W G)^{-1} G^H W`` backed by a
    sparse factorization of an injective generator ``G``; idempotency and
    weighted self-adjointness are verified on random probes at 1e-8.
    """

    _ORTHO_TOL = 1e-10
    _PROJ_TOL = 1e-8

    def __init__(self, ambient, basis=None, project=None, dim=None, generator=None,
                 gram_solve=None, _verify=True):
        self.ambient = ambient
        self.generator = generator
        self.gram_solve = gram_solve
        if basis is not None:
            basis = np.asarray(basis)
            if basis.ndim != 2 or basis.shape[0] != ambient.dim:
                raise ShapeError(f"basis shape {basis.shape} does not fit ambient dim {ambient.dim}")
            self.basis = basis
            self.dim = basis.shape[1]
            self._project = None
            if _verify and self.dim > 0:
                g = self.gram(basis, basis)
                err = np.abs(g - np.eye(self.dim)).max()
                if err > self._ORTHO_TOL:
                    raise ShapeError(f"basis not weighted-orthonormal: deviation {err:.3e}")
        else:
            if project is None:
                raise ShapeError("subspace needs a basis or a projector applicator")
            self.basis = None
            self.dim = dim
            self._project = project
            if _verify:
                self._verify_projector()

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_span(cls, ambient, vectors, tol=1e-12):
        """Weighted-orthonormalize the span of the given column vectors."""
        m = np.column_stack([np.asarray(v) for v in vectors]) if len(vectors) else np.zeros((ambient.dim, 0))
        scaled = np.column_stack([ambient.scale_to_ortho(m[:, j]) for j in range(m.shape[1])]) if m.shape[1] else m
        if m.shape[1]:
            q, r = np.linalg.qr(scaled)
            keep = np.abs(np.diag(r)) > tol * max(1.0, np.abs(np.diag(r)).max())
            q = q[:, keep]
            basis = np.column_stack([ambient.scale_from_ortho(q[:, j]) for j in range(q.shape[1])])
        else:
            basis = np.zeros((ambient.dim, 0))
        return cls(ambient, basis=basis)

    @classmethod
    def from_generator(cls, ambient, generator):
        """Implicit subspace ran(G) for an injective sparse generator G."""
        g = generator.tocsr() if _is_sparse(generator) else sp.csr_matrix(generator)
        if g.shape[0] != ambient.dim:
            raise ShapeError(f"generator has {g.shape[0]} rows, ambient dim {ambient.dim}")
        w = ambient.weight_operator()
        gram = (g.conj().T @ (w @ g)).tocsc()
        lu = spla.splu(gram)
        real_factor = not np.iscomplexobj(gram.data)
        gh_w = (g.conj().T @ w).tocsr()

        def solve(rhs):
            if real_factor and np.iscomplexobj(rhs):
                return lu.solve(np.ascontiguousarray(rhs.real)) \
                    + 1j * lu.solve(np.ascontiguousarray(rhs.imag))
            return lu.solve(rhs)

        def project(v):
            return g @ solve(gh_w @ v)

        return cls(ambient, project=project, dim=g.shape[1], generator=g, gram_solve=solve)

    @classmethod
    def complement(cls, sub):
        """Orthogonal complement, explicit when the ambient is small."""
        amb = sub.ambient
        if sub.basis is not None and amb.dim <= _DENSE_SVD_CUTOFF:
            scaled = np.column_stack(
                [amb.scale_to_ortho(sub.basis[:, j]) for j in range(sub.dim)]
            ) if sub.dim else np.zeros((amb.dim, 0))
            q = scipy.linalg.null_space(scaled.conj().T) if sub.dim else np.eye(amb.dim)
            basis = np.column_stack([amb.scale_from_ortho(q[:, j]) for j in range(q.shape[1])]) \
                if q.shape[1] else np.zeros((amb.dim, 0))
            return cls(amb, basis=basis)
        dim = None if sub.dim is None else amb.dim - sub.dim
        return cls(amb, project=lambda v: v - sub.project(v), dim=dim)

    # -- operations ---------------------------------------------------------

    def gram(self, cols_a, cols_b):
        """Matrix of weighted inner products between two column families."""
        wa = np.column_stack([self.ambient.apply_weight(cols_a[:, j]) for j in range(cols_a.shape[1])]) \
            if cols_a.shape[1] else cols_a
        return wa.conj().T @ cols_b

    def project(self, v):
        v = self.ambient.check_member(v)
        if self.basis is not None:
            return self.basis @ self.coords(v)
        return self._project(v)

    def coords(self, v):
        """Coefficients B^H W v (explicit mode only)."""
        if self.basis is None:
            raise ShapeError("coords requires an explicit basis")
        return self.basis.conj().T @ self.ambient.apply_weight(v)

    def lift(self, c):
        if self.basis is None:
            raise ShapeError("lift requires an explicit basis")
        return self.basis @ np.asarray(c)

    def contains(self, v, tol=1e-8):
        r = v - self.project(v)
        return self.ambient.norm(r) <= tol * max(1.0, self.ambient.norm(v))

    def _verify_projector(self):
        rng = np.random.default_rng(1234)
        for _ in range(3):
            v = rng.standard_normal(self.ambient.dim)
            if self.ambient.field == "complex":
                v = v + 1j * rng.standard_normal(self.ambient.dim)
            pv = self._project(v)
            ppv = self._project(pv)
            scale = max(1.0, self.ambient.norm(v))
            if self.ambient.norm(ppv - pv) > self._PROJ_TOL * scale:
                raise ShapeError("projector is not idempotent at tolerance")
            u = rng.standard_normal(self.ambient.dim)
            asym = abs(self.ambient.inner(u, pv) - self.ambient.inner(self._project(u), v))
            if asym > self._PROJ_TOL * scale * max(1.0, self.ambient.norm(u)):
                raise ShapeError("projector is not weighted-self-adjoint at tolerance")

    def __repr__(self):
        mode = "explicit" if self.basis is not None else "implicit"
        return f"Subspace(dim={self.dim}, ambient={self.ambient.dim}, {mode})"


class ProbeSet:
    """Nonempty family of unit-norm probe vectors on one space.

    Default constructors give seeded pseudo-random unit vectors on abstract
    spaces; grid-backed modules supply smooth low-frequency probe families
    that mimic compactly supported test functions.
    """

    def __init__(self, space, vectors, seed=0):
        if len(vectors) == 0:
            raise ShapeError("probe set must be nonempty")
        self.space = space
        self.seed = seed
        vecs = []
        for v in vectors:
            v = space.check_member(np.asarray(v))
            n = space.norm(v)
            if abs(n - 1.0) > 1e-12:
                raise ShapeError(f"probe norm {n} deviates from 1 beyond 1e-12")
            vecs.append(v)
        self.vectors = vecs

    @classmethod
    def random(cls, space, count=8, seed=0):
        rng = np.random.default_rng(seed)
        vecs = []
        for _ in range(count):
            v = rng.standard_normal(space.dim)
            if space.field == "complex":
                v = v + 1j * rng.standard_normal(space.dim)
            vecs.append(space.normalize(v))
        return cls(space, vecs, seed=seed)

    @classmethod
    def from_vectors(cls, space, vectors, seed=0, drop_tol=1e-10):
        """Normalize raw vectors, silently dropping near-zero ones."""
        vecs = []
        for v in vectors:
            v = np.asarray(v, dtype=complex if space.field == "complex" else float)
            n = space.norm(v)
            if n > drop_tol:
                vecs.append(v / n)
        return cls(space, vecs, seed=seed)

    def __len__(self):
        return len(self.vectors)

    def __iter__(self):
        return iter(self.vectors)


@dataclass
class CoercivityReport:
    """Outcome of a membership test against the class Re T >= alpha,
    Re T^{-1} >= 1/beta."""

    alpha: float
    beta: float
    re_min: float
    re_inv_min: float
    singular: bool
    tol: float = 0.0

    @property
    def alpha_ok(self):
        return self.re_min >= self.alpha - self.tol

    @property
    def beta_ok(self):
        return (not self.singular) and self.re_inv_min >= 1.0 / self.beta - self.tol

    @property
    def passed(self):
        return self.alpha_ok and self.beta_ok

    def __bool__(self):
        return self.passed


def _sym_lambda_min(space, mat):
    """Smallest eigenvalue of Re(T) in the weighted inner product.

    Works in the orthonormal frame z = W^{1/2} x, where the pencil becomes the
    Hermitian part of Ahat = W^{1/2} T W^{-1/2}.
    """
    n = space.dim
    if _is_sparse(mat) and n > _DENSE_EIG_CUTOFF:
        if not space._diagonal:
            raise ShapeError("large sparse coercivity check needs a diagonal weight")
        d = np.sqrt(space.weight)

        def mv(x):
            return 0.5 * (d * (mat @ (x / d)) + (mat.conj().T @ (d * x)) / d)

        op = spla.LinearOperator((n, n), matvec=mv, dtype=mat.dtype)
        vals = spla.eigsh(op, k=1, which="SA", return_eigenvectors=False, maxiter=50 * n)
        return float(vals[0].real)
    m = mat.toarray() if _is_sparse(mat) else np.asarray(mat)
    if space._diagonal:
        d = np.sqrt(space.weight)
        mhat = (m * (1.0 / d)[None, :]) * d[:, None]
    else:
        L = scipy.linalg.cholesky(space.weight, lower=True)
        mhat = L.conj().T @ m @ scipy.linalg.inv(L.conj().T)
    h = 0.5 * (mhat + mhat.conj().T)
    return float(scipy.linalg.eigvalsh(h)[0])


def coercivity_check(op, alpha, beta, tol=0.0):
    """Membership test for the operator class with Re T >= alpha and
    Re T^{-1} >= 1/beta.

    Computes the smallest eigenvalue of Re T = (T + T*)/2 and of Re(T^{-1})
    in the weighted inner product and reports pass/fail per bound. A singular
    T is reported with the inverse check failed and the singularity flagged.
    """
    if not op.square or not op.source.compatible(op.target):
        raise ShapeError("coercivity check needs a square operator on one space")
    if not (0 < alpha <= beta):
        raise ShapeError("need 0 < alpha <= beta")
    space = op.source
    mat = op.matrix if op.matrix is not None else op.to_dense()
    re_min = _sym_lambda_min(space, mat)
    singular = False
    re_inv_min = -np.inf
    n = space.dim
    if _is_sparse(mat) and n > _DENSE_EIG_CUTOFF:
        try:
            lu = spla.splu(mat.tocsc())
        except RuntimeError:
            singular = True
        else:
            d = np.sqrt(space.weight)

            def mv(x):
                a = d * lu.solve(x / d)                    # Ahat^{-1} x
                b = lu.solve(d * x, trans="H") / d         # Ahat^{-H} x
                return 0.5 * (a + b)

            opi = spla.LinearOperator((n, n), matvec=mv, dtype=mat.dtype)
            vals = spla.eigsh(opi, k=1, which="SA", return_eigenvectors=False, maxiter=50 * n)
            re_inv_min = float(vals[0].real)
    else:
        m = mat.toarray() if _is_sparse(mat) else np.asarray(mat)
        try:
            cond = np.linalg.cond(m)
        except np.linalg.LinAlgError:
            cond = np.inf
        if not np.isfinite(cond) or cond > 1e12:
            singular = True
        else:
            minv = np.linalg.inv(m)
            re_inv_min = _sym_lambda_min(space, minv)
    return CoercivityReport(alpha=alpha, beta=beta, re_min=re_min,
                            re_inv_min=re_inv_min, singular=singular, tol=tol)


def kernel_range(op, tol=None):
    """Weighted-orthonormal bases of ker(op) and ran(op) via dense SVD.

    The rank cutoff defaults to 1e-10 times the largest singular value. Large
    grid-backed operators should build their subspaces from known sparse
    generators instead (see :meth:`Subspace.from_generator`).
    """
    src, tgt = op.source, op.target
    if max(src.dim, tgt.dim) > _DENSE_SVD_CUTOFF:
        raise ShapeError(
            "kernel_range materializes a dense SVD; build implicit subspaces "
            "from a sparse generator for large operators"
        )
    a = op.to_dense()
    # Ahat = Wt^{1/2} A Ws^{-1/2}
    ahat = np.column_stack([tgt.scale_to_ortho(a[:, j]) for j in range(src.dim)])
    if src._diagonal:
        ahat = ahat / np.sqrt(src.weight)[None, :]
    else:
        L = scipy.linalg.cholesky(src.weight, lower=True)
        ahat = scipy.linalg.solve_triangular(L.conj().T, ahat.conj().T, lower=False).conj().T
    u, s, vh = np.linalg.svd(ahat, full_matrices=True)
    smax = s[0] if s.size else 0.0
    if tol is None:
        tol = 1e-10 * smax
    rank = int(np.sum(s > tol)) if s.size else 0
    v = vh.conj().T
    kernel_cols = v[:, rank:]
    range_cols = u[:, :rank]
    ker_basis = np.column_stack([src.scale_from_ortho(kernel_cols[:, j]) for j in range(kernel_cols.shape[1])]) \
        if kernel_cols.shape[1] else np.zeros((src.dim, 0))
    ran_basis = np.column_stack([tgt.scale_from_ortho(range_cols[:, j]) for j in range(range_cols.shape[1])]) \
        if range_cols.shape[1] else np.zeros((tgt.dim, 0))
    return Subspace(src, basis=ker_basis), Subspace(tgt, basis=ran_basis)


def check_linear(op, trials=3, tol=1e-10, seed=0):
    """Verify op(x + c y) = op(x) + c op(y) on random probes (relative
    tolerance); the guard for user-supplied matrix-free applicators."""
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        x = rng.standard_normal(op.source.dim)
        y = rng.standard_normal(op.source.dim)
        c = rng.standard_normal()
        if op.source.field == "complex":
            x = x + 1j * rng.standard_normal(op.source.dim)
            c = c + 1j * rng.standard_normal()
        lhs = op(x + c * y)
        rhs = op(x) + c * op(y)
        scale = max(1.0, float(np.abs(rhs).max()))
        if np.abs(lhs - rhs).max() > tol * scale:
            raise ShapeError("applicator is not linear at tolerance")
    return True


def _check_gap_args(s, t, probes_src, probes_tgt):
    _check_same_spaces(s, t)
    if probes_src is not None and not probes_src.space.compatible(s.source):
        raise ShapeError("right probes live on the wrong space")
    if probes_tgt is not None and not probes_tgt.space.compatible(s.target):
        raise ShapeError("left probes live on the wrong space")


def wot_gap(s, t, left, right):
    """max over probe pairs of |<phi_i, (s - t) psi_j>|.

    Zero iff s = t on the span of the probes; restricted to a fixed probe
    family this is a pseudo-metric on operators (symmetry and triangle
    inequality hold exactly).
    """
    _check_gap_args(s, t, right, left)
    gap = 0.0
    for psi in right:
        d = s(psi) - t(psi)
        for phi in left:
            gap = max(gap, abs(s.target.inner(phi, d)))
    return gap


def strong_gap(s, t, right):
    """max over probes of the weighted norm of (s - t) psi_j."""
    _check_gap_args(s, t, right, None)
    gap = 0.0
    for psi in right:
        gap = max(gap, s.target.norm(s(psi) - t(psi)))
    return gap
