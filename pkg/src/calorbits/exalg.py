"""Pointwise exterior algebra over R^n with real or complex coefficients.

Forms are sparse maps from strictly increasing index tuples (subsets of
{1..n}) to scalars; a MultiForm is a tuple of forms of fixed degrees and
houses model calibrations and everything derived from them.  The GL(V)
action enters through three operations: pullback by a matrix, the
differential action rho_hat, and its exponential rho_exp.

Convention: the action of g on forms is pullback, (g.alpha)(v1,..,vp) =
alpha(g v1,..,g vp), so g -> rho_g is an anti-homomorphism and
rho_hat(xi) = d/dt (exp(t xi))^* at t=0.  On a single p-form,
rho_hat(identity) = p * id.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .scalars import (FLOAT, RATIONAL, QC, coerce_scalar, join_kind,
                      scalar_one, scalar_zero)


class DimensionMismatch(ValueError):
    pass


# ---------------------------------------------------------------------------
# index bookkeeping


def basis_indices(dim, degree):
    """All strictly increasing index tuples of the given size, in lex order."""
    return list(itertools.combinations(range(1, dim + 1), degree))


def _merge_sign(idx_a, idx_b):
    """Merge two disjoint sorted tuples; return (merged, sign) or (None, 0)."""
    if set(idx_a) & set(idx_b):
        return None, 0
    merged = sorted(idx_a + idx_b)
    # sign of the permutation sorting the concatenation: count inversions
    concat = idx_a + idx_b
    inv = 0
    for i in range(len(idx_a)):
        for j in range(len(idx_a), len(concat)):
            if concat[i] > concat[j]:
                inv += 1
    return tuple(merged), (-1) ** inv


def _interior_terms(idx, i):
    """Position of index i inside idx, or None."""
    try:
        pos = idx.index(i)
    except ValueError:
        return None
    return pos, idx[:pos] + idx[pos + 1:]


# ---------------------------------------------------------------------------
# Form


class Form:
    """A p-form on R^n with sparse coefficients of one scalar kind."""

    __slots__ = ("dim", "degree", "kind", "coeffs")

    def __init__(self, dim, degree, coeffs=None, kind=FLOAT):
        if degree < 0:
            raise ValueError("negative degree")
        cleaned = {}
        for idx, val in (coeffs or {}).items():
            idx = tuple(idx)
            if len(idx) != degree:
                raise ValueError(f"index {idx} has wrong length for degree {degree}")
            if list(idx) != sorted(set(idx)):
                raise ValueError(f"index {idx} not strictly increasing")
            if idx and (idx[0] < 1 or idx[-1] > dim):
                raise ValueError(f"index {idx} out of range 1..{dim}")
            val = coerce_scalar(val, kind)
            if val:
                cleaned[idx] = cleaned.get(idx, scalar_zero(kind)) + val
                if not cleaned[idx]:
                    del cleaned[idx]
        self.dim = dim
        self.degree = degree
        self.kind = kind
        self.coeffs = cleaned

    # -- constructors ----------------------------------------------
    @staticmethod
    def zero(dim, degree, kind=FLOAT):
        return Form(dim, degree, {}, kind)

    @staticmethod
    def basis(dim, idx, kind=FLOAT):
        return Form(dim, len(idx), {tuple(idx): scalar_one(kind)}, kind)

    # -- basics ----------------------------------------------------
    def is_zero(self):
        return not self.coeffs

    def _check(self, other):
        if self.dim != other.dim:
            raise DimensionMismatch(f"dim {self.dim} vs {other.dim}")
        join_kind(self.kind, other.kind)

    def __add__(self, other):
        self._check(other)
        if self.degree != other.degree:
            raise ValueError("cannot add forms of different degree")
        out = dict(self.coeffs)
        for idx, val in other.coeffs.items():
            out[idx] = out.get(idx, scalar_zero(self.kind)) + val
        return Form(self.dim, self.degree, out, self.kind)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return Form(self.dim, self.degree,
                    {i: -v for i, v in self.coeffs.items()}, self.kind)

    def scale(self, c):
        c = coerce_scalar(c, self.kind)
        return Form(self.dim, self.degree,
                    {i: c * v for i, v in self.coeffs.items()}, self.kind)

    def conj(self):
        return Form(self.dim, self.degree,
                    {i: v.conjugate() for i, v in self.coeffs.items()}, self.kind)

    def norm(self):
        return math.sqrt(sum(abs(complex(v)) ** 2 for v in self.coeffs.values()))

    def to_float(self):
        if self.kind == FLOAT:
            return self
        return Form(self.dim, self.degree,
                    {i: complex(v) for i, v in self.coeffs.items()}, FLOAT)

    def __eq__(self, other):
        return (isinstance(other, Form) and self.dim == other.dim
                and self.degree == other.degree and self.kind == other.kind
                and self.coeffs == other.coeffs)

    def __repr__(self):
        terms = ", ".join(f"{idx}: {val}" for idx, val in sorted(self.coeffs.items()))
        return f"Form(dim={self.dim}, deg={self.degree}, {{{terms}}})"


def wedge(a: Form, b: Form) -> Form:
    a._check(b)
    deg = a.degree + b.degree
    if deg > a.dim:
        return Form.zero(a.dim, deg, a.kind)
    out = {}
    zero = scalar_zero(a.kind)
    for ia, va in a.coeffs.items():
        for ib, vb in b.coeffs.items():
            merged, sign = _merge_sign(ia, ib)
            if merged is None:
                continue
            out[merged] = out.get(merged, zero) + sign * va * vb
    return Form(a.dim, deg, out, a.kind)


def interior(v, a: Form) -> Form:
    """Interior product i_v a for a coefficient vector v (length dim)."""
    if len(v) != a.dim:
        raise DimensionMismatch(f"vector length {len(v)} vs dim {a.dim}")
    if a.degree == 0:
        return Form.zero(a.dim, 0, a.kind)
    v = [coerce_scalar(c, a.kind) for c in v]
    out = {}
    zero = scalar_zero(a.kind)
    for idx, val in a.coeffs.items():
        for pos, i in enumerate(idx):
            c = v[i - 1]
            if not c:
                continue
            rest = idx[:pos] + idx[pos + 1:]
            out[rest] = out.get(rest, zero) + ((-1) ** pos) * c * val
    return Form(a.dim, a.degree - 1, out, a.kind)


def _det(rows, kind):
    """Determinant of a small square matrix of scalars (generic kind)."""
    m = [list(r) for r in rows]
    n = len(m)
    if n == 0:
        return scalar_one(kind)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    det = scalar_one(kind)
    for col in range(n):
        piv = None
        if kind == FLOAT:
            piv = max(range(col, n), key=lambda r: abs(m[r][col]))
            if not m[piv][col]:
                return scalar_zero(kind)
        else:
            for r in range(col, n):
                if m[r][col]:
                    piv = r
                    break
            if piv is None:
                return scalar_zero(kind)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        det = det * m[col][col]
        inv = scalar_one(kind) / m[col][col]
        for r in range(col + 1, n):
            f = m[r][col] * inv
            if f:
                for c in range(col, n):
                    m[r][c] = m[r][c] - f * m[col][c]
    return det


def _as_matrix(xi, dim, kind):
    """Coerce an endomorphism given as nested lists / numpy into scalar rows."""
    rows = np.asarray(xi).tolist() if isinstance(xi, np.ndarray) else [list(r) for r in xi]
    if len(rows) != dim or any(len(r) != dim for r in rows):
        raise DimensionMismatch("endomorphism shape mismatch")
    return [[coerce_scalar(v, kind) for v in r] for r in rows]


def pullback(matrix, a: Form) -> Form:
    """Pullback of a by the matrix A: (A^* dx^I)_J = det A[I, J]."""
    A = _as_matrix(matrix, a.dim, a.kind)
    out = {}
    zero = scalar_zero(a.kind)
    for j_idx in basis_indices(a.dim, a.degree):
        acc = zero
        for i_idx, val in a.coeffs.items():
            minor = [[A[i - 1][j - 1] for j in j_idx] for i in i_idx]
            d = _det(minor, a.kind)
            if d:
                acc = acc + d * val
        if acc:
            out[j_idx] = acc
    return Form(a.dim, a.degree, out, a.kind)


def rho_hat_form(xi, a: Form) -> Form:
    """rho_hat(xi) a = sum_{i,j} xi[i][j] dx^j ^ i_{e_i} a (single form)."""
    M = _as_matrix(xi, a.dim, a.kind)
    out = Form.zero(a.dim, a.degree, a.kind)
    for i in range(1, a.dim + 1):
        ia = interior([scalar_one(a.kind) if k == i else scalar_zero(a.kind)
                       for k in range(1, a.dim + 1)], a)
        if ia.is_zero():
            continue
        for j in range(1, a.dim + 1):
            c = M[i - 1][j - 1]
            if not c:
                continue
            out = out + wedge(Form.basis(a.dim, (j,), a.kind), ia).scale(c)
    return out


# ---------------------------------------------------------------------------
# MultiForm


class MultiForm:
    """A tuple of forms of fixed degrees on a common R^n."""

    __slots__ = ("dim", "degrees", "parts", "kind")

    def __init__(self, parts):
        parts = list(parts)
        if not parts:
            raise ValueError("MultiForm needs at least one part")
        dim = parts[0].dim
        kind = parts[0].kind
        for p in parts:
            if p.dim != dim:
                raise DimensionMismatch("MultiForm parts on different spaces")
            join_kind(kind, p.kind)
        self.dim = dim
        self.kind = kind
        self.degrees = tuple(p.degree for p in parts)
        self.parts = tuple(parts)

    @staticmethod
    def zero(dim, degrees, kind=FLOAT):
        return MultiForm([Form.zero(dim, p, kind) for p in degrees])

    def is_zero(self):
        return all(p.is_zero() for p in self.parts)

    def __add__(self, other):
        return MultiForm([a + b for a, b in zip(self.parts, other.parts)])

    def __sub__(self, other):
        return MultiForm([a - b for a, b in zip(self.parts, other.parts)])

    def __neg__(self):
        return MultiForm([-p for p in self.parts])

    def scale(self, c):
        return MultiForm([p.scale(c) for p in self.parts])

    def conj(self):
        return MultiForm([p.conj() for p in self.parts])

    def norm(self):
        return math.sqrt(sum(p.norm() ** 2 for p in self.parts))

    def to_float(self):
        return MultiForm([p.to_float() for p in self.parts])

    def __eq__(self, other):
        return (isinstance(other, MultiForm) and self.degrees == other.degrees
                and self.parts == other.parts)

    def __repr__(self):
        return f"MultiForm(degrees={self.degrees}, parts={list(self.parts)!r})"


def interior_multi(v, a: MultiForm) -> MultiForm:
    return MultiForm([interior(v, p) for p in a.parts])


def wedge_multi(beta: Form, a: MultiForm) -> MultiForm:
    """Wedge a scalar form onto every part (left factor)."""
    return MultiForm([wedge(beta, p) for p in a.parts])


def rho_hat(xi, a) -> "Form | MultiForm":
    if isinstance(a, Form):
        return rho_hat_form(xi, a)
    return MultiForm([rho_hat_form(xi, p) for p in a.parts])


def pullback_multi(matrix, a: MultiForm) -> MultiForm:
    return MultiForm([pullback(matrix, p) for p in a.parts])


class ConvergenceError(RuntimeError):
    pass


def rho_exp(xi, a, tol=1e-15, max_terms=300):
    """Pullback of a by exp(xi), as the operator series sum rho_hat^k / k!.

    Terminates on exact nilpotency (rational kind) or float convergence.
    The series converges for every xi mathematically; max_terms guards
    pathological float inputs.
    """
    acc = a
    term = a
    ref = max(a.norm(), 1.0)
    for k in range(1, max_terms + 1):
        term = rho_hat(xi, term)
        term = term.scale(QC(1, 0) / QC(k) if a.kind == RATIONAL else 1.0 / k)
        if term.is_zero():
            return acc
        acc = acc + term
        if a.kind == FLOAT and term.norm() <= tol * ref:
            return acc
        ref = max(ref, acc.norm())
    if a.kind == RATIONAL:
        raise ConvergenceError(
            "rho_exp in rational mode requires a nilpotent endomorphism")
    raise ConvergenceError(f"rho_exp series did not converge in {max_terms} terms")


# ---------------------------------------------------------------------------
# Metric and Hodge star


class Metric:
    """Symmetric positive-definite gram matrix on R^n."""

    __slots__ = ("dim", "gram")

    def __init__(self, gram):
        g = np.asarray(gram, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError("gram must be square")
        if not np.array_equal(g, g.T):
            if np.max(np.abs(g - g.T)) > 1e-12 * max(1.0, np.max(np.abs(g))):
                raise ValueError("gram must be symmetric")
            g = (g + g.T) / 2.0
        try:
            np.linalg.cholesky(g)
        except np.linalg.LinAlgError as exc:
            raise ValueError("gram must be positive definite") from exc
        self.dim = g.shape[0]
        self.gram = g

    @staticmethod
    def euclidean(dim):
        return Metric(np.eye(dim))

    def is_euclidean(self):
        return np.array_equal(self.gram, np.eye(self.dim))


def _complement_sign(idx, dim):
    comp = tuple(i for i in range(1, dim + 1) if i not in idx)
    _, sign = _merge_sign(idx, comp)
    return comp, sign


def hodge_star(g: Metric, a: Form, orientation=1):
    """Hodge star defined by alpha ^ *beta = <alpha, beta> vol_g.

    The inner product is extended bilinearly to complex coefficients.
    Rational-kind forms are supported for the Euclidean metric only.
    """
    if orientation not in (1, -1):
        raise ValueError("orientation must be +-1")
    if g.dim != a.dim:
        raise DimensionMismatch("metric/form dimension mismatch")
    n, p = a.dim, a.degree
    if a.kind == RATIONAL:
        if not g.is_euclidean():
            raise ValueError("rational hodge_star requires the Euclidean metric")
        out = {}
        for idx, val in a.coeffs.items():
            comp, sign = _complement_sign(idx, n)
            out[comp] = (orientation * sign) * val
        return Form(n, n - p, out, RATIONAL)
    ginv = np.linalg.inv(g.gram)
    sq = math.sqrt(np.linalg.det(g.gram))
    out = {}
    for i_idx in basis_indices(n, p):
        # <dx^I, a> = sum_J det(ginv[I,J]) a_J
        acc = 0j
        for j_idx, val in a.coeffs.items():
            minor = ginv[np.ix_([i - 1 for i in i_idx], [j - 1 for j in j_idx])]
            d = np.linalg.det(minor) if p else 1.0
            acc += d * complex(val)
        if acc:
            comp, sign = _complement_sign(i_idx, n)
            out[comp] = out.get(comp, 0j) + orientation * sign * sq * acc
    return Form(n, n - p, out, FLOAT)


# ---------------------------------------------------------------------------
# dense vectorization (float linear algebra)


def form_to_vec(a: Form) -> np.ndarray:
    basis = basis_indices(a.dim, a.degree)
    v = np.zeros(len(basis), dtype=complex)
    pos = {idx: i for i, idx in enumerate(basis)}
    for idx, val in a.coeffs.items():
        v[pos[idx]] = complex(val)
    return v


def vec_to_form(v, dim, degree) -> Form:
    basis = basis_indices(dim, degree)
    coeffs = {idx: complex(c) for idx, c in zip(basis, np.asarray(v)) if c != 0}
    return Form(dim, degree, coeffs, FLOAT)


def multiform_to_vec(a: MultiForm) -> np.ndarray:
    return np.concatenate([form_to_vec(p) for p in a.parts])


def vec_to_multiform(v, dim, degrees) -> MultiForm:
    v = np.asarray(v)
    parts = []
    ofs = 0
    for p in degrees:
        m = math.comb(dim, p)
        parts.append(vec_to_form(v[ofs:ofs + m], dim, p))
        ofs += m
    if ofs != len(v):
        raise ValueError("vector length mismatch")
    return MultiForm(parts)


def multi_len(dim, degrees):
    return sum(math.comb(dim, p) for p in degrees)


# ---------------------------------------------------------------------------
# Lefschetz decomposition


def _lam_matrix(omega: Form, degree):
    """Matrix of contraction with the dual bivector of omega on degree-q forms."""
    n = omega.dim
    W = np.zeros((n, n))
    for (i, j), val in omega.coeffs.items():
        W[i - 1, j - 1] = complex(val).real
        W[j - 1, i - 1] = -complex(val).real
    Pi = np.linalg.inv(W)  # raises if omega degenerate
    basis_q = basis_indices(n, degree)
    basis_out = basis_indices(n, degree - 2) if degree >= 2 else []
    pos = {idx: i for i, idx in enumerate(basis_out)}
    M = np.zeros((len(basis_out), len(basis_q)))
    for col, idx in enumerate(basis_q):
        f = Form.basis(n, idx)
        acc = Form.zero(n, degree - 2)
        for i in range(1, n + 1):
            for j in range(i + 1, n + 1):
                c = Pi[i - 1, j - 1]
                if c == 0:
                    continue
                ei = [1.0 if k == i else 0.0 for k in range(1, n + 1)]
                ej = [1.0 if k == j else 0.0 for k in range(1, n + 1)]
                acc = acc + interior(ej, interior(ei, f)).scale(c)
        for cidx, val in acc.coeffs.items():
            M[pos[cidx], col] = complex(val).real
    return M


def lefschetz_decompose(omega: Form, a: Form):
    """Write a = sum_j omega^j ^ prim_j with each prim_j primitive.

    Returns the list of components L^j(prim_j) (degree of a), lowest j first.
    """
    if omega.degree != 2:
        raise ValueError("omega must be a 2-form")
    if omega.dim % 2:
        raise ValueError("ambient dimension must be even")
    a = a.to_float()
    omega = omega.to_float()
    n, p = a.dim, a.degree
    comps = []
    columns = []
    meta = []
    for j in range(0, p // 2 + 1):
        q = p - 2 * j
        if q > n:
            continue
        # primitive subspace of degree q: kernel of the contraction matrix
        if q >= 2:
            M = _lam_matrix(omega, q)
            _, s, vt = np.linalg.svd(M)
            rank = int(np.sum(s > 1e-10 * (s[0] if len(s) else 1.0)))
            null = vt[rank:].conj().T
        else:
            null = np.eye(math.comb(n, q))
        for col in range(null.shape[1]):
            beta = vec_to_form(null[:, col], n, q)
            lb = beta
            for _ in range(j):
                lb = wedge(omega, lb)
            columns.append(form_to_vec(lb))
            meta.append(j)
    A = np.array(columns).T
    target = form_to_vec(a)
    sol, *_ = np.linalg.lstsq(A, target, rcond=None)
    recon = A @ sol
    if np.linalg.norm(recon - target) > 1e-9 * max(1.0, np.linalg.norm(target)):
        raise ValueError("Lefschetz reconstruction failed")
    out = []
    for j in range(0, p // 2 + 1):
        sel = [i for i, jj in enumerate(meta) if jj == j]
        if not sel:
            continue
        vec = A[:, sel] @ sol[sel]
        out.append(vec_to_form(vec, n, p))
    return out
