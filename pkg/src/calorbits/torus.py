"""Forms and endomorphism fields on the flat torus T^n.

Everything is a trigonometric polynomial: a finite map from integer
frequency vectors k to fiber data (MultiForm coefficients, vectors, or
matrices), representing sum_k coeff(k) e^{i<k,x>}.  The exterior
derivative is exact (multiplication by i*k_j and a wedge), so the
operator calculus L_a = [rho_hat_a, d], the generalized Nijenhuis tensor
N(a,b) and G(a,a) = i_N - L_{a^2} are all evaluated without any
discretization error.

Real-valued fields satisfy coeff(-k) == conj(coeff(k)); all operations
preserve that constraint.

Frame formulas (the L_a oracle, N(a,b)) are evaluated on coordinate
fields, whose pairwise Lie brackets vanish.
"""

from __future__ import annotations

import math

import numpy as np

from .exalg import Form, MultiForm, interior_multi, rho_hat, wedge_multi
from .scalars import (FLOAT, RATIONAL, coerce_scalar, join_kind, scalar_i,
                      scalar_one, scalar_zero)

#: Abort threshold for support growth, in modes * coefficient terms.
SUPPORT_CAP = 200_000


class SupportCapExceeded(RuntimeError):
    pass


def _freq(k):
    return tuple(int(x) for x in k)


# ---------------------------------------------------------------------------
# TrigForm


class TrigForm:
    """MultiForm-valued trigonometric polynomial on T^n."""

    __slots__ = ("dim", "degrees", "kind", "modes")

    def __init__(self, dim, degrees, modes=None, kind=FLOAT):
        degrees = tuple(degrees)
        cleaned = {}
        total = 0
        for k, mf in (modes or {}).items():
            k = _freq(k)
            if len(k) != dim:
                raise ValueError(f"frequency {k} has wrong length")
            if mf.dim != dim or mf.degrees != degrees:
                raise ValueError("mode coefficient shape mismatch")
            join_kind(kind, mf.kind)
            if mf.is_zero():
                continue
            cleaned[k] = mf
            total += sum(len(p.coeffs) for p in mf.parts)
        if total > SUPPORT_CAP:
            raise SupportCapExceeded(
                f"support {total} exceeds cap {SUPPORT_CAP}")
        self.dim = dim
        self.degrees = degrees
        self.kind = kind
        self.modes = cleaned

    @staticmethod
    def zero(dim, degrees, kind=FLOAT):
        return TrigForm(dim, degrees, {}, kind)

    @staticmethod
    def constant(mf: MultiForm):
        return TrigForm(mf.dim, mf.degrees, {(0,) * mf.dim: mf}, mf.kind)

    def is_zero(self):
        return not self.modes

    def _check(self, other):
        if self.dim != other.dim or self.degrees != other.degrees:
            raise ValueError("TrigForm shape mismatch")
        join_kind(self.kind, other.kind)

    def __add__(self, other):
        self._check(other)
        out = dict(self.modes)
        for k, mf in other.modes.items():
            out[k] = out[k] + mf if k in out else mf
        return TrigForm(self.dim, self.degrees, out, self.kind)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return TrigForm(self.dim, self.degrees,
                        {k: -mf for k, mf in self.modes.items()}, self.kind)

    def scale(self, c):
        return TrigForm(self.dim, self.degrees,
                        {k: mf.scale(c) for k, mf in self.modes.items()},
                        self.kind)

    def norm(self):
        """L^2 norm with volume normalized so constants have unit norm."""
        return math.sqrt(sum(mf.norm() ** 2 for mf in self.modes.values()))

    def coeff(self, k) -> MultiForm:
        k = _freq(k)
        return self.modes.get(k, MultiForm.zero(self.dim, self.degrees, self.kind))

    def truncate(self, eps):
        """Drop modes whose coefficient norm is at most eps."""
        return TrigForm(self.dim, self.degrees,
                        {k: mf for k, mf in self.modes.items()
                         if mf.norm() > eps}, self.kind)

    def is_real(self, tol=0.0):
        for k, mf in self.modes.items():
            mk = tuple(-x for x in k)
            diff = self.coeff(mk).conj() - mf
            if self.kind == RATIONAL:
                if not diff.is_zero():
                    return False
            elif diff.norm() > tol:
                return False
        return True

    def to_float(self):
        return TrigForm(self.dim, self.degrees,
                        {k: mf.to_float() for k, mf in self.modes.items()}, FLOAT)

    def part(self, i):
        """Single-part TrigForm holding part i of every coefficient."""
        return TrigForm(self.dim, (self.degrees[i],),
                        {k: MultiForm([mf.parts[i]]) for k, mf in self.modes.items()},
                        self.kind)


def combine_parts(parts):
    """Inverse of TrigForm.part: zip single-part TrigForms into one TrigForm."""
    dim = parts[0].dim
    kind = parts[0].kind
    degrees = tuple(p.degrees[0] for p in parts)
    keys = set()
    for p in parts:
        keys.update(p.modes)
    modes = {}
    for k in keys:
        modes[k] = MultiForm([p.coeff(k).parts[0] for p in parts])
    return TrigForm(dim, degrees, modes, kind)


def d(alpha: TrigForm) -> TrigForm:
    """Exterior derivative: mode k picks up i * sum_j k_j dx^j ^ (.)"""
    out = {}
    iu = scalar_i(alpha.kind)
    for k, mf in alpha.modes.items():
        acc = None
        for j, kj in enumerate(k):
            if kj == 0:
                continue
            term = wedge_multi(Form.basis(alpha.dim, (j + 1,), alpha.kind),
                               mf).scale(iu * coerce_scalar(kj, alpha.kind))
            acc = term if acc is None else acc + term
        if acc is not None and not acc.is_zero():
            out[k] = acc
    return TrigForm(alpha.dim, tuple(p + 1 for p in alpha.degrees), out, alpha.kind)


# ---------------------------------------------------------------------------
# VectorField / EndoField


class _Field:
    """Shared plumbing for vector and endomorphism trig fields."""

    __slots__ = ("dim", "kind", "modes")

    def __init__(self, dim, modes=None, kind=FLOAT):
        cleaned = {}
        for k, val in (modes or {}).items():
            k = _freq(k)
            if len(k) != dim:
                raise ValueError(f"frequency {k} has wrong length")
            val = self._coerce(val, dim, kind)
            if self._nonzero(val):
                cleaned[k] = val
        if len(cleaned) * self._size(dim) > SUPPORT_CAP:
            raise SupportCapExceeded("field support exceeds cap")
        self.dim = dim
        self.kind = kind
        self.modes = cleaned

    def is_zero(self):
        return not self.modes

    def _binop(self, other, fn):
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        join_kind(self.kind, other.kind)
        out = dict(self.modes)
        zero = self._zero_fiber(self.dim, self.kind)
        for k, val in other.modes.items():
            out[k] = fn(out.get(k, zero), val)
        return type(self)(self.dim, out, self.kind)

    def __add__(self, other):
        return self._binop(other, self._fiber_add)

    def __sub__(self, other):
        return self._binop(other, self._fiber_sub)

    def __neg__(self):
        return type(self)(self.dim,
                          {k: self._fiber_scale(v, -1)
                           for k, v in self.modes.items()}, self.kind)

    def scale(self, c):
        c = coerce_scalar(c, self.kind)
        return type(self)(self.dim,
                          {k: self._fiber_scale(v, c)
                           for k, v in self.modes.items()}, self.kind)

    def coeff(self, k):
        return self.modes.get(_freq(k), self._zero_fiber(self.dim, self.kind))

    def norm(self):
        return math.sqrt(sum(self._fiber_norm2(v) for v in self.modes.values()))

    def is_real(self, tol=0.0):
        for k, val in self.modes.items():
            diff = self._fiber_sub(
                self._fiber_conj(self.coeff(tuple(-x for x in k))), val)
            if self.kind == RATIONAL:
                if self._nonzero(diff):
                    return False
            elif math.sqrt(self._fiber_norm2(diff)) > tol:
                return False
        return True


class VectorField(_Field):
    """Vector-field-valued trigonometric polynomial (fiber: length-n tuple)."""

    @staticmethod
    def _coerce(val, dim, kind):
        val = tuple(coerce_scalar(x, kind) for x in val)
        if len(val) != dim:
            raise ValueError("vector fiber length mismatch")
        return val

    @staticmethod
    def _nonzero(val):
        return any(bool(x) for x in val)

    @staticmethod
    def _size(dim):
        return dim

    @staticmethod
    def _zero_fiber(dim, kind):
        return (scalar_zero(kind),) * dim

    @staticmethod
    def _fiber_add(a, b):
        return tuple(x + y for x, y in zip(a, b))

    @staticmethod
    def _fiber_sub(a, b):
        return tuple(x - y for x, y in zip(a, b))

    @staticmethod
    def _fiber_scale(a, c):
        return tuple(c * x for x in a)

    @staticmethod
    def _fiber_conj(a):
        return tuple(x.conjugate() for x in a)

    @staticmethod
    def _fiber_norm2(a):
        return sum(abs(complex(x)) ** 2 for x in a)


class EndoField(_Field):
    """End(TX)-valued trigonometric polynomial (fiber: n x n matrix)."""

    @staticmethod
    def _coerce(val, dim, kind):
        if isinstance(val, np.ndarray):
            val = val.tolist()
        rows = tuple(tuple(coerce_scalar(x, kind) for x in r) for r in val)
        if len(rows) != dim or any(len(r) != dim for r in rows):
            raise ValueError("matrix fiber shape mismatch")
        return rows

    @staticmethod
    def _nonzero(val):
        return any(bool(x) for r in val for x in r)

    @staticmethod
    def _size(dim):
        return dim * dim

    @staticmethod
    def _zero_fiber(dim, kind):
        z = scalar_zero(kind)
        return ((z,) * dim,) * dim

    @staticmethod
    def _fiber_add(a, b):
        return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))

    @staticmethod
    def _fiber_sub(a, b):
        return tuple(tuple(x - y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))

    @staticmethod
    def _fiber_scale(a, c):
        return tuple(tuple(c * x for x in r) for r in a)

    @staticmethod
    def _fiber_conj(a):
        return tuple(tuple(x.conjugate() for x in r) for r in a)

    @staticmethod
    def _fiber_norm2(a):
        return sum(abs(complex(x)) ** 2 for r in a for x in r)

    @staticmethod
    def constant(matrix, dim=None, kind=FLOAT):
        if isinstance(matrix, np.ndarray):
            dim = matrix.shape[0]
        elif dim is None:
            dim = len(matrix)
        return EndoField(dim, {(0,) * dim: matrix}, kind)

    def column(self, j) -> VectorField:
        """The vector field a(e_j)."""
        return VectorField(self.dim,
                           {k: tuple(r[j - 1] for r in m)
                            for k, m in self.modes.items()}, self.kind)


def endo_mul(a: EndoField, b: EndoField) -> EndoField:
    """Pointwise composition a.b, convolved over frequencies."""
    join_kind(a.kind, b.kind)
    n = a.dim
    zero = scalar_zero(a.kind)
    out = {}
    for ka, ma in a.modes.items():
        for kb, mb in b.modes.items():
            k = tuple(x + y for x, y in zip(ka, kb))
            prod = tuple(tuple(sum((ma[i][l] * mb[l][j] for l in range(n)), zero)
                               for j in range(n)) for i in range(n))
            out[k] = EndoField._fiber_add(out[k], prod) if k in out else prod
    return EndoField(n, out, a.kind)


def endo_apply(a: EndoField, x: VectorField) -> VectorField:
    join_kind(a.kind, x.kind)
    n = a.dim
    zero = scalar_zero(a.kind)
    out = {}
    for ka, ma in a.modes.items():
        for kx, vx in x.modes.items():
            k = tuple(p + q for p, q in zip(ka, kx))
            val = tuple(sum((ma[i][l] * vx[l] for l in range(n)), zero)
                        for i in range(n))
            out[k] = VectorField._fiber_add(out[k], val) if k in out else val
    return VectorField(n, out, a.kind)


def vf_bracket(x: VectorField, y: VectorField) -> VectorField:
    """Lie bracket [x,y]^k = x^l d_l y^k - y^l d_l x^k, exactly in modes."""
    join_kind(x.kind, y.kind)
    n = x.dim
    iu = scalar_i(x.kind)
    zero = scalar_zero(x.kind)
    out = {}
    for k1, v1 in x.modes.items():
        for k2, v2 in y.modes.items():
            k = tuple(p + q for p, q in zip(k1, k2))
            val = [zero] * n
            for l in range(n):
                c1 = v1[l] * iu * coerce_scalar(k2[l], x.kind)
                c2 = v2[l] * iu * coerce_scalar(k1[l], x.kind)
                if c1 or c2:
                    for comp in range(n):
                        val[comp] = val[comp] + c1 * v2[comp] - c2 * v1[comp]
            val = tuple(val)
            out[k] = VectorField._fiber_add(out[k], val) if k in out else val
    return VectorField(n, out, x.kind)


# ---------------------------------------------------------------------------
# convolved fiber operations on TrigForms


def interior_vf(v: VectorField, alpha: TrigForm) -> TrigForm:
    join_kind(v.kind, alpha.kind)
    out = {}
    for kv, vec in v.modes.items():
        for ka, mf in alpha.modes.items():
            k = tuple(p + q for p, q in zip(kv, ka))
            term = interior_multi(vec, mf)
            out[k] = out[k] + term if k in out else term
    return TrigForm(alpha.dim, tuple(p - 1 for p in alpha.degrees), out, alpha.kind)


def wedge_tf(beta: TrigForm, alpha: TrigForm) -> TrigForm:
    """Wedge a single-part TrigForm onto every part of alpha (left factor)."""
    if len(beta.degrees) != 1:
        raise ValueError("left factor must be a single-part TrigForm")
    join_kind(beta.kind, alpha.kind)
    out = {}
    for kb, mb in beta.modes.items():
        for ka, mf in alpha.modes.items():
            k = tuple(p + q for p, q in zip(kb, ka))
            term = wedge_multi(mb.parts[0], mf)
            out[k] = out[k] + term if k in out else term
    return TrigForm(alpha.dim,
                    tuple(p + beta.degrees[0] for p in alpha.degrees),
                    out, alpha.kind)


def rho_hat_tf(a: EndoField, alpha: TrigForm) -> TrigForm:
    """Pointwise differential action, convolved over frequencies."""
    join_kind(a.kind, alpha.kind)
    out = {}
    for ka, mat in a.modes.items():
        for kf, mf in alpha.modes.items():
            k = tuple(p + q for p, q in zip(ka, kf))
            term = rho_hat(mat, mf)
            out[k] = out[k] + term if k in out else term
    return TrigForm(alpha.dim, alpha.degrees, out, alpha.kind)


def lie_vf(v: VectorField, alpha: TrigForm) -> TrigForm:
    """Classical Lie derivative along a vector field: d i_v + i_v d."""
    return d(interior_vf(v, alpha)) + interior_vf(v, d(alpha))


def lie_operator_L(a: EndoField, alpha: TrigForm) -> TrigForm:
    """L_a = rho_hat_a . d - d . rho_hat_a (the commutator definition)."""
    return rho_hat_tf(a, d(alpha)) - d(rho_hat_tf(a, alpha))


def lie_operator_L_frame(a: EndoField, alpha: TrigForm) -> TrigForm:
    """L_a by the intrinsic frame formula, on coordinate frames.

    L_a eta(u_0..u_p) = sum_i (-1)^i L_{a u_i} eta(u_0,..^i..,u_p) for
    commuting frames u_i = coordinate fields; the bracket correction
    term vanishes identically.  Independent oracle for lie_operator_L.
    """
    n = alpha.dim
    cols = [lie_vf(a.column(j), alpha) for j in range(1, n + 1)]
    parts_out = []
    for pi, p in enumerate(alpha.degrees):
        keys = set()
        for c in cols:
            keys.update(c.modes)
        modes = {}
        from .exalg import basis_indices
        for k in keys:
            coeffs = {}
            for J in basis_indices(n, p + 1):
                acc = scalar_zero(alpha.kind)
                for pos, j in enumerate(J):
                    rest = J[:pos] + J[pos + 1:]
                    val = cols[j - 1].coeff(k).parts[pi].coeffs.get(rest)
                    if val is not None:
                        acc = acc + ((-1) ** pos) * val
                if acc:
                    coeffs[J] = acc
            if coeffs:
                modes[k] = MultiForm([Form(n, p + 1, coeffs, alpha.kind)])
        parts_out.append(TrigForm(n, (p + 1,), modes, alpha.kind))
    return combine_parts(parts_out)


# ---------------------------------------------------------------------------
# generalized Nijenhuis tensor and G(a,a)


def nijenhuis(a: EndoField, b: EndoField):
    """N(a,b) evaluated on coordinate frames: map (i,j), i<j -> VectorField.

    N(a,b)(u,v) = ab[u,v] + ba[u,v] + [au,bv] - [av,bu]
                  - a[bu,v] + a[bv,u] - b[au,v] + b[av,u];
    with u = d_i, v = d_j the [u,v] terms vanish and brackets against a
    constant coordinate field reduce to component derivatives.
    """
    join_kind(a.kind, b.kind)
    n = a.dim
    acol = [a.column(j) for j in range(1, n + 1)]
    bcol = [b.column(j) for j in range(1, n + 1)]
    const = [VectorField(n, {(0,) * n: tuple(
        scalar_one(a.kind) if t == j else scalar_zero(a.kind)
        for t in range(n))}, a.kind) for j in range(n)]
    out = {}
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            u, v = const[i - 1], const[j - 1]
            au, av = acol[i - 1], acol[j - 1]
            bu, bv = bcol[i - 1], bcol[j - 1]
            nij = (vf_bracket(au, bv) - vf_bracket(av, bu)
                   - endo_apply(a, vf_bracket(bu, v))
                   + endo_apply(a, vf_bracket(bv, u))
                   - endo_apply(b, vf_bracket(au, v))
                   + endo_apply(b, vf_bracket(av, u)))
            if not nij.is_zero():
                out[(i, j)] = nij
    return out


def interior_nij(nij, alpha: TrigForm) -> TrigForm:
    """i_N: contract the vector slot into alpha, wedge the 2-form slot."""
    n = alpha.dim
    acc = TrigForm.zero(n, tuple(p + 1 for p in alpha.degrees), alpha.kind)
    for (i, j), field in nij.items():
        dxij = TrigForm(n, (2,), {(0,) * n: MultiForm(
            [Form.basis(n, (i, j), alpha.kind)])}, alpha.kind)
        acc = acc + wedge_tf(dxij, interior_vf(field, alpha))
    return acc


def g_operator(a: EndoField, alpha: TrigForm) -> TrigForm:
    """G(a,a) alpha = i_{N(a,a)} alpha - L_{a.a} alpha."""
    return (interior_nij(nijenhuis(a, a), alpha)
            - lie_operator_L(endo_mul(a, a), alpha))


def g_pair_operator(a: EndoField, b: EndoField, alpha: TrigForm) -> TrigForm:
    """Polarized G(a,b) alpha = i_{N(a,b)} alpha - L_{a.b} alpha."""
    return (interior_nij(nijenhuis(a, b), alpha)
            - lie_operator_L(endo_mul(a, b), alpha))
