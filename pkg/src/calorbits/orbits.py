"""The six calibration orbits: model points, validators, and the
linear-algebraic analysis of their deformation complexes.

A calibration here is a tuple of constant-coefficient forms Phi0 on R^n;
its GL(n)-orbit determines a geometric structure.  Complex data (the
SL_n(C) and Calabi-Yau n-forms) is stored realified as (Re Omega,
Im Omega) parts, so every span/rank below is an honest real computation;
complex recombination happens only inside validate_structure.

The analysis objects cache, per spec: the fiber map xi -> rho_hat_xi
Phi0 (a dim-target x n^2 matrix), the isotropy algebra h = ker of that
map, orthonormal bases of the graded spaces E^k, and wedge operators
between consecutive levels.  The metrical / elliptic predicates and the
isotypic projectors are all rank computations on top of these.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
from scipy.linalg import expm

from . import exalg
from .exalg import (Form, Metric, MultiForm, basis_indices, form_to_vec,
                    hodge_star, interior, interior_multi, multi_len,
                    multiform_to_vec, pullback_multi, rho_hat, vec_to_form,
                    vec_to_multiform, wedge, wedge_multi)
from .linalg import float_rank, nullspace, orth_rows, rational_echelon, rational_rank
from .scalars import FLOAT, RATIONAL, QC

KINDS = ("symplectic", "sl", "cy", "hk", "g2", "spin7", "degenerate2form")


class CalibrationSpec:
    """Orbit descriptor: structure kind, model point, reference metric."""

    __slots__ = ("kind", "dim", "degrees", "phi0", "phi0_exact", "gV", "params")

    def __init__(self, kind, phi0_exact: MultiForm, params):
        self.kind = kind
        self.phi0_exact = phi0_exact
        self.phi0 = phi0_exact.to_float()
        self.dim = phi0_exact.dim
        self.degrees = phi0_exact.degrees
        self.gV = Metric.euclidean(self.dim)
        self.params = dict(params)

    def cache_key(self):
        return (self.kind, self.dim, tuple(sorted(self.params.items())))

    def __repr__(self):
        return f"CalibrationSpec({self.kind!r}, dim={self.dim}, params={self.params})"


# ---------------------------------------------------------------------------
# model constructors (exact rational coefficients)


def _qform(dim, entries):
    return Form(dim, len(next(iter(entries))), {k: QC(v) for k, v in entries.items()},
                RATIONAL)


def _symplectic_form(dim):
    return _qform(dim, {(2 * i + 1, 2 * i + 2): 1 for i in range(dim // 2)})


def _complex_volume(dim, pairs):
    """Omega = wedge of (dx^{a} + i dx^{b}) over the given index pairs."""
    omega = Form(dim, 0, {(): QC(1)}, RATIONAL)
    for a, b in pairs:
        z = Form(dim, 1, {(a,): QC(1), (b,): QC(0, 1)}, RATIONAL)
        omega = wedge(omega, z)
    return omega


def _re_im(form):
    re = Form(form.dim, form.degree,
              {i: QC(v.re) for i, v in form.coeffs.items()}, RATIONAL)
    im = Form(form.dim, form.degree,
              {i: QC(v.im) for i, v in form.coeffs.items()}, RATIONAL)
    return re, im


def _g2_forms():
    """(phi0, psi0) on R^7 from the n=3 Calabi-Yau model, exact."""
    omega = _symplectic_form(7)
    Om = _complex_volume(7, [(1, 2), (3, 4), (5, 6)])
    re, im = _re_im(Om)
    t = Form(7, 1, {(7,): QC(1)}, RATIONAL)
    phi = wedge(omega, t) + im
    half = Form(7, 0, {(): QC(Fraction(1, 2))}, RATIONAL)
    psi = wedge(half, wedge(omega, omega)) - wedge(re, t)
    return phi, psi


def model_calibration(kind, dim=None, m=None, complex_dim=None) -> CalibrationSpec:
    """Standard model point for each structure kind.

    symplectic/degenerate2form take dim; sl/cy take complex_dim; hk takes
    m (ambient 4m); g2 and spin7 are fixed in dimensions 7 and 8.
    """
    if kind == "symplectic":
        n = 4 if dim is None else int(dim)
        if n < 2 or n % 2:
            raise ValueError("symplectic model needs even dim >= 2")
        return CalibrationSpec(kind, MultiForm([_symplectic_form(n)]), {"dim": n})
    if kind == "degenerate2form":
        n = 4 if dim is None else int(dim)
        if n < 4:
            raise ValueError("degenerate2form model needs dim >= 4")
        return CalibrationSpec(kind, MultiForm([_qform(n, {(1, 2): 1})]), {"dim": n})
    if kind == "sl":
        nc = 2 if complex_dim is None else int(complex_dim)
        if nc < 1:
            raise ValueError("sl model needs complex_dim >= 1")
        n = 2 * nc
        om = _complex_volume(n, [(2 * i + 1, 2 * i + 2) for i in range(nc)])
        re, im = _re_im(om)
        return CalibrationSpec(kind, MultiForm([re, im]), {"complex_dim": nc})
    if kind == "cy":
        nc = 2 if complex_dim is None else int(complex_dim)
        if nc < 1:
            raise ValueError("cy model needs complex_dim >= 1")
        n = 2 * nc
        om = _complex_volume(n, [(2 * i + 1, 2 * i + 2) for i in range(nc)])
        re, im = _re_im(om)
        return CalibrationSpec(kind, MultiForm([re, im, _symplectic_form(n)]),
                               {"complex_dim": nc})
    if kind == "hk":
        mm = 1 if m is None else int(m)
        if mm < 1:
            raise ValueError("hk model needs m >= 1")
        n = 4 * mm
        wi = {}
        wj = {}
        wk = {}
        for q in range(mm):
            o = 4 * q
            wi[(o + 1, o + 2)] = 1
            wi[(o + 3, o + 4)] = 1
            wj[(o + 1, o + 3)] = 1
            wj[(o + 2, o + 4)] = -1
            wk[(o + 1, o + 4)] = 1
            wk[(o + 2, o + 3)] = 1
        return CalibrationSpec(kind, MultiForm(
            [_qform(n, wi), _qform(n, wj), _qform(n, wk)]), {"m": mm})
    if kind == "g2":
        if dim not in (None, 7):
            raise ValueError("g2 model lives on R^7")
        phi, psi = _g2_forms()
        return CalibrationSpec(kind, MultiForm([phi, psi]), {})
    if kind == "spin7":
        if dim not in (None, 8):
            raise ValueError("spin7 model lives on R^8")
        phi7, psi7 = _g2_forms()

        def lift(f):
            return Form(8, f.degree, dict(f.coeffs), RATIONAL)

        theta = Form(8, 1, {(8,): QC(1)}, RATIONAL)
        cayley = wedge(lift(phi7), theta) + lift(psi7)
        return CalibrationSpec(kind, MultiForm([cayley]), {})
    raise ValueError(f"unknown structure kind {kind!r}")


def g2_psi0(spec: CalibrationSpec) -> Form:
    """The coassociative 4-form psi0 = *phi0 of the g2 model."""
    if spec.kind != "g2":
        raise ValueError("psi0 is defined for the g2 kind")
    _, psi = _g2_forms()
    return psi


# ---------------------------------------------------------------------------
# orbit analysis (cached)


def _real_vec(mf: MultiForm) -> np.ndarray:
    v = multiform_to_vec(mf)
    return v.real


def _endo_basis(n):
    for i in range(n):
        for j in range(n):
            E = np.zeros((n, n))
            E[i, j] = 1.0
            yield E


class OrbitAnalysis:
    def __init__(self, spec: CalibrationSpec):
        self.spec = spec
        self._ek = {}
        self._ek_exact = {}
        self._wedge_ops = {}
        self._fiber = None
        self._isotropy = None

    # degrees of the ambient bundle at level k
    def level_degrees(self, k):
        return tuple(p + k - 1 for p in self.spec.degrees)

    def level_len(self, k):
        return multi_len(self.spec.dim, self.level_degrees(k))

    @property
    def fiber_matrix(self) -> np.ndarray:
        """Matrix of xi -> rho_hat_xi Phi0, shape (dim E^1 ambient, n^2)."""
        if self._fiber is None:
            cols = [_real_vec(rho_hat(E, self.spec.phi0))
                    for E in _endo_basis(self.spec.dim)]
            self._fiber = np.array(cols).T
        return self._fiber

    @property
    def isotropy(self):
        """List of n x n matrices spanning h = ker(rho_hat_. Phi0)."""
        if self._isotropy is None:
            n = self.spec.dim
            null = nullspace(self.fiber_matrix)
            self._isotropy = [null[:, i].reshape(n, n) for i in range(null.shape[1])]
        return self._isotropy

    def ek_generators(self, k):
        """Raw generators beta ^ i_v Phi0 of E^k as float vectors."""
        spec = self.spec
        n = spec.dim
        gens = []
        for v in range(n):
            ev = [1.0 if t == v else 0.0 for t in range(n)]
            iv = interior_multi(ev, spec.phi0)
            if k == 0:
                gens.append(multiform_to_vec(iv).real)
                continue
            for idx in basis_indices(n, k):
                g = wedge_multi(Form.basis(n, idx), iv)
                gens.append(multiform_to_vec(g).real)
        return np.array(gens)

    def ek_generators_exact(self, k):
        spec = self.spec
        n = spec.dim
        one = QC(1)
        zero = QC(0)
        gens = []
        for v in range(n):
            ev = [one if t == v else zero for t in range(n)]
            iv = interior_multi(ev, spec.phi0_exact)
            items = [iv] if k == 0 else [
                wedge_multi(Form.basis(n, idx, RATIONAL), iv)
                for idx in basis_indices(n, k)]
            for g in items:
                gens.append(_exact_vec(g))
        return gens

    def ek_basis(self, k) -> np.ndarray:
        """Orthonormal basis of E^k as columns (ambient_len x dim E^k)."""
        if k not in self._ek:
            self._ek[k] = orth_rows(self.ek_generators(k)).T
        return self._ek[k]

    def ek_dim(self, k):
        return self.ek_basis(k).shape[1]

    def ek_echelon_exact(self, k):
        if k not in self._ek_exact:
            self._ek_exact[k] = rational_echelon(self.ek_generators_exact(k))
        return self._ek_exact[k]

    def wedge_op(self, j, k) -> np.ndarray:
        """Ambient matrix of dx^j ^ (.) from level k to level k+1."""
        key = (j, k)
        if key not in self._wedge_ops:
            self._wedge_ops[key] = self._wedge_op_build(j, k)
        return self._wedge_ops[key]

    def _wedge_op_build(self, j, k):
        n = self.spec.dim
        degs_in = self.level_degrees(k)
        degs_out = self.level_degrees(k + 1)
        M = np.zeros((self.level_len(k + 1), self.level_len(k)))
        col = 0
        for part_i, p in enumerate(degs_in):
            out_ofs = sum(math.comb(n, q) for q in degs_out[:part_i])
            out_basis = {idx: r for r, idx in enumerate(basis_indices(n, p + 1))}
            for idx in basis_indices(n, p):
                out = wedge(Form.basis(n, (j,)), Form.basis(n, idx))
                for oidx, val in out.coeffs.items():
                    M[out_ofs + out_basis[oidx], col] = complex(val).real
                col += 1
        return M

    def wedge_u(self, u, k):
        """Ambient matrix of u ^ (.) at level k for a covector u."""
        return sum(u[j] * self.wedge_op(j + 1, k) for j in range(self.spec.dim))


_ANALYSES = {}


def analysis(spec: CalibrationSpec) -> OrbitAnalysis:
    key = spec.cache_key()
    if key not in _ANALYSES:
        _ANALYSES[key] = OrbitAnalysis(spec)
    return _ANALYSES[key]


def _exact_vec(mf: MultiForm):
    """Realified exact coefficient vector (list of Fractions)."""
    out = []
    for part in mf.parts:
        basis = basis_indices(mf.dim, part.degree)
        for idx in basis:
            val = part.coeffs.get(idx, QC(0))
            if val.im != 0:
                raise ValueError("exact vectorization expects real parts")
            out.append(val.re)
    return out


# ---------------------------------------------------------------------------
# predicates


def isotropy_algebra(spec: CalibrationSpec):
    return analysis(spec).isotropy


def ek_space(spec: CalibrationSpec, k):
    """(orthonormal basis matrix with column vectors, list of MultiForms)."""
    an = analysis(spec)
    B = an.ek_basis(k)
    forms = [vec_to_multiform(B[:, i], spec.dim, an.level_degrees(k))
             for i in range(B.shape[1])]
    return B, forms


def check_metrical(spec: CalibrationSpec, tol=1e-10):
    """Is h contained in so(n)?  Returns (verdict, symmetric witness | None).

    Lie-algebra-level test: xi in h must satisfy g xi + xi^T g = 0.  When
    it fails, a symmetric element of h is exhibited (the isotropy algebra
    of every non-metrical kind here meets the symmetric matrices).
    """
    n = spec.dim
    g = spec.gV.gram
    basis = analysis(spec).isotropy
    bad = [xi for xi in basis if np.max(np.abs(g @ xi + xi.T @ g)) > tol]
    if not bad:
        return True, None
    # find a symmetric combination: antisym part of sum c_a xi_a must vanish
    A = np.array([((xi - xi.T) / 2).ravel() for xi in basis]).T
    null = nullspace(A)
    for i in range(null.shape[1]):
        w = sum(c * xi for c, xi in zip(null[:, i], basis))
        if np.max(np.abs(w)) > tol:
            w = w / np.max(np.abs(w))
            return False, (w + w.T) / 2
    # no symmetric element; fall back to the first violating basis vector
    return False, bad[0]


def check_elliptic(spec: CalibrationSpec, trials=64, seed=0, scalar=FLOAT,
                   tol=1e-9):
    """Symbol-sequence exactness at positions 1 and 2 for sampled covectors.

    Exactness of E^{k-1} -u^- E^k -u^- E^{k+1} at E^k is the rank identity
    rank(u^|E^{k-1}) + rank(u^|E^k) == dim E^k.  Samples: the n coordinate
    covectors plus `trials` random unit covectors.
    """
    an = analysis(spec)
    n = spec.dim
    rng = np.random.default_rng(seed)
    dims = {k: an.ek_dim(k) for k in range(3)}
    us = [np.eye(n)[i] for i in range(n)]
    for _ in range(trials):
        u = rng.normal(size=n)
        us.append(u / np.linalg.norm(u))
    exact_us = None
    if scalar == RATIONAL:
        exact_us = [[Fraction(1) if t == i else Fraction(0) for t in range(n)]
                    for i in range(n)]
        for _ in range(trials):
            exact_us.append([Fraction(int(x), 1) for x in
                             rng.integers(-5, 6, size=n)])
        exact_us = [u for u in exact_us if any(u)]
    verdict = True
    witness = None
    checked = 0
    if scalar == RATIONAL:
        ech = {k: an.ek_echelon_exact(k) for k in range(3)}
        dims = {k: len(ech[k]) for k in range(3)}
        for u in exact_us:
            ranks = {}
            for k in range(3):
                wedged = [_exact_wedge_u(u, row, an, k) for row in ech[k]]
                ranks[k] = rational_rank(wedged) if wedged else 0
            ok1 = ranks[0] + ranks[1] == dims[1]
            ok2 = ranks[1] + ranks[2] == dims[2]
            checked += 1
            if not (ok1 and ok2):
                verdict = False
                witness = {"u": [str(x) for x in u],
                           "position": 1 if not ok1 else 2,
                           "rank_gap": (dims[1] - ranks[0] - ranks[1]) if not ok1
                           else (dims[2] - ranks[1] - ranks[2])}
                break
    else:
        B = {k: an.ek_basis(k) for k in range(3)}
        for u in us:
            ranks = {}
            for k in range(3):
                W = an.wedge_u(u, k)
                ranks[k] = float_rank(W @ B[k], tol) if B[k].shape[1] else 0
            ok1 = ranks[0] + ranks[1] == dims[1]
            ok2 = ranks[1] + ranks[2] == dims[2]
            checked += 1
            if not (ok1 and ok2):
                verdict = False
                witness = {"u": [float(x) for x in u],
                           "position": 1 if not ok1 else 2,
                           "rank_gap": (dims[1] - ranks[0] - ranks[1]) if not ok1
                           else (dims[2] - ranks[1] - ranks[2])}
                break
    return {"verdict": verdict, "trials": trials, "seed": seed,
            "scalar": scalar, "checked": checked, "dims": dims,
            "witness": witness}


def _exact_wedge_u(u, row, an: OrbitAnalysis, k):
    """u ^ (vector at level k), exactly, for Fraction data."""
    n = an.spec.dim
    degs_in = an.level_degrees(k)
    degs_out = an.level_degrees(k + 1)
    out = [Fraction(0)] * an.level_len(k + 1)
    ofs_in = 0
    for part_i, p in enumerate(degs_in):
        out_ofs = sum(math.comb(n, q) for q in degs_out[:part_i])
        out_pos = {idx: r for r, idx in enumerate(basis_indices(n, p + 1))}
        for idx in basis_indices(n, p):
            val = row[ofs_in]
            ofs_in += 1
            if not val:
                continue
            for j in range(1, n + 1):
                if not u[j - 1] or j in idx:
                    continue
                merged, sign = exalg._merge_sign((j,), idx)
                out[out_ofs + out_pos[merged]] += sign * u[j - 1] * val
    return out


# ---------------------------------------------------------------------------
# isotypic projectors


_PROJECTOR_CACHE = {}


def irrep_projectors(spec: CalibrationSpec, degree, tol=1e-8):
    """Isotypic projectors on Lambda^degree from the Casimir of h.

    Returns a list of records {"label", "dim", "eigenvalue", "matrix"}
    ordered by eigenvalue; projectors are orthogonal, idempotent, and sum
    to the identity.  Clusters too large for a cheap irreducibility check
    are labeled but flagged.
    """
    key = (spec.cache_key(), degree, tol)
    if key in _PROJECTOR_CACHE:
        return _PROJECTOR_CACHE[key]
    metrical, _ = check_metrical(spec)
    if not metrical:
        raise ValueError("irrep projectors need a metrical spec")
    n = spec.dim
    basis = analysis(spec).isotropy
    # orthonormalize h under the Frobenius pairing
    flat = orth_rows(np.array([xi.ravel() for xi in basis]))
    hb = [flat[i].reshape(n, n) for i in range(flat.shape[0])]
    forms = basis_indices(n, degree)
    dimp = len(forms)
    reps = []
    for xi in hb:
        M = np.zeros((dimp, dimp))
        for c, idx in enumerate(forms):
            out = exalg.rho_hat_form(xi, Form.basis(n, idx))
            for oidx, val in out.coeffs.items():
                M[forms.index(oidx), c] = complex(val).real
        reps.append(M)
    cas = -sum(M @ M for M in reps)
    evals, evecs = np.linalg.eigh(cas)
    scale = max(abs(evals[0]), abs(evals[-1]), 1.0)
    clusters = []
    start = 0
    for i in range(1, dimp + 1):
        if i == dimp or evals[i] - evals[i - 1] > tol * scale:
            clusters.append((start, i))
            start = i
    out = []
    for (a, b) in clusters:
        V = evecs[:, a:b]
        P = V @ V.T
        dim = b - a
        label = f"dim{dim}"
        flagged = False
        if dim <= 30:
            comm = np.vstack([np.kron(np.eye(dim), V.T @ M @ V)
                              - np.kron((V.T @ M @ V).T, np.eye(dim))
                              for M in reps])
            cdim = nullspace(comm).shape[1]
            flagged = cdim > 1
        else:
            cdim = None
        out.append({"label": label, "dim": dim,
                    "eigenvalue": float(np.mean(evals[a:b])),
                    "matrix": P, "possibly_reducible": flagged,
                    "commutant_dim": cdim})
    _PROJECTOR_CACHE[key] = out
    return out


# ---------------------------------------------------------------------------
# G2 special operators


def _g2_projectors(spec, degree):
    projs = irrep_projectors(spec, degree)
    return {p["dim"]: p["matrix"] for p in projs}


def g2_J(spec: CalibrationSpec, a: Form) -> Form:
    """J(a) = (4/3) * pi_1(a) + * pi_7(a) - * pi_27(a) on 3-forms."""
    if spec.kind != "g2":
        raise ValueError("g2_J needs the g2 kind")
    if a.degree != 3:
        raise ValueError("g2_J acts on 3-forms")
    P = _g2_projectors(spec, 3)
    v = form_to_vec(a.to_float()).real
    out = Form.zero(7, 4)
    for dim, coeff in ((1, 4.0 / 3.0), (7, 1.0), (27, -1.0)):
        comp = vec_to_form(P[dim] @ v, 7, 3)
        out = out + hodge_star(spec.gV, comp).scale(coeff)
    return out


def g2_extract_gamma(spec: CalibrationSpec, u, eta: Form):
    """Extract gamma in Lambda^2_14 with i_v gamma = 0 from u ^ eta.

    Decomposes u ^ eta orthogonally against u ^ Lambda^2_7 and sets
    gamma = i_v(residual) / (2|u|^2), v the metric dual of u.  Returns a
    record with gamma and the residual of the defining identity
    u ^ J(u ^ eta) == -2|u|^2 *gamma.
    """
    if spec.kind != "g2":
        raise ValueError("g2_extract_gamma needs the g2 kind")
    if eta.degree != 2:
        raise ValueError("eta must be a 2-form")
    u = np.asarray(u, dtype=float)
    if not np.any(u):
        raise ValueError("u must be nonzero")
    phi0 = spec.phi0.parts[0]
    uform = Form(7, 1, {(i + 1,): u[i] for i in range(7)})
    # u ^ Lambda^2_7 = span of u ^ i_w phi0
    cols = []
    for w in range(7):
        ew = [1.0 if t == w else 0.0 for t in range(7)]
        cols.append(form_to_vec(wedge(uform, interior(ew, phi0))).real)
    S = orth_rows(np.array(cols))
    target = form_to_vec(wedge(uform, eta.to_float())).real
    resid = target - S.T @ (S @ target)
    residual_form = vec_to_form(resid, 7, 3)
    gamma = interior(list(u), residual_form).scale(1.0 / (2 * float(u @ u)))
    lhs = wedge(uform, g2_J(spec, wedge(uform, eta.to_float())))
    rhs = hodge_star(spec.gV, gamma).scale(-2 * float(u @ u))
    identity_residual = (lhs - rhs).norm()
    P14 = _g2_projectors(spec, 2)[14]
    gv = form_to_vec(gamma).real
    mem = float(np.linalg.norm(gv - P14 @ gv))
    ivg = interior(list(u), gamma).norm()
    return {"gamma": gamma, "identity_residual": identity_residual,
            "membership_residual": mem, "contraction_residual": ivg}


# ---------------------------------------------------------------------------
# orbit membership / structure validation


def orbit_reduce(spec: CalibrationSpec, phi: MultiForm, starts=8, seed=0,
                 iters=60, tol=1e-11):
    """Gauss-Newton reduction of phi to the model point along the orbit.

    Minimizes |pullback(g) Phi0 - phi|^2 over g = exp(xi) with multi-start.
    Returns {"certified", "g", "residual"}; failure means "not certified",
    not "not in orbit".
    """
    rng = np.random.default_rng(seed)
    n = spec.dim
    target = _real_vec(phi.to_float())
    best = None
    for s in range(starts):
        g = np.eye(n) if s == 0 else expm(rng.normal(size=(n, n)) * 0.2)
        for _ in range(iters):
            cur_mf = pullback_multi(g, spec.phi0)
            cur = _real_vec(cur_mf)
            r = target - cur
            J = np.array([_real_vec(rho_hat(E, cur_mf))
                          for E in _endo_basis(n)]).T
            delta, *_ = np.linalg.lstsq(J, r, rcond=None)
            step = delta.reshape(n, n)
            lam = 1.0
            base = np.linalg.norm(r)
            improved = False
            for _ in range(20):
                g_try = g @ expm(lam * step)
                r_try = target - _real_vec(pullback_multi(g_try, spec.phi0))
                if np.linalg.norm(r_try) < base:
                    g = g_try
                    improved = True
                    break
                lam /= 2
            if not improved or np.linalg.norm(r) < tol * max(1.0, np.linalg.norm(target)):
                break
        resid = float(np.linalg.norm(target - _real_vec(pullback_multi(g, spec.phi0))))
        if best is None or resid < best[0]:
            best = (resid, g)
        if best[0] < tol * max(1.0, np.linalg.norm(target)):
            break
    resid, g = best
    certified = resid <= 1e-8 * max(1.0, np.linalg.norm(target))
    return {"certified": bool(certified), "g": g, "residual": resid}


def _complex_part(phi: MultiForm, re_i, im_i):
    re = phi.parts[re_i].to_float()
    im = phi.parts[im_i].to_float()
    coeffs = {}
    for idx in set(re.coeffs) | set(im.coeffs):
        coeffs[idx] = complex(re.coeffs.get(idx, 0)) + 1j * complex(im.coeffs.get(idx, 0))
    return Form(phi.dim, re.degree, coeffs, FLOAT)


def _form_matrix(f: Form) -> np.ndarray:
    n = f.dim
    M = np.zeros((n, n))
    for (i, j), val in f.coeffs.items():
        M[i - 1, j - 1] = complex(val).real
        M[j - 1, i - 1] = -complex(val).real
    return M


def monge_ampere_constant(nc):
    """c_n = (-1)^{n(n-1)/2} 2^n / (i^n n!) as an exact complex rational."""
    sign = (-1) ** (nc * (nc - 1) // 2)
    i_pow = [QC(1), QC(0, 1), QC(-1), QC(0, -1)][nc % 4]
    return QC(sign * Fraction(2 ** nc, math.factorial(nc))) / i_pow


def validate_structure(kind, phi: MultiForm, tol=1e-9):
    """Per-kind structural diagnostics with residual norms."""
    n = phi.dim
    diag = {"kind": kind, "checks": {}, "ok": True}

    def rec(name, residual, passed=None):
        passed = (residual <= tol) if passed is None else passed
        diag["checks"][name] = {"residual": float(residual), "pass": bool(passed)}
        diag["ok"] = diag["ok"] and bool(passed)

    if kind == "symplectic":
        om = phi.parts[0].to_float()
        top = om
        for _ in range(n // 2 - 1):
            top = wedge(top, om)
        rec("nondegenerate", 0.0, top.norm() > tol)
        return diag
    if kind == "degenerate2form":
        M = _form_matrix(phi.parts[0].to_float())
        rec("rank2", 0.0, float_rank(M) == 2)
        return diag
    if kind in ("sl", "cy"):
        nc = n // 2
        Om = _complex_part(phi, 0, 1)
        cols = [form_to_vec(interior([1.0 if t == j else 0.0 for t in range(n)], Om))
                for j in range(n)]
        K = nullspace(np.array(cols).T)
        rec("kernel_dim", 0.0, K.shape[1] == nc)
        if K.shape[1] == nc:
            stacked = np.hstack([K, K.conj()])
            rec("kernel_transverse", 0.0, float_rank(stacked) == n)
        if kind == "sl":
            return diag
        om = phi.parts[2].to_float()
        rec("omega_wedge_Omega", wedge(Om, om).norm() / max(Om.norm(), 1.0))
        rec("omega_wedge_Omega_bar", wedge(Om.conj(), om).norm() / max(Om.norm(), 1.0))
        omn = Form(n, 0, {(): 1.0})
        for _ in range(nc):
            omn = wedge(omn, om)
        cn = complex(monge_ampere_constant(nc))
        ma = wedge(Om, Om.conj()) - omn.scale(cn)
        rec("monge_ampere", ma.norm() / max(wedge(Om, Om.conj()).norm(), 1.0))
        if K.shape[1] == nc:
            # I = -i on Ker(Omega); g(u,v) = omega(u, I v) must be PD
            W = np.hstack([K, K.conj()])
            Imat = (W @ np.diag([-1j] * nc + [1j] * nc) @ np.linalg.inv(W)).real
            Wom = _form_matrix(om)
            gram = Wom @ Imat
            sym_res = np.max(np.abs(gram - gram.T))
            rec("metric_symmetric", sym_res)
            pd = bool(np.all(np.linalg.eigvalsh((gram + gram.T) / 2) > tol))
            rec("metric_positive", 0.0, pd)
        return diag
    if kind == "hk":
        MI, MJ, MK = (_form_matrix(p.to_float()) for p in phi.parts)
        try:
            I = -np.linalg.solve(MJ, MK)
            J = -np.linalg.solve(MK, MI)
            Kq = -np.linalg.solve(MI, MJ)
        except np.linalg.LinAlgError:
            rec("invertible", 1.0, False)
            return diag
        e = np.eye(n)
        rec("I_squared", np.max(np.abs(I @ I + e)))
        rec("J_squared", np.max(np.abs(J @ J + e)))
        rec("K_squared", np.max(np.abs(Kq @ Kq + e)))
        rec("IJK", np.max(np.abs(I @ J @ Kq + e)))
        g = -I.T @ MI
        rec("metric_symmetric", np.max(np.abs(g - g.T)))
        pd = bool(np.all(np.linalg.eigvalsh((g + g.T) / 2) > tol))
        rec("metric_positive", 0.0, pd)
        for name, M, X in (("compat_I", MI, I), ("compat_J", MJ, J),
                           ("compat_K", MK, Kq)):
            rec(name, np.max(np.abs(M - X.T @ g)))
        return diag
    if kind in ("g2", "spin7"):
        spec = model_calibration(kind)
        red = orbit_reduce(spec, phi)
        rec("orbit_membership", red["residual"], red["certified"])
        cols = [_real_vec(rho_hat(E, phi.to_float())) for E in _endo_basis(n)]
        stab = n * n - float_rank(np.array(cols).T)
        expect = 14 if kind == "g2" else 21
        rec("stabilizer_dim", 0.0, stab == expect)
        return diag
    raise ValueError(f"unknown structure kind {kind!r}")


def metric_from_calibration(spec: CalibrationSpec, phi: MultiForm, g=None):
    """Canonical metric of a calibration presented as rho_g(Phi0).

    With phi = pullback of Phi0 by the matrix g, the canonical metric is
    the pullback g_phi(u, v) = g_V(g u, g v).  If g is not supplied it is
    recovered by orbit reduction.  For the g2 kind the result is cross
    checked against the intrinsic bilinear form i_u phi ^ i_v phi ^ phi.
    """
    if g is None:
        red = orbit_reduce(spec, phi)
        if not red["certified"]:
            raise ValueError("phi could not be certified as an orbit point")
        g = red["g"]
    g = np.asarray(g, dtype=float)
    gram = g.T @ spec.gV.gram @ g
    metric = Metric(gram)
    if spec.kind == "g2":
        intrinsic = g2_intrinsic_metric(phi)
        if np.max(np.abs(intrinsic.gram - gram)) > 1e-6 * max(1.0, np.max(np.abs(gram))):
            raise ValueError("g2 intrinsic metric disagrees with pushforward")
    return metric


def g2_intrinsic_metric(phi: MultiForm) -> Metric:
    """Metric of a g2 3-form from B(u,v) vol = i_u phi ^ i_v phi ^ phi.

    B = 6 g sqrt(det g) relative to the coordinate volume, so
    g = B / (6 (det B / 6^7)^{1/9}) up to the orientation sign.
    """
    f = phi.parts[0].to_float()
    n = 7
    B = np.zeros((n, n))
    for u in range(n):
        iu = interior([1.0 if t == u else 0.0 for t in range(n)], f)
        for v in range(u, n):
            ivf = interior([1.0 if t == v else 0.0 for t in range(n)], f)
            volf = wedge(wedge(iu, ivf), f)
            c = complex(volf.coeffs.get(tuple(range(1, 8)), 0)).real
            B[u, v] = B[v, u] = c
    det = np.linalg.det(B)
    if det == 0:
        raise ValueError("degenerate 3-form")
    scale = 6.0 * abs(det / 6.0 ** 7) ** (1.0 / 9.0)
    g = B / scale
    if np.trace(g) < 0:
        g = -g
    return Metric(g)


def hk_two_form_space(spec: CalibrationSpec):
    """Basis of Lambda^2_HK: 2-forms invariant under I, J and K."""
    if spec.kind != "hk":
        raise ValueError("hk_two_form_space needs the hk kind")
    n = spec.dim
    MI, MJ, MK = (_form_matrix(p.to_float()) for p in spec.phi0.parts)
    I = -np.linalg.solve(MJ, MK)
    J = -np.linalg.solve(MK, MI)
    Kq = -np.linalg.solve(MI, MJ)
    pairs = basis_indices(n, 2)
    rows = []
    for X in (I, J, Kq):
        M = np.zeros((len(pairs), len(pairs)))
        for c, (i, j) in enumerate(pairs):
            # pullback of dx^i ^ dx^j under X minus itself
            skew = np.outer(X[i - 1], X[j - 1]) - np.outer(X[j - 1], X[i - 1])
            for r, (a, b) in enumerate(pairs):
                M[r, c] = skew[a - 1, b - 1]
        rows.append(M - np.eye(len(pairs)))
    A = np.vstack(rows)
    return nullspace(A)


def orbit_report(spec: CalibrationSpec, trials=64, seed=0, scalar=FLOAT):
    """CLI-facing JSON-ready analysis summary."""
    an = analysis(spec)
    metrical, witness = check_metrical(spec)
    ell = check_elliptic(spec, trials=trials, seed=seed, scalar=scalar)
    rep = {
        "kind": spec.kind,
        "dim": spec.dim,
        "degrees": list(spec.degrees),
        "params": dict(sorted(spec.params.items())),
        "isotropy_dim": len(an.isotropy),
        "ek_dims": {str(k): an.ek_dim(k) for k in range(4)},
        "metrical": bool(metrical),
        "elliptic": {
            "verdict": ell["verdict"], "trials": ell["trials"],
            "seed": ell["seed"], "witness": ell["witness"]},
    }
    if witness is not None:
        rep["metrical_witness"] = [[round(float(x), 12) for x in row]
                                   for row in witness]
    return rep
