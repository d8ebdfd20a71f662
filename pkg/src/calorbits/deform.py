"""Power-series deformations of a constant calibration on a flat torus.

The deformation is g(t) = exp(a(t)) with a(t) = sum_k (t^k/k!) a_k an
endomorphism-field series; the closure equation d rho_{g(t)} Phi0 = 0 is
solved order by order.  At order k the t^k coefficient splits as

    dR_k = (1/k!) d rho_hat_{a_k} Phi0 + Ob_k(a_1, ..., a_{k-1})

and a_k is produced from the Green operator of the restricted complex:
(1/k!) rho_hat_{a_k} Phi0 = -d* G(Ob_k).  The obstruction Ob_k is computed
along two independent paths (direct series expansion, and a nested
commutator series applied to the generalized Nijenhuis bracket) whose
agreement certifies the algebra at every order.
"""

from __future__ import annotations

import math
from itertools import product as iter_product

import numpy as np

from .exalg import (MultiForm, multiform_to_vec, rho_hat, vec_to_multiform,
                    wedge)
from .hodge import HodgeSystem, d_adjoint_apply, green_apply
from .linalg import float_rank
from .orbits import CalibrationSpec, analysis
from .torus import (EndoField, TrigForm, d as d_tf, endo_mul, g_pair_operator,
                    rho_hat_tf)

ORDER_CAP = 12


class TwoPathDisagreement(RuntimeError):
    def __init__(self, k, direct, commutator, residual):
        super().__init__(
            f"obstruction paths disagree at order {k} (residual {residual:.3e})")
        self.k = k
        self.direct = direct
        self.commutator = commutator
        self.residual = residual


class DeformationSeed:
    """First-order direction a1 with d rho_hat_{a1} Phi0 = 0."""

    def __init__(self, a1: EndoField, normalized=False):
        self.a1 = a1
        self.normalized = normalized

    def validate(self, spec: CalibrationSpec, sys: HodgeSystem = None,
                 tol=1e-10):
        phi0 = TrigForm.constant(spec.phi0.to_float())
        tangent = rho_hat_tf(self.a1, phi0)
        closure = d_tf(tangent).norm()
        if closure > tol:
            raise ValueError(f"seed tangent is not closed ({closure:.3e})")
        if self.normalized:
            if sys is None:
                raise ValueError("coclosure check needs a HodgeSystem")
            co = d_adjoint_apply(sys, 1, tangent).norm()
            if co > tol:
                raise ValueError(f"seed tangent is not coclosed ({co:.3e})")
        return closure


class DeformationResult:
    def __init__(self, spec, seed, order, coeffs, per_order, obstruction=None):
        self.spec = spec
        self.seed = seed
        self.order = order
        self.coeffs = coeffs          # alpha_k = a_k / k!, index 1..order
        self.per_order = per_order
        self.obstruction = obstruction  # None, or {"k", "class", "norm"}

    @property
    def a_list(self):
        """Series coefficients a_k = k! * alpha_k of a(t) = sum a_k t^k / k!."""
        return [self.coeffs[k].scale(float(math.factorial(k)))
                for k in range(1, self.order + 1)]

    def report(self):
        rep = {
            "structure": self.spec.kind,
            "order": self.order,
            "per_order": self.per_order,
            "obstructed": self.obstruction is not None,
        }
        if self.obstruction is not None:
            rep["obstruction"] = {"k": self.obstruction["k"],
                                  "norm": self.obstruction["norm"]}
        return rep


# ---------------------------------------------------------------------------
# seed builders


def _reality_pairs(modes):
    out = dict(modes)
    for m, M in modes.items():
        mm = tuple(-x for x in m)
        if mm not in out:
            out[mm] = np.conj(M)
    return out


def _endo_from_modes(n, modes):
    return EndoField(n, {m: tuple(tuple(row) for row in np.asarray(M))
                         for m, M in modes.items()})


def constant_seed(spec: CalibrationSpec, xi) -> DeformationSeed:
    """Seed from a constant endomorphism (tangent automatically closed)."""
    return DeformationSeed(EndoField.constant(
        tuple(tuple(float(x) for x in row) for row in xi), spec.dim))


def exact_seed(spec: CalibrationSpec, freq, v) -> DeformationSeed:
    """Seed whose tangent is the exact form d(i_v Phi0 * e^{i freq.x}).

    The contraction i_v Phi0 spans the level-0 fiber, so its differential
    lands in the E^1 fiber and lifts to an endomorphism per frequency
    through the pseudo-inverse of xi -> rho_hat_xi Phi0, with the
    conjugate frequency added so the field is real.
    """
    from .exalg import interior_multi
    an = analysis(spec)
    n = spec.dim
    coeff = interior_multi([complex(x) for x in v], spec.phi0.to_float())
    beta = TrigForm(n, an.level_degrees(0), {tuple(freq): coeff})
    dbeta = d_tf(beta)
    pinv = np.linalg.pinv(an.fiber_matrix)
    modes = {}
    for m, mf in dbeta.modes.items():
        vec = multiform_to_vec(mf)
        xi = (pinv @ vec).reshape(n, n)
        resid = np.linalg.norm(an.fiber_matrix @ xi.ravel() - vec)
        if resid > 1e-9 * max(1.0, np.linalg.norm(vec)):
            raise ValueError("exact tangent does not lift to an endomorphism")
        modes[m] = xi
    return DeformationSeed(_endo_from_modes(n, _reality_pairs(modes)))


def mixed_seed(spec: CalibrationSpec, xi, freq, v, weight=1.0):
    """Constant direction plus an exact single-mode direction."""
    const = constant_seed(spec, xi).a1
    wave = exact_seed(spec, freq, v).a1
    return DeformationSeed(const + wave.scale(weight))


# ---------------------------------------------------------------------------
# graded expansion


class _GradedState:
    """Graded pieces of the series rho_hat_a^l Phi0 / l! for a = sum alpha_k t^k."""

    def __init__(self, spec: CalibrationSpec):
        self.spec = spec
        self.phi0 = TrigForm.constant(spec.phi0.to_float())
        self.alphas = {}           # order -> EndoField (t^k coefficient)
        # V[l][m] = t^m coefficient of rho_hat_a^l Phi0
        self.V = {0: {0: self.phi0}}

    def set_alpha(self, k, alpha: EndoField):
        self.alphas[k] = alpha
        self.V = {0: {0: self.phi0}}  # rebuilt lazily against current alphas

    def v(self, l, m):
        if l == 0:
            return self.phi0 if m == 0 else None
        row = self.V.setdefault(l, {})
        if m not in row:
            acc = None
            for p, alpha in self.alphas.items():
                if p > m:
                    continue
                lower = self.v(l - 1, m - p)
                if lower is None:
                    continue
                term = rho_hat_tf(alpha, lower)
                acc = term if acc is None else acc + term
            row[m] = acc
        return row[m]

    def phi_coefficient(self, m):
        """t^m coefficient of rho_{exp a(t)} Phi0."""
        acc = None
        for l in range(0, m + 1):
            vv = self.v(l, m)
            if vv is None:
                continue
            term = vv.scale(1.0 / math.factorial(l))
            acc = term if acc is None else acc + term
        if acc is None:
            acc = TrigForm.zero(self.spec.dim, self.phi0.degrees)
        return acc

    def obstruction_direct(self, k):
        """Ob_k and its explicit primitive sum_{l>=2} V^(l)_k / l!."""
        prim = None
        for l in range(2, k + 1):
            vv = self.v(l, k)
            if vv is None:
                continue
            term = vv.scale(1.0 / math.factorial(l))
            prim = term if prim is None else prim + term
        if prim is None:
            prim = TrigForm.zero(self.spec.dim, self.phi0.degrees)
        return d_tf(prim), prim


def _nested_commutator(alphas, ps, pair, phi0):
    """Apply [rho_{a_{p1}}, [..., [rho_{a_{pj}}, G(a_{q1}, a_{q2})]...]] to Phi0."""
    if not ps:
        return g_pair_operator(alphas[pair[0]], alphas[pair[1]], phi0)
    head, rest = ps[0], ps[1:]
    inner = _nested_commutator(alphas, rest, pair, phi0)
    outer = _nested_commutator(alphas, rest, pair,
                               rho_hat_tf(alphas[head], phi0))
    return rho_hat_tf(alphas[head], inner) - outer


def obstruction_commutator(state: _GradedState, k):
    """Ob_k via the convergent series f(Ad_{rho_a}) applied to G(a, a).

    f(x) = -(e^{-x} - 1 + x)/x^2 with coefficients c_j = (-1)^{j+1}/(j+2)!.
    Valid once the closure equations below order k hold.
    """
    orders = sorted(state.alphas)
    acc = None
    for j in range(0, k - 1):
        c_j = (-1.0) ** (j + 1) / math.factorial(j + 2)
        for picks in iter_product(orders, repeat=j + 2):
            if sum(picks) != k:
                continue
            ps, pair = list(picks[:j]), (picks[j], picks[j + 1])
            term = _nested_commutator(state.alphas, ps, pair, state.phi0)
            term = term.scale(c_j)
            acc = term if acc is None else acc + term
    if acc is None:
        acc = TrigForm.zero(state.spec.dim,
                            tuple(p + 1 for p in state.phi0.degrees))
    return acc


def expand_deformation(spec: CalibrationSpec, state: _GradedState, k,
                       tol=1e-9):
    """Order-k obstruction, computed along both paths and cross-checked."""
    direct, prim = state.obstruction_direct(k)
    comm = obstruction_commutator(state, k)
    scale = max(1.0, direct.norm())
    residual = (direct - comm).norm() / scale
    if residual > tol:
        raise TwoPathDisagreement(k, direct, comm, residual)
    exact_resid = (direct - d_tf(prim)).norm()
    return direct, {"two_path_residual": float(residual),
                    "ob_exactness_residual": float(exact_resid)}


def solve_order(spec: CalibrationSpec, sys: HodgeSystem, ob: TrigForm, k,
                tol=1e-9):
    """Produce alpha_k with d rho_hat_{alpha_k} Phi0 = -Ob_k, or report
    the harmonic class of Ob_k as a genuine obstruction."""
    n = spec.dim
    harm = ob.coeff((0,) * n)
    hnorm = math.sqrt(sum(p.norm() ** 2 for p in harm.parts))
    if hnorm > tol:
        return None, {"obstructed": True, "class": harm, "norm": float(hnorm)}
    tangent = d_adjoint_apply(sys, 2, green_apply(sys, 2, ob)).scale(-1.0)
    an = analysis(spec)
    pinv = np.linalg.pinv(an.fiber_matrix)
    modes = {}
    for m, mf in tangent.modes.items():
        vec = multiform_to_vec(mf)
        xi = (pinv @ vec).reshape(n, n)
        resid = np.linalg.norm(an.fiber_matrix @ xi.ravel() - vec)
        if resid > tol * max(1.0, np.linalg.norm(vec)):
            raise ValueError(
                f"tangent at order {k} does not lift to an endomorphism "
                f"(frequency {m}, residual {resid:.3e})")
        modes[m] = xi
    alpha = _endo_from_modes(n, modes)
    return alpha, {"obstructed": False}


def run(spec: CalibrationSpec, sys: HodgeSystem, seed: DeformationSeed,
        order, tol=1e-9) -> DeformationResult:
    if order > ORDER_CAP:
        raise ValueError(f"order {order} exceeds cap {ORDER_CAP}")
    seed.validate(spec, sys if seed.normalized else None)
    state = _GradedState(spec)
    state.set_alpha(1, seed.a1)
    coeffs = {1: seed.a1}
    phi0 = state.phi0
    per_order = [{
        "k": 1, "ob_norm": 0.0, "two_path_residual": 0.0,
        "ob_exactness_residual": 0.0,
        "a_norm_over_kfact": float(seed.a1.norm()),
        "closure_residual": float(d_tf(rho_hat_tf(seed.a1, phi0)).norm()),
    }]
    obstruction = None
    for k in range(2, order + 1):
        ob, checks = expand_deformation(spec, state, k, tol)
        alpha, sol = solve_order(spec, sys, ob, k, tol)
        if sol["obstructed"]:
            obstruction = {"k": k, "class": sol["class"], "norm": sol["norm"]}
            break
        coeffs[k] = alpha
        state.set_alpha(k, alpha)
        closure = d_tf(state.phi_coefficient(k)).norm()
        per_order.append({
            "k": k, "ob_norm": float(ob.norm()),
            "two_path_residual": checks["two_path_residual"],
            "ob_exactness_residual": checks["ob_exactness_residual"],
            "a_norm_over_kfact": float(alpha.norm()),
            "closure_residual": float(closure),
        })
        if closure > tol:
            raise RuntimeError(
                f"closure residual {closure:.3e} at order {k} exceeds {tol}")
    solved = max(coeffs)
    return DeformationResult(spec, seed, solved, coeffs, per_order,
                             obstruction)


# ---------------------------------------------------------------------------
# evaluation


def a_of_t(result: DeformationResult, t) -> EndoField:
    acc = None
    for k, alpha in result.coeffs.items():
        term = alpha.scale(float(t) ** k)
        acc = term if acc is None else acc + term
    return acc


_RHO_TENSORS = {}


def _rho_tensor(spec: CalibrationSpec):
    """R[i*n+j] = ambient matrix of rho_hat_{E_ij} on the degree-p_i sum."""
    key = spec.cache_key()
    if key not in _RHO_TENSORS:
        an = analysis(spec)
        n = spec.dim
        L = an.level_len(1)
        degrees = an.level_degrees(1)
        R = np.zeros((n * n, L, L))
        for i in range(n):
            for j in range(n):
                E = np.zeros((n, n))
                E[i, j] = 1.0
                for c in range(L):
                    basis_vec = np.zeros(L)
                    basis_vec[c] = 1.0
                    mf = vec_to_multiform(basis_vec, n, degrees)
                    R[i * n + j, :, c] = multiform_to_vec(rho_hat(E, mf)).real
        _RHO_TENSORS[key] = R
    return _RHO_TENSORS[key]


def _exp_modes(result: DeformationResult, t, series_tol, max_terms):
    """Frequency -> coefficient-vector dict of rho_{exp a(t)} Phi0."""
    spec = result.spec
    n = spec.dim
    R = _rho_tensor(spec)
    a = a_of_t(result, t)
    amats = {m: np.tensordot(
        np.asarray(M, dtype=complex).ravel(), R, axes=(0, 0))
        for m, M in a.modes.items()}
    phi_vec = multiform_to_vec(spec.phi0.to_float())
    zero = (0,) * n
    out = {zero: phi_vec.copy()}
    term = {zero: phi_vec}
    drop = series_tol * 1e-3
    for l in range(1, max_terms + 1):
        new = {}
        for ma, Ma in amats.items():
            for mt, v in term.items():
                key = tuple(x + y for x, y in zip(ma, mt))
                w = (Ma @ v) / l
                if key in new:
                    new[key] += w
                else:
                    new[key] = w
        term = {m: v for m, v in new.items() if np.linalg.norm(v) > drop}
        tnorm = math.sqrt(sum(float(np.vdot(v, v).real)
                              for v in term.values()))
        for m, v in term.items():
            if m in out:
                out[m] = out[m] + v
            else:
                out[m] = v
        if tnorm <= series_tol:
            return out
    raise RuntimeError("operator exponential did not converge")


def evaluate(result: DeformationResult, t, series_tol=1e-14,
             max_terms=60) -> TrigForm:
    """rho_{exp a(t)} Phi0 through the pointwise operator exponential."""
    spec = result.spec
    phi0 = TrigForm.constant(spec.phi0.to_float())
    if t == 0:
        return phi0
    modes = _exp_modes(result, t, series_tol, max_terms)
    degrees = analysis(spec).level_degrees(1)
    return TrigForm(spec.dim, degrees,
                    {m: vec_to_multiform(v, spec.dim, degrees)
                     for m, v in modes.items()})


def closure_residual(result: DeformationResult, t) -> float:
    spec = result.spec
    if t == 0:
        return 0.0
    an = analysis(spec)
    W = [an.wedge_op(j + 1, 1) for j in range(spec.dim)]
    modes = _exp_modes(result, t, 1e-14, 60)
    total = 0.0
    for m, v in modes.items():
        if not any(m):
            continue
        dv = sum(mj * (Wj @ v) for mj, Wj in zip(m, W) if mj)
        total += float(np.vdot(dv, dv).real)
    return math.sqrt(total)


def residual_slope(result: DeformationResult, ts):
    """Log-log slope of closure_residual over the sample radii."""
    ts = [float(t) for t in ts]
    rs = [closure_residual(result, t) for t in ts]
    pairs = [(math.log(t), math.log(r)) for t, r in zip(ts, rs) if r > 0]
    if len(pairs) < 2:
        return None, rs
    xs, ys = zip(*pairs)
    slope = np.polyfit(xs, ys, 1)[0]
    return float(slope), rs


def derivative_check(result: DeformationResult, h=1e-4):
    """Central-difference derivative at t=0 against the seed tangent."""
    plus = evaluate(result, h)
    minus = evaluate(result, -h)
    fd = (plus - minus).scale(1.0 / (2 * h))
    tangent = rho_hat_tf(result.seed.a1,
                         TrigForm.constant(result.spec.phi0.to_float()))
    return (fd - tangent).norm() / max(1.0, tangent.norm())


# ---------------------------------------------------------------------------
# majorant monitoring


def majorant_report(result: DeformationResult):
    """Fit b, c with ||a_k||/k! <= (b/16c) c^k / k^2 for computed orders."""
    norms = {k: result.coeffs[k].norm() for k in result.coeffs}
    ks = [k for k, v in sorted(norms.items()) if v > 0]
    if len(ks) <= 1:
        return {"b": float(16 * norms.get(1, 0.0)), "c": 1.0,
                "radius": None, "holds": True,
                "note": "series terminates; any radius works"}
    xs = np.array(ks, dtype=float)
    ys = np.array([math.log(norms[k] * k * k) for k in ks])
    slope, intercept = np.polyfit(xs, ys, 1)
    c = float(math.exp(slope))
    b = float(16 * c * math.exp(intercept))
    # inflate b until the bound dominates every computed order
    for k in ks:
        need = norms[k] * k * k * 16 * c / (c ** k)
        b = max(b, float(need) * (1 + 1e-12))
    holds = all(norms[k] <= (b / (16 * c)) * c ** k / (k * k) * (1 + 1e-9)
                for k in ks)
    return {"b": b, "c": c, "radius": 1.0 / c, "holds": bool(holds)}


# ---------------------------------------------------------------------------
# period map


def first_order_period(result: DeformationResult) -> MultiForm:
    """de Rham class (constant part) of the first-order tangent."""
    tangent = rho_hat_tf(result.seed.a1,
                         TrigForm.constant(result.spec.phi0.to_float()))
    return tangent.coeff((0,) * result.spec.dim)


def period_coefficients(result: DeformationResult):
    """Per-order de Rham classes of the deformed calibration."""
    state = _GradedState(result.spec)
    for k, alpha in result.coeffs.items():
        state.alphas[k] = alpha
    out = []
    for m in range(0, result.order + 1):
        out.append(state.phi_coefficient(m).coeff((0,) * result.spec.dim))
    return out


def period_map(spec: CalibrationSpec, sys: HodgeSystem, results):
    """Differential of the period map on a family of deformation curves.

    Columns are the first-order de Rham classes; full rank against the
    level-1 harmonic dimension certifies local injectivity on the torus.
    """
    cols = [multiform_to_vec(first_order_period(r)).real for r in results]
    dP = np.array(cols).T
    rank = float_rank(dP) if cols else 0
    h1 = sys.dims[1]
    rep = {"rank": int(rank), "h1_dim": int(h1),
           "locally_injective": bool(rank == h1), "matrix": dP}
    if spec.kind == "cy":
        om0 = spec.phi0.parts[2].to_float()
        Om0 = spec.phi0.parts[0].to_float() + \
            spec.phi0.parts[1].to_float().scale(1j)
        worst = 0.0
        for r in results:
            per = first_order_period(r)
            alpha = per.parts[0] + per.parts[1].scale(1j)
            beta = per.parts[2]
            resid = (wedge(alpha, om0) + wedge(Om0, beta)).norm()
            worst = max(worst, resid)
        rep["volume_pairing_residual"] = float(worst)
    return rep
