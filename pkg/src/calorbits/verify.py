"""Randomized verification suite for the torus operator identities.

Checks, over seeded random trigonometric fields:
  * d_squared_zero:        d(d(alpha)) == 0
  * derivation_two_path:   the derived operator L_a computed operator-wise
                           (rho_hat d - d rho_hat) agrees with its
                           frame-by-frame assembly from vector-field Lie
                           derivatives
  * commutator_bracket:    [L_a, rho_hat_b] == i_{N(a,b)} - L_{ab}
  * quadratic_membership:  for a closed model calibration and a field a
                           with d rho_hat_a Phi0 == 0,
                           d rho_hat_a rho_hat_a Phi0 == -G(a,a) Phi0 and
                           the result fits in the E^2 fiber bundle
  * nested_membership:     iterated commutators [rho_hat_a, [..., G(a,a)]]
                           applied to Phi0 stay in the E^2 fiber bundle
  * identity and constant fields have vanishing generalized torsion:
                           N(id, id) == 0, N(const, const) == 0 exactly

Float runs bound residuals; rational runs must be exactly zero.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations

import numpy as np

from .exalg import MultiForm, multiform_to_vec
from .orbits import analysis, model_calibration
from .scalars import FLOAT, RATIONAL, QC
from .torus import (EndoField, TrigForm, d, endo_mul, g_pair_operator,
                    interior_nij, lie_operator_L, lie_operator_L_frame,
                    nijenhuis, rho_hat_tf)
from .exalg import Form


def _rand_freq(rng, n, F):
    while True:
        k = tuple(int(x) for x in rng.integers(-F, F + 1, size=n))
        if any(k):
            return k


def _rand_scalar(rng, kind):
    if kind == RATIONAL:
        return QC(Fraction(int(rng.integers(-3, 4)), int(rng.integers(1, 4))),
                  Fraction(int(rng.integers(-3, 4)), int(rng.integers(1, 4))))
    return complex(rng.standard_normal(), rng.standard_normal())


def _conj_fiber(M):
    return tuple(tuple(x.conjugate() for x in row) for row in M)


def _real_scalar(rng, kind):
    if kind == RATIONAL:
        return QC(Fraction(int(rng.integers(-3, 4)), int(rng.integers(1, 4))))
    return float(rng.standard_normal())


def random_endofield(rng, n, F, n_modes=1, kind=FLOAT,
                     with_constant=True) -> EndoField:
    modes = {}
    if with_constant:
        modes[(0,) * n] = tuple(
            tuple(_real_scalar(rng, kind) for _ in range(n))
            for _ in range(n))
    for _ in range(n_modes):
        k = _rand_freq(rng, n, F)
        M = tuple(tuple(_rand_scalar(rng, kind) for _ in range(n))
                  for _ in range(n))
        modes[k] = M
        modes[tuple(-x for x in k)] = _conj_fiber(M)
    return EndoField(n, modes, kind)


def random_trigform(rng, n, degree, F, n_modes=2, kind=FLOAT) -> TrigForm:
    indices = list(combinations(range(1, n + 1), degree))
    modes = {}
    for _ in range(n_modes):
        k = _rand_freq(rng, n, F)
        coeffs = {}
        for _ in range(min(3, len(indices))):
            idx = indices[int(rng.integers(len(indices)))]
            coeffs[idx] = _rand_scalar(rng, kind)
        f = Form(n, degree, coeffs, kind)
        modes[k] = MultiForm([f])
        modes[tuple(-x for x in k)] = MultiForm([f.conj()])
    return TrigForm(n, (degree,), modes, kind)


def _norm(x):
    return float(x.norm())


def _e2_fit_residual(spec, alpha: TrigForm):
    an = analysis(spec)
    B = an.ek_basis(2)
    worst = 0.0
    for _, mf in alpha.modes.items():
        vec = multiform_to_vec(mf)
        resid = np.linalg.norm(vec - B @ (B.T @ vec))
        worst = max(worst, resid / max(1.0, np.linalg.norm(vec)))
    return worst


def identity_suite(trials=100, freq_bound=2, seed=0, scalar=FLOAT,
                   tol=1e-10, n=4):
    """Run the identity suite; returns per-identity max residuals."""
    rng = np.random.default_rng(seed)
    res = {"d_squared_zero": 0.0, "derivation_two_path": 0.0,
           "commutator_bracket": 0.0}
    for _ in range(trials):
        degree = int(rng.integers(1, n - 1))
        alpha = random_trigform(rng, n, degree, freq_bound, kind=scalar)
        a = random_endofield(rng, n, freq_bound, kind=scalar)
        b = random_endofield(rng, n, freq_bound, kind=scalar)
        res["d_squared_zero"] = max(res["d_squared_zero"], _norm(d(d(alpha))))
        two = lie_operator_L(a, alpha) - lie_operator_L_frame(a, alpha)
        res["derivation_two_path"] = max(res["derivation_two_path"],
                                         _norm(two))
        lhs = lie_operator_L(a, rho_hat_tf(b, alpha)) - \
            rho_hat_tf(b, lie_operator_L(a, alpha))
        rhs = interior_nij(nijenhuis(a, b), alpha) - \
            lie_operator_L(endo_mul(a, b), alpha)
        res["commutator_bracket"] = max(res["commutator_bracket"],
                                        _norm(lhs - rhs))
    if scalar == FLOAT:
        res.update(_membership_checks(rng, trials=max(4, trials // 10)))
    res.update(_torsion_free_checks(n))
    passed = all(v <= (0.0 if scalar == RATIONAL else tol)
                 for v in res.values())
    return {"trials": trials, "freq_bound": freq_bound,
            "seed": seed, "scalar": scalar, "tol": tol,
            "residuals": res, "passed": bool(passed)}


def _membership_checks(rng, trials):
    """Quadratic and nested-commutator membership on the symplectic model."""
    from . import deform
    spec = model_calibration("symplectic", dim=4)
    phi0 = TrigForm.constant(spec.phi0.to_float())
    quad = 0.0
    nested = 0.0
    for _ in range(trials):
        v = rng.standard_normal(4)
        a = deform.exact_seed(spec, _rand_freq(rng, 4, 2), v).a1
        lhs = d(rho_hat_tf(a, rho_hat_tf(a, phi0)))
        rhs = g_pair_operator(a, a, phi0).scale(-1.0)
        quad = max(quad, _norm(lhs - rhs))
        quad = max(quad, _e2_fit_residual(spec, lhs))
        for depth in (1, 2):
            layer = deform._nested_commutator({1: a}, [1] * depth, (1, 1),
                                              phi0)
            nested = max(nested, _e2_fit_residual(spec, layer))
    return {"quadratic_membership": quad, "nested_membership": nested}


def _torsion_free_checks(n):
    ident = EndoField.constant(tuple(tuple(1.0 if i == j else 0.0
                                           for j in range(n))
                                     for i in range(n)), n)
    rng = np.random.default_rng(123)
    const = EndoField.constant(tuple(tuple(float(x) for x in row)
                                     for row in rng.standard_normal((n, n))),
                               n)
    r1 = sum(v.norm() for v in nijenhuis(ident, ident).values())
    r2 = sum(v.norm() for v in nijenhuis(const, const).values())
    return {"identity_torsion": float(r1), "constant_torsion": float(r2)}
