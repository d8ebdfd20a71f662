"""Trigonometric fields on T^n: calculus and operator identities."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from calorbits.exalg import Form, MultiForm
from calorbits.scalars import RATIONAL
from calorbits.torus import (EndoField, SupportCapExceeded, TrigForm,
                             VectorField, d, endo_apply, endo_mul,
                             interior_vf, lie_operator_L,
                             lie_operator_L_frame, lie_vf, nijenhuis,
                             rho_hat_tf, vf_bracket, wedge_tf)
from calorbits.verify import random_endofield, random_trigform


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 2))
def test_d_squared_zero(seed, p):
    rng = np.random.default_rng(seed)
    alpha = random_trigform(rng, 4, p, 2)
    assert d(d(alpha)).norm() < 1e-13 * max(1.0, alpha.norm())


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_reality_preserved_by_operations(seed):
    rng = np.random.default_rng(seed)
    alpha = random_trigform(rng, 4, 2, 2)
    a = random_endofield(rng, 4, 2)
    assert alpha.is_real(1e-12)
    assert d(alpha).is_real(1e-12)
    assert rho_hat_tf(a, alpha).is_real(1e-12)
    assert lie_operator_L(a, alpha).is_real(1e-12)


def test_d_on_single_mode_matches_symbol():
    coeff = MultiForm([Form.basis(3, (2,)).to_float()])
    alpha = TrigForm(3, (1,), {(1, 0, -2): coeff})
    out = d(alpha).coeff((1, 0, -2)).parts[0]
    expect = Form(3, 2, {(1, 2): 1j, (2, 3): 2j})
    assert (out - expect).norm() < 1e-14


def test_lie_derivative_cartan_formula():
    rng = np.random.default_rng(0)
    alpha = random_trigform(rng, 4, 2, 2)
    v = VectorField(4, {(0, 0, 0, 0): tuple(rng.standard_normal(4)),
                        (1, 0, -1, 0): tuple(rng.standard_normal(4) + 0j),
                        (-1, 0, 1, 0): tuple(rng.standard_normal(4) + 0j)})
    lhs = lie_vf(v, alpha)
    rhs = interior_vf(v, d(alpha)) + d(interior_vf(v, alpha))
    assert (lhs - rhs).norm() < 1e-12


def test_derived_operator_two_paths():
    rng = np.random.default_rng(1)
    for _ in range(5):
        alpha = random_trigform(rng, 4, 2, 2)
        a = random_endofield(rng, 4, 2)
        two = lie_operator_L(a, alpha) - lie_operator_L_frame(a, alpha)
        assert two.norm() < 1e-11


def test_commutator_equals_torsion_minus_product():
    from calorbits.torus import interior_nij
    rng = np.random.default_rng(2)
    for _ in range(5):
        alpha = random_trigform(rng, 4, 2, 2)
        a = random_endofield(rng, 4, 2)
        b = random_endofield(rng, 4, 2)
        lhs = lie_operator_L(a, rho_hat_tf(b, alpha)) - \
            rho_hat_tf(b, lie_operator_L(a, alpha))
        rhs = interior_nij(nijenhuis(a, b), alpha) - \
            lie_operator_L(endo_mul(a, b), alpha)
        assert (lhs - rhs).norm() < 1e-10


def test_torsion_vanishes_for_identity_and_constants():
    n = 4
    ident = EndoField.constant(tuple(tuple(1.0 if i == j else 0.0
                                           for j in range(n))
                                     for i in range(n)), n)
    assert all(v.is_zero() for v in nijenhuis(ident, ident).values())
    rng = np.random.default_rng(3)
    const = EndoField.constant(tuple(tuple(float(x) for x in row)
                                     for row in rng.standard_normal((n, n))),
                               n)
    assert all(v.is_zero() for v in nijenhuis(const, const).values())


def test_rational_identities_exact():
    rng = np.random.default_rng(4)
    alpha = random_trigform(rng, 3, 1, 1, kind=RATIONAL)
    a = random_endofield(rng, 3, 1, kind=RATIONAL)
    assert d(d(alpha)).is_zero()
    two = lie_operator_L(a, alpha) - lie_operator_L_frame(a, alpha)
    assert two.is_zero()


def test_vector_field_bracket_antisymmetry():
    rng = np.random.default_rng(5)
    mk = lambda: VectorField(3, {(0, 0, 0): tuple(rng.standard_normal(3)),
                                 (1, -1, 0): tuple(rng.standard_normal(3)
                                                   + 0j),
                                 (-1, 1, 0): tuple(rng.standard_normal(3)
                                                   + 0j)})
    x, y = mk(), mk()
    assert (vf_bracket(x, y) + vf_bracket(y, x)).norm() < 1e-12


def test_endomorphism_application_is_composition():
    rng = np.random.default_rng(6)
    a = random_endofield(rng, 3, 1)
    b = random_endofield(rng, 3, 1)
    x = VectorField(3, {(0, 0, 0): tuple(rng.standard_normal(3))})
    lhs = endo_apply(endo_mul(a, b), x)
    rhs = endo_apply(a, endo_apply(b, x))
    assert (lhs - rhs).norm() < 1e-12


def test_wedge_distributes_over_modes():
    rng = np.random.default_rng(7)
    beta = random_trigform(rng, 4, 1, 1)
    alpha = random_trigform(rng, 4, 2, 1)
    out = wedge_tf(beta, alpha)
    # product of trig polynomials: frequencies add
    freqs = {tuple(x + y for x, y in zip(kb, ka))
             for kb in beta.modes for ka in alpha.modes}
    assert set(out.modes).issubset(freqs)


def test_truncate_drops_small_modes():
    coeff = MultiForm([Form.basis(3, (1,)).to_float()])
    alpha = TrigForm(3, (1,), {(1, 0, 0): coeff,
                               (0, 1, 0): coeff.scale(1e-14)})
    out = alpha.truncate(1e-10)
    assert set(out.modes) == {(1, 0, 0)}


def test_support_cap_enforced():
    import calorbits.torus as torus_mod
    coeff = MultiForm([Form.basis(2, (1,)).to_float()])
    old = torus_mod.SUPPORT_CAP
    torus_mod.SUPPORT_CAP = 3
    try:
        with pytest.raises(SupportCapExceeded):
            TrigForm(2, (1,), {(i, 0): coeff for i in range(1, 6)})
    finally:
        torus_mod.SUPPORT_CAP = old
