"""Exact complex-rational scalar arithmetic."""

from hypothesis import given, strategies as st

from calorbits.scalars import FLOAT, RATIONAL, QC, coerce_scalar, join_kind

rationals = st.fractions(min_value=-50, max_value=50, max_denominator=20)
qcs = st.builds(QC, rationals, rationals)


@given(qcs, qcs)
def test_addition_commutes(a, b):
    assert a + b == b + a


@given(qcs, qcs, qcs)
def test_multiplication_distributes(a, b, c):
    assert a * (b + c) == a * b + a * c


@given(qcs)
def test_conjugation_involution(a):
    assert a.conjugate().conjugate() == a


@given(qcs)
def test_modulus_matches_conjugate_product(a):
    sq = a * a.conjugate()
    assert sq.im == 0
    assert sq.re == a.re * a.re + a.im * a.im


@given(qcs.filter(bool))
def test_division_inverts_multiplication(a):
    assert (QC(1) / a) * a == QC(1)


def test_imaginary_unit_squares_to_minus_one():
    i = QC(0, 1)
    assert i * i == QC(-1)


def test_coercion_and_kind_join():
    assert coerce_scalar(2, RATIONAL) == QC(2)
    assert complex(coerce_scalar(2, FLOAT)) == 2.0
    assert join_kind(FLOAT, FLOAT) == FLOAT
    assert join_kind(RATIONAL, RATIONAL) == RATIONAL
