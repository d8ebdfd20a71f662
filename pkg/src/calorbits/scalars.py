"""Scalar tower: 64-bit complex floats and exact complex rationals.

Identity suites run on exact complex rationals (pairs of Fraction); all
spectral/linear-algebra work runs on Python/numpy complex floats.  Both
scalar kinds support +, -, *, /, conjugate() and conversion to complex,
so the algebra layers above are written once, generically.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational


class QC:
    """Complex number with exact rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", Fraction(re))
        object.__setattr__(self, "im", Fraction(im))

    def __setattr__(self, name, value):
        raise AttributeError("QC is immutable")

    # -- arithmetic -------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, QC):
            return other
        if isinstance(other, Rational):
            return QC(other)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return QC(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return QC(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return QC(o.re - self.re, o.im - self.im)

    def __neg__(self):
        return QC(-self.re, -self.im)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return QC(self.re * o.re - self.im * o.im,
                  self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        d = o.re * o.re + o.im * o.im
        if d == 0:
            raise ZeroDivisionError("division by zero QC")
        return QC((self.re * o.re + self.im * o.im) / d,
                  (self.im * o.re - self.re * o.im) / d)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return o / self

    # -- structure --------------------------------------------------
    def conjugate(self):
        return QC(self.re, -self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __abs__(self):
        return abs(complex(self))

    def __repr__(self):
        return f"QC({self.re!r}, {self.im!r})"


FLOAT = "float"
RATIONAL = "rational"
KINDS = (FLOAT, RATIONAL)


def scalar_zero(kind):
    return QC(0) if kind == RATIONAL else 0j


def scalar_one(kind):
    return QC(1) if kind == RATIONAL else 1 + 0j


def scalar_i(kind):
    return QC(0, 1) if kind == RATIONAL else 1j


def coerce_scalar(value, kind):
    """Coerce a python number (or QC) into the requested scalar kind."""
    if kind == RATIONAL:
        if isinstance(value, QC):
            return value
        if isinstance(value, complex):
            raise TypeError("cannot coerce float complex into rational scalar")
        return QC(value)
    if isinstance(value, QC):
        return complex(value)
    return complex(value)


def join_kind(k1, k2):
    if k1 != k2:
        raise ValueError(f"scalar kind mismatch: {k1} vs {k2}")
    return k1
