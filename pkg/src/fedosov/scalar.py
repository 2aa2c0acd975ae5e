"""Exact Gaussian rationals a + b*i with arbitrary-precision rational parts."""

from __future__ import annotations

from fractions import Fraction

from gmpy2 import mpq

__all__ = ["Scalar", "Q", "ZERO", "ONE", "I", "as_scalar", "rational"]


def rational(value) -> mpq:
    """Coerce int, Fraction, mpq or a "p/q" string into an mpq."""
    if isinstance(value, str):
        return mpq(Fraction(value.strip()))
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    return mpq(value)


Q = rational


class Scalar:
    """An element of Q(i). Immutable; equality is exact."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = re if isinstance(re, mpq) else rational(re)
        self.im = im if isinstance(im, mpq) else rational(im)

    @classmethod
    def _raw(cls, re: mpq, im: mpq) -> Scalar:
        s = object.__new__(cls)
        s.re = re
        s.im = im
        return s

    def __add__(self, other):
        if not isinstance(other, Scalar):
            other = as_scalar(other)
        return Scalar._raw(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, Scalar):
            other = as_scalar(other)
        return Scalar._raw(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return as_scalar(other) - self

    def __neg__(self):
        return Scalar._raw(-self.re, -self.im)

    def __mul__(self, other):
        if not isinstance(other, Scalar):
            other = as_scalar(other)
        a, b, c, d = self.re, self.im, other.re, other.im
        if not b:
            if not d:
                return Scalar._raw(a * c, _Z)
            return Scalar._raw(a * c, a * d)
        if not d:
            return Scalar._raw(a * c, b * c)
        return Scalar._raw(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Scalar):
            other = as_scalar(other)
        if not other:
            raise ZeroDivisionError("division by the zero Scalar")
        c, d = other.re, other.im
        n = c * c + d * d
        return self * Scalar._raw(c / n, -d / n)

    def __rtruediv__(self, other):
        return as_scalar(other) / self

    def __pow__(self, k: int):
        if k < 0:
            return ONE / (self**-k)
        out = ONE
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conjugate(self) -> Scalar:
        return Scalar._raw(self.re, -self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if isinstance(other, Scalar):
            return self.re == other.re and self.im == other.im
        try:
            other = as_scalar(other)
        except TypeError:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def is_real(self) -> bool:
        return not self.im

    def __repr__(self):
        return f"Scalar({self})"

    def __str__(self):
        if not self.im:
            return str(self.re)
        if not self.re:
            if self.im == 1:
                return "i"
            if self.im == -1:
                return "-i"
            return f"{self.im}*i"
        im = "i" if abs(self.im) == 1 else f"{abs(self.im)}*i"
        sign = "+" if self.im > 0 else "-"
        return f"({self.re}{sign}{im})"


_Z = mpq(0)


def as_scalar(value) -> Scalar:
    if isinstance(value, Scalar):
        return value
    if isinstance(value, complex):
        raise TypeError("floating-point complex values are not exact")
    if isinstance(value, float):
        raise TypeError("floats are not exact; pass a Fraction or a 'p/q' string")
    if isinstance(value, (int, Fraction, str, mpq)):
        return Scalar._raw(rational(value), _Z)
    raise TypeError(f"cannot convert {type(value).__name__} to Scalar")


ZERO = Scalar()
ONE = Scalar(1)
I = Scalar(0, 1)
