"""Exact coefficients in the quadratic field Q(sqrt 2)."""
from __future__ import annotations

from fractions import Fraction
from numbers import Rational

__all__ = ["ExactCoeff", "SQRT2", "INV_SQRT2"]


class ExactCoeff:
    """``r + s*sqrt(2)`` with ``r`` and ``s`` exact rationals."""

    __slots__ = ("r", "s")

    def __init__(self, r=0, s=0):
        self.r = r if isinstance(r, Fraction) else Fraction(r)
        self.s = s if isinstance(s, Fraction) else Fraction(s)

    @classmethod
    def coerce(cls, value) -> "ExactCoeff":
        if isinstance(value, ExactCoeff):
            return value
        if isinstance(value, (int, Rational)):
            return cls(value)
        raise TypeError(f"cannot represent {value!r} exactly")

    def __bool__(self):
        return bool(self.r) or bool(self.s)

    def __eq__(self, other):
        try:
            other = ExactCoeff.coerce(other)
        except TypeError:
            return NotImplemented
        return self.r == other.r and self.s == other.s

    def __hash__(self):
        return hash((self.r, self.s))

    def __neg__(self):
        return ExactCoeff(-self.r, -self.s)

    def __add__(self, other):
        other = ExactCoeff.coerce(other)
        return ExactCoeff(self.r + other.r, self.s + other.s)

    __radd__ = __add__

    def __sub__(self, other):
        other = ExactCoeff.coerce(other)
        return ExactCoeff(self.r - other.r, self.s - other.s)

    def __rsub__(self, other):
        return ExactCoeff.coerce(other) - self

    def __mul__(self, other):
        other = ExactCoeff.coerce(other)
        a, b, c, d = self.r, self.s, other.r, other.s
        return ExactCoeff(a * c + 2 * b * d, a * d + b * c)

    __rmul__ = __mul__

    def conjugate(self) -> "ExactCoeff":
        return ExactCoeff(self.r, -self.s)

    def inverse(self) -> "ExactCoeff":
        norm = self.r * self.r - 2 * self.s * self.s
        if norm == 0:
            raise ZeroDivisionError("ExactCoeff division by zero")
        return ExactCoeff(self.r / norm, -self.s / norm)

    def __truediv__(self, other):
        return self * ExactCoeff.coerce(other).inverse()

    def __rtruediv__(self, other):
        return ExactCoeff.coerce(other) * self.inverse()

    def __float__(self):
        return float(self.r) + float(self.s) * 2.0 ** 0.5

    def __repr__(self):
        return f"ExactCoeff({self.r}, {self.s})"

    def __str__(self):
        if not self.s:
            return str(self.r)
        if not self.r:
            return f"{self.s}*sqrt2"
        return f"({self.r} + {self.s}*sqrt2)"


SQRT2 = ExactCoeff(0, 1)
INV_SQRT2 = ExactCoeff(0, Fraction(1, 2))
