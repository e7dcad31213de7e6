"""Polynomials over derivative atoms and their truncated power series in epsilon.

An atom is a symbol carrying a partial-derivative multi-index, e.g. ``d_x^2 q0``
or ``d_y nu_z``.  A monomial is a sorted tuple of atoms (repeats allowed), so a
polynomial has one canonical dict representation regardless of the order in
which terms were produced.
"""
from __future__ import annotations

from math import factorial
from typing import Dict, Iterable, Iterator, NamedTuple, Tuple

from .coeff import ExactCoeff

__all__ = [
    "MAX_DERIV",
    "ORDER",
    "Atom",
    "AtomPolynomial",
    "DerivativeOverflow",
    "TruncatedSeries",
    "atom",
]

#: highest power of epsilon retained
ORDER = 4
#: highest derivative order per axis an atom may carry
MAX_DERIV = 4


class DerivativeOverflow(ArithmeticError):
    """An expansion needed a derivative beyond :data:`MAX_DERIV`."""


class Atom(NamedTuple):
    base: str
    dx: int = 0
    dy: int = 0

    def derive(self, axis: int, times: int = 1) -> "Atom":
        dx, dy = (self.dx + times, self.dy) if axis == 0 else (self.dx, self.dy + times)
        if dx > MAX_DERIV or dy > MAX_DERIV:
            raise DerivativeOverflow(
                f"derivative order of {self.base} exceeds {MAX_DERIV} (dx={dx}, dy={dy})"
            )
        return Atom(self.base, dx, dy)

    def __str__(self):
        parts = []
        if self.dx:
            parts.append("d_x" if self.dx == 1 else f"d_x^{self.dx}")
        if self.dy:
            parts.append("d_y" if self.dy == 1 else f"d_y^{self.dy}")
        return " ".join(parts + [self.base])


def atom(base: str, dx: int = 0, dy: int = 0) -> "AtomPolynomial":
    """The polynomial consisting of a single atom."""
    return AtomPolynomial({(Atom(base, dx, dy),): ExactCoeff(1)})


Monomial = Tuple[Atom, ...]


def _merge(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    return tuple(sorted(a + b))


class AtomPolynomial:
    """Sparse polynomial: ``{monomial: ExactCoeff}`` with no zero entries."""

    __slots__ = ("terms",)

    def __init__(self, terms: Dict[Monomial, ExactCoeff] | None = None):
        self.terms = {} if terms is None else {k: v for k, v in terms.items() if v}

    @classmethod
    def constant(cls, value) -> "AtomPolynomial":
        value = ExactCoeff.coerce(value)
        return cls({(): value}) if value else cls()

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, AtomPolynomial):
            other = AtomPolynomial.constant(other)
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __iter__(self) -> Iterator[Tuple[Monomial, ExactCoeff]]:
        return iter(self.canonical_items())

    def canonical_items(self):
        return sorted(self.terms.items(), key=lambda kv: (len(kv[0]), kv[0]))

    def atoms(self) -> set:
        return {a for mono in self.terms for a in mono}

    def _coerce(self, other) -> "AtomPolynomial":
        return other if isinstance(other, AtomPolynomial) else AtomPolynomial.constant(other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for mono, c in other.terms.items():
            v = out.get(mono)
            v = c if v is None else v + c
            if v:
                out[mono] = v
            else:
                out.pop(mono, None)
        return AtomPolynomial._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return AtomPolynomial._raw({k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, AtomPolynomial):
            c = ExactCoeff.coerce(other)
            if not c:
                return AtomPolynomial()
            return AtomPolynomial._raw({k: v * c for k, v in self.terms.items()})
        out: Dict[Monomial, ExactCoeff] = {}
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                mono = _merge(ma, mb)
                v = out.get(mono)
                p = ca * cb
                v = p if v is None else v + p
                if v:
                    out[mono] = v
                else:
                    del out[mono]
        return AtomPolynomial._raw(out)

    __rmul__ = __mul__

    @classmethod
    def _raw(cls, terms):
        obj = cls.__new__(cls)
        obj.terms = terms
        return obj

    def derivative(self, axis: int) -> "AtomPolynomial":
        """Partial derivative along ``axis`` (0 = x, 1 = y), by the product rule."""
        out = AtomPolynomial()
        for mono, c in self.terms.items():
            for i, a in enumerate(mono):
                # derivative of a repeated atom appears once per copy; summing is correct
                rest = mono[:i] + mono[i + 1:]
                out = out + AtomPolynomial._raw({_merge(rest, (a.derive(axis),)): c})
        return out

    def substitute(self, base: str, replacement: "AtomPolynomial") -> "AtomPolynomial":
        """Replace every underived occurrence of ``base`` (derivatives are carried along)."""
        out = AtomPolynomial()
        for mono, c in self.terms.items():
            term = AtomPolynomial.constant(c)
            for a in mono:
                if a.base == base:
                    r = replacement
                    for _ in range(a.dx):
                        r = r.derivative(0)
                    for _ in range(a.dy):
                        r = r.derivative(1)
                    term = term * r
                else:
                    term = term * AtomPolynomial._raw({(a,): ExactCoeff(1)})
            out = out + term
        return out

    def evaluate(self, values) -> object:
        """Numerically evaluate; ``values`` maps :class:`Atom` to numbers or arrays."""
        total = 0.0
        for mono, c in self.terms.items():
            term = float(c)
            for a in mono:
                term = term * values[a]
            total = total + term
        return total

    def __repr__(self):
        return f"AtomPolynomial({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        pieces = []
        for mono, c in self.canonical_items():
            body = " * ".join(f"({a})" if (a.dx or a.dy) else str(a) for a in mono)
            if not body:
                pieces.append(str(c))
            elif c == 1:
                pieces.append(body)
            elif c == -1:
                pieces.append("-" + body)
            else:
                pieces.append(f"{c}*{body}")
        return " + ".join(pieces).replace("+ -", "- ")


def _zero_coeffs():
    return [AtomPolynomial() for _ in range(ORDER + 1)]


class TruncatedSeries:
    """``c_0 + c_1 eps + ... + c_4 eps^4`` with :class:`AtomPolynomial` coefficients.

    Products discard every term of order ``eps^5`` and above.  Since the
    discarded terms form an ideal, truncated arithmetic is exactly associative.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[AtomPolynomial] | None = None):
        cs = list(coeffs) if coeffs is not None else []
        if len(cs) > ORDER + 1:
            cs = cs[: ORDER + 1]
        cs = [c if isinstance(c, AtomPolynomial) else AtomPolynomial.constant(c) for c in cs]
        cs.extend(AtomPolynomial() for _ in range(ORDER + 1 - len(cs)))
        self.coeffs = cs

    @classmethod
    def constant(cls, value) -> "TruncatedSeries":
        if isinstance(value, AtomPolynomial):
            return cls([value])
        return cls([AtomPolynomial.constant(value)])

    @classmethod
    def monomial(cls, poly, power: int = 0) -> "TruncatedSeries":
        """``poly * eps**power``."""
        if not isinstance(poly, AtomPolynomial):
            poly = AtomPolynomial.constant(poly)
        cs = _zero_coeffs()
        if power <= ORDER:
            cs[power] = poly
        return cls(cs)

    @classmethod
    def symbol(cls, base: str, dx: int = 0, dy: int = 0) -> "TruncatedSeries":
        return cls([atom(base, dx, dy)])

    def __getitem__(self, k: int) -> AtomPolynomial:
        return self.coeffs[k]

    def __bool__(self):
        return any(self.coeffs)

    def is_zero(self) -> bool:
        return not self

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            other = TruncatedSeries.constant(other)
        return all(a == b for a, b in zip(self.coeffs, other.coeffs))

    def __hash__(self):
        return hash(tuple(self.coeffs))

    def _coerce(self, other) -> "TruncatedSeries":
        return other if isinstance(other, TruncatedSeries) else TruncatedSeries.constant(other)

    def __add__(self, other):
        other = self._coerce(other)
        return TruncatedSeries([a + b for a, b in zip(self.coeffs, other.coeffs)])

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries([-a for a in self.coeffs])

    def __sub__(self, other):
        other = self._coerce(other)
        return TruncatedSeries([a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, (TruncatedSeries, AtomPolynomial)):
            c = ExactCoeff.coerce(other)
            return TruncatedSeries([a * c for a in self.coeffs])
        other = self._coerce(other)
        out = _zero_coeffs()
        for i, a in enumerate(self.coeffs):
            if not a:
                continue
            for j in range(ORDER + 1 - i):
                b = other.coeffs[j]
                if b:
                    out[i + j] = out[i + j] + a * b
        return TruncatedSeries(out)

    __rmul__ = __mul__

    def scale(self, c) -> "TruncatedSeries":
        return self * ExactCoeff.coerce(c)

    def shift_order(self, power: int) -> "TruncatedSeries":
        """Multiply by ``eps**power``."""
        return TruncatedSeries(_zero_coeffs()[:power] + self.coeffs[: ORDER + 1 - power])

    def __pow__(self, n: int):
        out = TruncatedSeries.constant(1)
        for _ in range(n):
            out = out * self
        return out

    def valuation(self) -> int:
        """Lowest power of eps with a nonzero coefficient (ORDER+1 for zero)."""
        for k, c in enumerate(self.coeffs):
            if c:
                return k
        return ORDER + 1

    def derivative(self, axis: int) -> "TruncatedSeries":
        return TruncatedSeries([c.derivative(axis) for c in self.coeffs])

    def atoms(self) -> set:
        return set().union(*(c.atoms() for c in self.coeffs))

    def evaluate(self, values, eps: float):
        return sum(c.evaluate(values) * eps ** k for k, c in enumerate(self.coeffs) if c)

    def __repr__(self):
        return f"TruncatedSeries({self})"

    def __str__(self):
        parts = []
        for k, c in enumerate(self.coeffs):
            if c:
                tag = "" if k == 0 else (" eps" if k == 1 else f" eps^{k}")
                parts.append(f"[{c}]{tag}")
        return " + ".join(parts) if parts else "0"


def series_add(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    return a + b


def series_mul(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    return a * b


def series_scale(a: TruncatedSeries, c) -> TruncatedSeries:
    return a.scale(c)

