"""Symbolic expansion of collide / stream / potential programs in powers of epsilon."""
from __future__ import annotations

from fractions import Fraction
from math import factorial
from typing import Dict, List, Mapping, Sequence, Tuple

from ..program import Collide, OperatorSequence, Potential, Stream, TEMPLATES
from .algebra import ORDER, Atom, AtomPolynomial, DerivativeOverflow, TruncatedSeries
from .coeff import ExactCoeff, INV_SQRT2

__all__ = [
    "AngleSpec",
    "expand_sequence",
    "field_vector",
    "stream_expand",
    "trig_expand",
    "UnsupportedAngle",
]


class UnsupportedAngle(ValueError):
    pass


OFFSETS = ("0", "pi/4")


def trig_expand(angle: TruncatedSeries, offset: str = "0") -> Tuple[TruncatedSeries, TruncatedSeries]:
    """``(cos(offset + angle), sin(offset + angle))`` truncated at eps^4.

    ``angle`` must vanish at eps^0 so the Maclaurin sums terminate.
    """
    if offset not in OFFSETS:
        raise UnsupportedAngle(f"offset {offset!r} not supported (use one of {OFFSETS})")
    if angle[0]:
        raise UnsupportedAngle(f"angle has a nonzero eps^0 term: {angle[0]}")
    cos = TruncatedSeries.constant(1)
    sin = TruncatedSeries.constant(0)
    power = TruncatedSeries.constant(1)
    # angle is O(eps), so angle**k vanishes for k > ORDER
    for k in range(1, ORDER + 1):
        power = power * angle
        if not power:
            break
        term = power.scale(Fraction(1, factorial(k)))
        if k % 4 == 1:
            sin = sin + term
        elif k % 4 == 2:
            cos = cos - term
        elif k % 4 == 3:
            sin = sin - term
        else:
            cos = cos + term
    if offset == "pi/4":
        cos, sin = (cos - sin).scale(INV_SQRT2), (cos + sin).scale(INV_SQRT2)
    return cos, sin


class _Shifter:
    """Caches the Taylor expansion ``f(r - direction*eps*e_axis)`` of monomials."""

    def __init__(self, axis: int, direction: int):
        self.axis = axis
        self.direction = direction
        self._atoms: Dict[Tuple[Atom, int], TruncatedSeries] = {}
        self._monos: Dict[Tuple[tuple, int], TruncatedSeries] = {}

    def atom(self, a: Atom, depth: int) -> TruncatedSeries:
        """Taylor series of one atom through eps^depth."""
        key = (a, depth)
        s = self._atoms.get(key)
        if s is None:
            coeffs = []
            d = a
            for k in range(depth + 1):
                if k:
                    d = d.derive(self.axis)
                c = ExactCoeff(Fraction((-self.direction) ** k, factorial(k)))
                coeffs.append(AtomPolynomial({(d,): c}))
            s = TruncatedSeries(coeffs)
            self._atoms[key] = s
        return s

    def monomial(self, mono: tuple, depth: int) -> TruncatedSeries:
        key = (mono, depth)
        s = self._monos.get(key)
        if s is None:
            s = TruncatedSeries.constant(1)
            for a in mono:
                s = s * self.atom(a, depth)
            self._monos[key] = s
        return s

    def shift(self, series: TruncatedSeries) -> TruncatedSeries:
        acc: List[Dict] = [dict() for _ in range(ORDER + 1)]
        for p, poly in enumerate(series.coeffs):
            for mono, c in poly.terms.items():
                shifted = self.monomial(mono, ORDER - p)
                for k in range(ORDER + 1 - p):
                    for m2, c2 in shifted.coeffs[k].terms.items():
                        bucket = acc[p + k]
                        v = bucket.get(m2)
                        v = c * c2 if v is None else v + c * c2
                        bucket[m2] = v
        return TruncatedSeries([AtomPolynomial(b) for b in acc])


_SHIFTERS: Dict[Tuple[int, int], _Shifter] = {}


def _shifter(axis: int, direction: int) -> _Shifter:
    key = (axis, direction)
    if key not in _SHIFTERS:
        _SHIFTERS[key] = _Shifter(axis, direction)
    return _SHIFTERS[key]


def stream_expand(vector: Sequence[TruncatedSeries], spec: Stream) -> List[TruncatedSeries]:
    """Stream the listed components one lattice unit: ``q_c(r) <- q_c(r - dir*eps*e_axis)``.

    Every atom in a streamed component is shifted jointly, since all factors of
    a product are read from the same upstream site.
    """
    sh = _shifter(spec.axis, spec.direction)
    out = list(vector)
    for c in spec.components:
        out[c] = sh.shift(vector[c])
    return out


AngleSpec = Tuple[TruncatedSeries, str]


def _apply_matrix(entries: Mapping[Tuple[int, int], object], vector: Sequence[TruncatedSeries]):
    rows: Dict[int, TruncatedSeries] = {}
    for (i, j), v in entries.items():
        term = vector[j] * v if not _is_one(v) else vector[j]
        rows[i] = rows[i] + term if i in rows else term
    return [rows.get(i, TruncatedSeries()) for i in range(len(vector))]


def _is_one(v) -> bool:
    return isinstance(v, (int, float)) and v == 1


class _TrigCache:
    def __init__(self, angles: Mapping[str, AngleSpec]):
        self.angles = angles
        self._cache: Dict[str, tuple] = {}

    def __getitem__(self, label):
        if label not in self._cache:
            if label not in self.angles:
                raise KeyError(f"no angle series supplied for {label!r}")
            series, offset = self.angles[label]
            self._cache[label] = trig_expand(series, offset)
        return self._cache[label]


def expand_sequence(
    seq: OperatorSequence,
    initial: Sequence[TruncatedSeries],
    angles: Mapping[str, Mapping[str, AngleSpec]],
) -> List[TruncatedSeries]:
    """Apply ``seq`` (rightmost step first) to a symbolic field vector.

    ``angles`` maps an operator name to ``{angle label: (series, offset)}``.
    """
    trig = {op: _TrigCache(spec) for op, spec in angles.items()}
    vec = list(initial)
    for k, step in seq.execution_order():
        try:
            if isinstance(step, Stream):
                vec = stream_expand(vec, step)
            else:
                tmpl = TEMPLATES[step.op]
                if len(vec) != tmpl.ncomp:
                    raise ValueError(f"{step.op} acts on {tmpl.ncomp} components, vector has {len(vec)}")
                ent = tmpl.entries(trig[step.op], one=1, transpose=step.transpose)
                vec = _apply_matrix(ent, vec)
        except DerivativeOverflow as exc:
            raise DerivativeOverflow(f"step {k} ({step}): {exc}") from exc
    return vec


def field_vector(ncomp: int) -> List[TruncatedSeries]:
    """The generic field ``(q0, q1, ...)`` as series."""
    return [TruncatedSeries.symbol(f"q{i}") for i in range(ncomp)]
