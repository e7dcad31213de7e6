"""Operator programs: collide / stream / potential steps and the matrix templates they use.

A program is written in the same left-to-right product order as the operator
products it encodes (``V . S C . S C``); the rightmost step acts first.  Matrix
templates are ring-generic: they only add, negate and place the ``(cos, sin)``
pairs handed to them, so the same template builds per-site float matrices for
the lattice and exact series matrices for the symbolic expander.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Iterator, Mapping, Sequence, Tuple, Union

__all__ = [
    "Collide",
    "MatrixTemplate",
    "OperatorSequence",
    "Potential",
    "Step",
    "Stream",
    "TEMPLATES",
    "parse_program",
]

Entries = Dict[Tuple[int, int], object]


@dataclass(frozen=True)
class MatrixTemplate:
    """Sparse site-local matrix whose entries depend on named angles.

    ``build`` receives ``{label: (cos, sin)}`` plus the ring's one and returns
    the nonzero entries keyed by ``(row, col)``.
    """

    name: str
    kind: str  # "collision" | "potential"
    ncomp: int
    labels: Tuple[str, ...]
    build: Callable[[Mapping[str, tuple], object], Entries]

    def entries(self, trig: Mapping[str, tuple], one=1.0, transpose: bool = False) -> Entries:
        ent = self.build(trig, one)
        if transpose:
            ent = {(j, i): v for (i, j), v in ent.items()}
        return ent


def _rotation(trig, one):
    c, s = trig["alpha"]
    return {(0, 0): c, (0, 1): s, (1, 0): -s, (1, 1): c}


def _vpot(trig, one):
    c, s = trig["alpha"]
    return {(0, 0): c, (0, 1): -s, (1, 0): -s, (1, 1): c}


def _cx(trig, one):
    c1, s1 = trig["theta1"]
    c2, s2 = trig["theta2"]
    return {
        (0, 0): one,
        (1, 1): c1, (1, 5): -s1,
        (2, 2): c2, (2, 4): -s2,
        (3, 3): one,
        (4, 2): s2, (4, 4): c2,
        (5, 1): s1, (5, 5): c1,
    }


def _cy(trig, one):
    # the printed row 2 places sin(theta2) in column 4, which is not orthogonal
    # against row 3; the rotation acts on the (2, 3) pair
    c0, s0 = trig["theta0"]
    c2, s2 = trig["theta2"]
    return {
        (0, 0): c0, (0, 5): s0,
        (1, 1): one,
        (2, 2): c2, (2, 3): s2,
        (3, 2): -s2, (3, 3): c2,
        (4, 4): one,
        (5, 0): -s0, (5, 5): c0,
    }


def _vx(trig, one):
    c0, s0 = trig["beta0"]
    c2, s2 = trig["beta2"]
    return {
        (0, 0): one, (1, 1): one, (2, 2): one, (3, 3): one,
        (4, 2): -s2, (4, 4): c2,
        (5, 1): s0, (5, 5): c0,
    }


def _vy(trig, one):
    # Row 3 as printed reads (cos b3, sin b3) in columns (2, 3), which is not the
    # identity at b3 = 0.  The rotation-consistent form (sin b3, cos b3) is used;
    # the row-0 "o" entry is read as 0.
    c1, s1 = trig["beta1"]
    c3, s3 = trig["beta3"]
    return {
        (0, 0): one, (1, 1): one, (2, 2): one,
        (3, 2): s3, (3, 3): c3,
        (4, 4): one,
        (5, 0): -s1, (5, 5): c1,
    }


def _vy_printed(trig, one):
    c1, s1 = trig["beta1"]
    c3, s3 = trig["beta3"]
    return {
        (0, 0): one, (1, 1): one, (2, 2): one,
        (3, 2): c3, (3, 3): s3,
        (4, 4): one,
        (5, 0): -s1, (5, 5): c1,
    }


def _vy_negsin(trig, one):
    c1, s1 = trig["beta1"]
    c3, s3 = trig["beta3"]
    return {
        (0, 0): one, (1, 1): one, (2, 2): one,
        (3, 2): -s3, (3, 3): c3,
        (4, 4): one,
        (5, 0): -s1, (5, 5): c1,
    }


TEMPLATES: Dict[str, MatrixTemplate] = {
    t.name: t
    for t in (
        MatrixTemplate("C", "collision", 2, ("alpha",), _rotation),
        MatrixTemplate("Vpot", "potential", 2, ("alpha",), _vpot),
        MatrixTemplate("CX", "collision", 6, ("theta1", "theta2"), _cx),
        MatrixTemplate("CY", "collision", 6, ("theta0", "theta2"), _cy),
        MatrixTemplate("VX", "potential", 6, ("beta0", "beta2"), _vx),
        MatrixTemplate("VY", "potential", 6, ("beta1", "beta3"), _vy),
        # alternative readings of the V_Y row-3 entries, kept for certification
        MatrixTemplate("VY_printed", "potential", 6, ("beta1", "beta3"), _vy_printed),
        MatrixTemplate("VY_negsin", "potential", 6, ("beta1", "beta3"), _vy_negsin),
    )
}


@dataclass(frozen=True)
class Collide:
    op: str
    transpose: bool = False

    def __str__(self):
        return self.op + ("^T" if self.transpose else "")


@dataclass(frozen=True)
class Potential:
    op: str
    transpose: bool = False

    def __str__(self):
        return self.op + ("^T" if self.transpose else "")


@dataclass(frozen=True)
class Stream:
    components: Tuple[int, ...]
    axis: int  # 0 = x, 1 = y
    direction: int  # +1 or -1

    def __post_init__(self):
        if self.axis not in (0, 1):
            raise ValueError(f"stream axis must be 0 or 1, got {self.axis}")
        if self.direction not in (1, -1):
            raise ValueError(f"stream direction must be +1 or -1, got {self.direction}")

    def inverse(self) -> "Stream":
        return Stream(self.components, self.axis, -self.direction)

    def __str__(self):
        sign = "+" if self.direction > 0 else "-"
        return f"S{''.join(map(str, self.components))}^{sign}{'xy'[self.axis]}"


Step = Union[Collide, Stream, Potential]


@dataclass(frozen=True)
class OperatorSequence:
    """Steps in written (product) order; :meth:`execution_order` yields rightmost first."""

    steps: Tuple[Step, ...] = field(default_factory=tuple)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))

    def execution_order(self) -> Iterator[Tuple[int, Step]]:
        n = len(self.steps)
        for k in range(n - 1, -1, -1):
            yield k, self.steps[k]

    def __add__(self, other: "OperatorSequence") -> "OperatorSequence":
        return OperatorSequence(self.steps + other.steps, self.name or other.name)

    def __len__(self):
        return len(self.steps)

    def __str__(self):
        return " . ".join(str(s) for s in self.steps)


def parse_program(text: str, axis: int = 0, name: str = "") -> OperatorSequence:
    """Parse compact product notation such as ``"S0- C . S1+ C^T"``.

    Tokens: ``S<comps><+|->`` streams (one digit per component), ``<OP>`` or
    ``<OP>^T`` for a collision or potential template, ``.`` separators ignored.
    """
    steps = []
    for tok in text.replace(".", " ").split():
        if tok.startswith("S") and tok[-1] in "+-" and tok[1:-1].isdigit():
            comps = tuple(int(ch) for ch in tok[1:-1])
            steps.append(Stream(comps, axis, 1 if tok[-1] == "+" else -1))
            continue
        transpose = tok.endswith("^T")
        op = tok[:-2] if transpose else tok
        if op not in TEMPLATES:
            raise ValueError(f"unknown operator {op!r} in program")
        kind = TEMPLATES[op].kind
        steps.append(Collide(op, transpose) if kind == "collision" else Potential(op, transpose))
    return OperatorSequence(tuple(steps), name)


def check_program(seq: OperatorSequence, ncomp: int) -> None:
    for k, step in enumerate(seq.steps):
        if isinstance(step, Stream):
            bad = [c for c in step.components if not 0 <= c < ncomp]
            if bad:
                raise ValueError(f"step {k} ({step}): component index {bad} outside 0..{ncomp - 1}")
        else:
            t = TEMPLATES[step.op]
            if t.ncomp != ncomp:
                raise ValueError(f"step {k} ({step}): operator acts on {t.ncomp} components, field has {ncomp}")


def written(steps: Sequence[Step]) -> OperatorSequence:
    return OperatorSequence(tuple(steps))
