"""Operator programs of the KdV and Maxwell schemes, shared by the lattice and the series engine.

The programs are kept verbatim in product notation.  On column vectors the
printed collision products reproduce the published limits only when every
collision is read with the opposite rotation sense, i.e. ``C`` executes as
``C^T`` and vice versa (the same reading under which ``C`` turns ``|01>`` into
``cos|01> + sin|10>``).  :func:`executed` applies that reading; potentials are
used exactly as printed.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Dict, Tuple

from .program import Collide, OperatorSequence, parse_program
from .series.algebra import TruncatedSeries, atom

__all__ = [
    "KDV_VARIANTS",
    "KDV_PRINTED",
    "MAXWELL_UX",
    "MAXWELL_UY",
    "VY_FORMS",
    "executed",
    "kdv_program",
    "kdv_series_angles",
    "maxwell_program",
    "maxwell_series_angles",
]

KDV_VARIANTS = ("NonUnitaryPotential", "UnitaryV1", "UnitaryV2")

KDV_PRINTED: Dict[str, str] = {
    "NonUnitaryPotential": "Vpot S0+ C S1- C^T S0- C S1+ C^T S0- C^T S1+ C S0+ C^T S1- C",
    "UnitaryV1": "S0- C S0+ C S1+ C S1- C^T S0- C^T S0+ C^T S1+ C^T S1- C",
    "UnitaryV2": "C S0- C S1+ C S0- C S1+ C^T S0+ C^T S1- C^T S0+ C^T S1-",
}

MAXWELL_UX = "S25+ CX^T S25- CX S14- CX^T S14+ CX S25- CX S25+ CX^T S14+ CX S14- CX^T"
MAXWELL_UY = "S25+ CY^T S25- CY S03- CY^T S03+ CY S25- CY S25+ CY^T S03+ CY S03- CY^T"

#: readings of the V_Y row-3 entries: resolved rotation form, printed, and the opposite sign
VY_FORMS = ("VY", "VY_printed", "VY_negsin")


def executed(seq: OperatorSequence) -> OperatorSequence:
    """Swap ``C <-> C^T`` on every collision step (see module docstring)."""
    steps = tuple(Collide(s.op, not s.transpose) if isinstance(s, Collide) else s for s in seq.steps)
    return OperatorSequence(steps, seq.name)


def kdv_program(variant: str, printed: bool = False) -> OperatorSequence:
    if variant not in KDV_PRINTED:
        raise ValueError(f"unknown KdV variant {variant!r}; expected one of {KDV_VARIANTS}")
    seq = parse_program(KDV_PRINTED[variant], axis=0, name=variant)
    return seq if printed else executed(seq)


def maxwell_program(vy_form: str = "VY", printed: bool = False) -> OperatorSequence:
    """``V_Y . V_X . U_Y . U_X`` in product order."""
    if vy_form not in VY_FORMS:
        raise ValueError(f"unknown V_Y form {vy_form!r}; expected one of {VY_FORMS}")
    seq = (
        parse_program(f"{vy_form} VX", axis=0)
        + parse_program(MAXWELL_UY, axis=1)
        + parse_program(MAXWELL_UX, axis=0)
    )
    seq = OperatorSequence(seq.steps, "maxwell")
    return seq if printed else executed(seq)


AngleMap = Dict[str, Dict[str, Tuple[TruncatedSeries, str]]]


def kdv_series_angles(variant: str) -> AngleMap:
    """Angle series: ``alpha_1 = pi/4 + eps^2 m1`` (unitary), ``pi/4`` and ``eps^3 m`` (potential)."""
    if variant == "NonUnitaryPotential":
        return {
            "C": {"alpha": (TruncatedSeries(), "pi/4")},
            "Vpot": {"alpha": (TruncatedSeries.monomial(atom("m"), 3), "0")},
        }
    return {"C": {"alpha": (TruncatedSeries.monomial(atom("m1"), 2), "pi/4")}}


def _theta(nu: str):
    return TruncatedSeries.monomial(atom(nu) * Fraction(1, 4), 1), "0"


def _beta(nu: str, axis: int):
    # eps^2 (d n/d axis) / n^2 = -eps^2 d(1/n)/d axis
    d = (1, 0) if axis == 0 else (0, 1)
    return TruncatedSeries.monomial(atom(nu, *d) * -1, 2), "0"


def maxwell_series_angles(vy_form: str = "VY") -> AngleMap:
    return {
        "CX": {"theta1": _theta("nu_y"), "theta2": _theta("nu_z")},
        "CY": {"theta0": _theta("nu_x"), "theta2": _theta("nu_z")},
        "VX": {"beta0": _beta("nu_y", 0), "beta2": _beta("nu_z", 0)},
        vy_form: {"beta1": _beta("nu_x", 1), "beta3": _beta("nu_z", 1)},
    }
