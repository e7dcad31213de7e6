"""Numeric check of the series engine: lattice one-step map vs the eps^4-truncated prediction.

Sample fields are trigonometric polynomials, so every derivative atom has a
closed form.  The defect should fall as eps^5.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from .lattice import CompiledProgram
from .kdv import build_collision
from .maxwell import MaxwellScheme, RefractiveIndexField
from .schemes import kdv_program, kdv_series_angles
from .series.algebra import Atom, MAX_DERIV, TruncatedSeries
from .series.expand import expand_sequence, field_vector
from .verify import maxwell_increment

__all__ = ["DefectTable", "TrigField", "numeric_crosscheck", "CROSSCHECK_CASES"]

EPS_VALUES = (0.08, 0.04, 0.02, 0.01)
LENGTH = 2.56  # divisible by every eps above


@dataclass(frozen=True)
class TrigField:
    """``c0 + sum A cos(kx x + ky y + phi)`` with exact partial derivatives."""

    const: float
    modes: Tuple[Tuple[float, float, float, float], ...]  # (A, kx, ky, phi)

    def derivative(self, x: np.ndarray, y: np.ndarray, dx: int = 0, dy: int = 0) -> np.ndarray:
        out = np.full_like(x, self.const if dx == dy == 0 else 0.0, dtype=np.float64)
        for a, kx, ky, phi in self.modes:
            out = out + a * kx ** dx * ky ** dy * np.cos(kx * x + ky * y + phi + 0.5 * math.pi * (dx + dy))
        return out


@dataclass
class DefectTable:
    case: str
    eps: List[float]
    defect: List[float]

    @property
    def slope(self) -> float:
        return float(np.polyfit(np.log(self.eps), np.log(self.defect), 1)[0])

    def to_text(self) -> str:
        rows = [f"crosscheck {self.case}", "eps,defect"]
        rows += [f"{e!r},{d!r}" for e, d in zip(self.eps, self.defect)]
        rows.append(f"slope {self.slope:.3f}")
        return "\n".join(rows) + "\n"


def _atom_values(fields: Mapping[str, TrigField], x, y) -> Dict[Atom, np.ndarray]:
    vals = {}
    for base, f in fields.items():
        for dx in range(MAX_DERIV + 1):
            for dy in range(MAX_DERIV + 1):
                vals[Atom(base, dx, dy)] = f.derivative(x, y, dx, dy)
    return vals


def _predict(series: Sequence[TruncatedSeries], values, eps: float) -> np.ndarray:
    return np.stack([s.evaluate(values, eps) * np.ones_like(next(iter(values.values()))) for s in series])


def _k(n: int) -> float:
    return 2 * math.pi * n / LENGTH


def _kdv_fields(single_mode: bool) -> Dict[str, TrigField]:
    if single_mode:
        return {
            "q0": TrigField(0.0, ((0.6, _k(1), 0.0, 0.2),)),
            "q1": TrigField(0.0, ((0.4, _k(1), 0.0, -0.9),)),
            "m1": TrigField(0.0, ((0.5, _k(1), 0.0, 0.7),)),
        }
    return {
        "q0": TrigField(0.3, ((0.6, _k(1), 0.0, 0.2), (0.2, _k(2), 0.0, 1.1))),
        "q1": TrigField(-0.1, ((0.4, _k(1), 0.0, -0.9), (0.25, _k(2), 0.0, 0.4))),
        "m1": TrigField(0.2, ((0.5, _k(1), 0.0, 0.7),)),
    }


def _kdv_case(eps: float, fields, series) -> float:
    n = int(round(LENGTH / eps))
    x = eps * np.arange(n)
    y = np.zeros_like(x)
    values = _atom_values(fields, x, y)
    q = np.stack([values[Atom("q0")], values[Atom("q1")]])
    prog = CompiledProgram(kdv_program("UnitaryV1"), (n,), 2)
    op = build_collision("UnitaryV1", values[Atom("m1")], eps)
    out = prog.run_flat(q, prog.bind({"C": op}), 1)
    return float(np.max(np.abs(out - _predict(series, values, eps))))


def _maxwell_fields(vacuum: bool) -> Dict[str, TrigField]:
    k1, k2 = _k(1), _k(2)
    f = {
        "q0": TrigField(0.1, ((0.5, k1, k1, 0.3),)),
        "q1": TrigField(0.0, ((0.4, k1, 0.0, 1.0), (0.2, k1, k2, -0.4))),
        "q2": TrigField(0.0, ((0.6, 0.0, k1, 0.5),)),
        "q3": TrigField(-0.2, ((0.3, k2, k1, 0.1),)),
        "q4": TrigField(0.0, ((0.5, k1, -k1, 2.0),)),
        "q5": TrigField(0.0, ((0.7, k1, 0.0, 0.0), (0.1, 0.0, k2, 1.3))),
    }
    if vacuum:
        f.update({f"nu_{a}": TrigField(1.0, ()) for a in "xyz"})
    else:
        f.update({
            "nu_x": TrigField(0.8, ((0.1, k1, 0.0, 0.2),)),
            "nu_y": TrigField(0.7, ((0.15, 0.0, k1, -0.5),)),
            "nu_z": TrigField(0.75, ((0.1, k1, k1, 1.0),)),
        })
    return f


def _maxwell_case(eps: float, fields, series) -> float:
    n = int(round(LENGTH / eps))
    x, y = np.meshgrid(eps * np.arange(n), eps * np.arange(n), indexing="ij")
    values = _atom_values(fields, x, y)
    nu = np.stack([values[Atom(f"nu_{a}")] for a in "xyz"])
    grad = np.stack([
        np.stack([-values[Atom(f"nu_{a}", 1, 0)] / nu[i] ** 2, -values[Atom(f"nu_{a}", 0, 1)] / nu[i] ** 2])
        for i, a in enumerate("xyz")
    ])
    scheme = MaxwellScheme(eps, RefractiveIndexField(1.0 / nu, grad))
    q = np.stack([values[Atom(f"q{i}")] for i in range(6)]).reshape(6, -1)
    out = scheme.advance(q, 1, workers=1).reshape(6, n, n)
    return float(np.max(np.abs(out - _predict(series, values, eps))))


def _kdv_series():
    return expand_sequence(kdv_program("UnitaryV1"), field_vector(2), kdv_series_angles("UnitaryV1"))


def _maxwell_series():
    series, _ = maxwell_increment("VY")
    return [series[f"q{i}"] for i in range(6)]


CROSSCHECK_CASES = {
    "kdv-v1": (_kdv_series, lambda: _kdv_fields(False), _kdv_case),
    "kdv-v1-single-mode": (_kdv_series, lambda: _kdv_fields(True), _kdv_case),
    "maxwell-vacuum": (_maxwell_series, lambda: _maxwell_fields(True), _maxwell_case),
    "maxwell-inhomogeneous": (_maxwell_series, lambda: _maxwell_fields(False), _maxwell_case),
}


def numeric_crosscheck(case: str, eps_values: Sequence[float] = EPS_VALUES) -> DefectTable:
    """Max one-step defect per eps between the lattice and the truncated series."""
    if case not in CROSSCHECK_CASES:
        raise ValueError(f"unknown crosscheck case {case!r}; expected one of {sorted(CROSSCHECK_CASES)}")
    make_series, make_fields, run = CROSSCHECK_CASES[case]
    series, fields = make_series(), make_fields()
    return DefectTable(case, list(eps_values), [run(e, fields, series) for e in eps_values])
