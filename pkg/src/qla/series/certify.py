"""Order-by-order comparison of an expanded one-step map against a target PDE."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence

from .algebra import ORDER, AtomPolynomial, TruncatedSeries

__all__ = ["CertificationReport", "ComponentResult", "certify_pde", "drop_coefficient_gradients"]

#: bases that enter as given coefficient fields rather than as unknowns
COEFFICIENT_BASES = frozenset({"m", "m1", "nu_x", "nu_y", "nu_z"})


def drop_coefficient_gradients(poly: AtomPolynomial) -> AtomPolynomial:
    """Discard monomials containing a derivative of a coefficient field (constant-coefficient view)."""
    keep = {
        mono: c
        for mono, c in poly.terms.items()
        if not any(a.base in COEFFICIENT_BASES and (a.dx or a.dy) for a in mono)
    }
    return AtomPolynomial(keep)


@dataclass
class ComponentResult:
    name: str
    residuals: List[AtomPolynomial]
    target: AtomPolynomial
    unexpected_atoms: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not any(self.residuals)

    @property
    def passed_constant_coefficients(self) -> bool:
        return not any(drop_coefficient_gradients(r) for r in self.residuals)


@dataclass
class CertificationReport:
    title: str
    order: int
    components: List[ComponentResult]
    notes: List[str] = field(default_factory=list)
    max_order: int = ORDER

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.components)

    @property
    def passed_constant_coefficients(self) -> bool:
        return all(c.passed_constant_coefficients for c in self.components)

    def failing(self) -> Dict[str, Dict[int, AtomPolynomial]]:
        return {
            c.name: {k: r for k, r in enumerate(c.residuals) if r}
            for c in self.components
            if not c.passed
        }

    def to_text(self) -> str:
        lines = [f"certification: {self.title}", f"target order: eps^{self.order}; orders checked: 0..{self.max_order}"]
        for c in self.components:
            lines.append(f"component {c.name}: {'PASS' if c.passed else 'FAIL'}")
            lines.append(f"  target eps^{self.order}: {c.target}")
            for k, r in enumerate(c.residuals):
                lines.append(f"  residual eps^{k}: {r}")
            if c.unexpected_atoms:
                lines.append(f"  atoms outside target basis: {', '.join(c.unexpected_atoms)}")
        for n in self.notes:
            lines.append(f"note: {n}")
        if not self.passed and self.passed_constant_coefficients:
            lines.append("note: every residual term carries a coefficient-field gradient; "
                         "the limit holds for constant coefficients only")
        lines.append(f"result: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines) + "\n"


def certify_pde(
    series: Mapping[str, TruncatedSeries],
    targets: Mapping[str, AtomPolynomial],
    order: int,
    initial: Optional[Mapping[str, TruncatedSeries]] = None,
    title: str = "",
    notes: Sequence[str] = (),
    max_order: int = ORDER,
) -> CertificationReport:
    """Certify ``series - initial == eps^order * target`` through ``eps^max_order``.

    ``series`` maps component names to the expanded one-step map; ``initial``
    (same keys) is subtracted first, so passing increments directly also works.
    A component passes iff every residual vanishes exactly.
    """
    if not 0 <= order <= max_order <= ORDER:
        raise ValueError(f"need 0 <= order <= max_order <= {ORDER}, got {order}, {max_order}")
    missing = set(targets) - set(series)
    if missing:
        raise KeyError(f"no series for target components {sorted(missing)}")
    comps = []
    for name in targets:
        inc = series[name] - initial[name] if initial is not None else series[name]
        tgt = targets[name]
        res = []
        for k in range(max_order + 1):
            r = inc[k] - tgt if k == order else inc[k]
            res.append(r)
        basis = {str(a) for a in tgt.atoms()}
        if initial is not None:
            for init in initial.values():
                basis |= {str(a) for a in init.atoms()}
        extra = sorted({str(a) for a in inc[order].atoms()} - basis)
        comps.append(ComponentResult(name, res, tgt, extra))
    return CertificationReport(title, order, comps, list(notes), max_order)
