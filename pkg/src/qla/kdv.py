"""KdV qubit lattice schemes: one non-unitary variant with a potential, two fully unitary ones.

Each step runs an eight-collision program on ``Q = (q0, q1)`` and advances
``psi = q0 + q1`` by ``dt = eps^3`` of ``psi_t + a psi psi_x + b psi_xxx = 0``.
The nonlinearity enters through a site field computed from ``psi`` at step
entry and held fixed for the whole step.

Certified continuum limits (see :mod:`qla.verify`), per unit of the
nonlinearity gain ``g``:

* NonUnitaryPotential, ``m = g psi_x``: ``a = g``, ``b = 1/2``.
* UnitaryV1, ``m1 = g psi``: the limit carries ``4 m1 psi_x + 2 m1_x psi``,
  so ``a = 6 g``, ``b = 1/2``.
* UnitaryV2, ``m1 = -g psi``: ``-4 m1 psi_x - 4 m1_x q0``, which is ``a = 6 g``
  only while ``q0 = q1``; not exact.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from ._accel import default_workers, set_workers
from .errors import ConfigError, NumericAbort
from .lattice import AmplitudeField, CompiledProgram, LocalOperator, l2_norm
from .schemes import KDV_VARIANTS, kdv_program

__all__ = [
    "A_PER_GAIN",
    "KdvScheme",
    "SolitonParams",
    "build_collision",
    "build_vpot",
    "central_difference",
    "diagnostics",
    "soliton_init",
    "soliton_profile",
    "step",
]

#: effective nonlinear coefficient a per unit gain, from the certified limits
A_PER_GAIN = {"NonUnitaryPotential": 1.0, "UnitaryV1": 6.0, "UnitaryV2": 6.0}
B_COEFF = 0.5


def central_difference(psi: np.ndarray, eps: float) -> np.ndarray:
    """Periodic ``(psi[j+1] - psi[j-1]) / (2 eps)``."""
    return (np.roll(psi, -1) - np.roll(psi, 1)) / (2.0 * eps)


def build_collision(variant: str, m_field, epsilon: float) -> LocalOperator:
    """``C`` with ``alpha = pi/4 + eps^2 m1`` (unitary variants) or ``pi/4`` (non-unitary)."""
    if variant == "NonUnitaryPotential":
        return LocalOperator("C", {"alpha": math.pi / 4})
    if variant not in KDV_VARIANTS:
        raise ConfigError(f"unknown KdV variant {variant!r}", key="variant")
    return LocalOperator("C", {"alpha": math.pi / 4 + epsilon ** 2 * np.asarray(m_field, dtype=np.float64)})


def build_vpot(psi: np.ndarray, epsilon: float, gain: float = 1.0) -> LocalOperator:
    """Symmetric potential with ``alpha = eps^3 * gain * d psi/dx`` (central difference)."""
    m = gain * central_difference(np.asarray(psi, dtype=np.float64), epsilon)
    return LocalOperator("Vpot", {"alpha": epsilon ** 3 * m})


@dataclass
class KdvScheme:
    variant: str
    epsilon: float
    N: int
    gain: float = 1.0
    workers: Optional[int] = None
    _program: CompiledProgram = field(init=False, repr=False)

    def __post_init__(self):
        if self.variant not in KDV_VARIANTS:
            raise ConfigError(f"unknown KdV variant {self.variant!r}; expected one of {KDV_VARIANTS}", key="variant")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError(f"epsilon must lie in (0, 1), got {self.epsilon}", key="epsilon")
        if self.N < 4:
            raise ConfigError(f"N must be >= 4, got {self.N}", key="N")
        self._program = CompiledProgram(kdv_program(self.variant), (self.N,), 2)

    @classmethod
    def for_coefficient(cls, variant: str, epsilon: float, N: int, a: float, **kw) -> "KdvScheme":
        """Scheme whose nonlinearity gain gives the requested KdV coefficient ``a``."""
        if variant not in A_PER_GAIN:
            raise ConfigError(f"unknown KdV variant {variant!r}", key="variant")
        return cls(variant, epsilon, N, gain=a / A_PER_GAIN[variant], **kw)

    @property
    def dt(self) -> float:
        return self.epsilon ** 3

    @property
    def length(self) -> float:
        return self.N * self.epsilon

    @property
    def a(self) -> float:
        return self.gain * A_PER_GAIN[self.variant]

    @property
    def b(self) -> float:
        return B_COEFF

    def nonlinearity(self, psi: np.ndarray) -> np.ndarray:
        if self.variant == "UnitaryV1":
            return self.gain * psi
        if self.variant == "UnitaryV2":
            return -self.gain * psi
        return self.gain * central_difference(psi, self.epsilon)

    def operators(self, flat: np.ndarray) -> Dict[str, LocalOperator]:
        psi = flat[0] + flat[1]
        ops = {"C": build_collision(self.variant, self.nonlinearity(psi), self.epsilon)}
        if self.variant == "NonUnitaryPotential":
            ops["Vpot"] = build_vpot(psi, self.epsilon, self.gain)
        return ops

    def advance(self, flat: np.ndarray, steps: int, workers: Optional[int] = None, start: int = 0) -> np.ndarray:
        """``steps`` time steps on raw ``(2, N)`` data; raises :class:`NumericAbort` on NaN."""
        w = set_workers(workers or self.workers or default_workers())
        prog = self._program
        for n in range(steps):
            try:
                with np.errstate(over="ignore", invalid="ignore"):
                    bound = prog.bind(self.operators(flat))
            except NumericAbort as exc:
                raise NumericAbort(f"step {start + n + 1}: {exc}", step=start + n + 1, site=exc.site,
                                   last_good=flat) from None
            new = prog.run_flat(flat, bound, w)
            if not np.isfinite(new).all():
                raise NumericAbort(f"non-finite amplitude after step {start + n + 1}", step=start + n + 1, last_good=flat)
            flat = new
        return flat


def step(scheme: KdvScheme, field: AmplitudeField, steps: int = 1) -> AmplitudeField:
    if field.ncomp != 2 or field.dims != (scheme.N,):
        raise ConfigError(f"KdV field must be 2 x {scheme.N}, got {field.ncomp} x {field.dims}")
    return field.with_flat(scheme.advance(field.flat(), steps))


@dataclass(frozen=True)
class SolitonParams:
    a: float
    b: float
    c: float
    x0: float = 0.0

    def __post_init__(self):
        for k in ("a", "b"):
            if not getattr(self, k) > 0:
                raise ConfigError(f"soliton {k} must be > 0, got {getattr(self, k)}", key=k)
        if not self.c >= 0:
            raise ConfigError(f"soliton speed must be >= 0, got {self.c}", key="c")

    @property
    def amplitude(self) -> float:
        return 3.0 * self.c / self.a

    @property
    def kappa(self) -> float:
        return 0.5 * math.sqrt(self.c / self.b)

    @property
    def width(self) -> float:
        return 1.0 / self.kappa if self.kappa > 0 else math.inf


def soliton_profile(params: SolitonParams, x: np.ndarray, t: float, length: float) -> np.ndarray:
    """``(3c/a) sech^2(kappa (x - x0 - c t))`` using the nearest periodic image."""
    if params.c == 0:
        return np.zeros_like(x, dtype=np.float64)
    d = np.mod(x - params.x0 - params.c * t + 0.5 * length, length) - 0.5 * length
    return params.amplitude / np.cosh(params.kappa * d) ** 2


def soliton_init(params: SolitonParams, scheme: KdvScheme) -> AmplitudeField:
    """Soliton in ``psi`` split evenly, ``q0 = q1 = psi / 2``."""
    if not math.isclose(params.a, scheme.a, rel_tol=1e-12) or not math.isclose(params.b, scheme.b, rel_tol=1e-12):
        raise ConfigError(
            f"soliton coefficients (a={params.a}, b={params.b}) do not match the scheme "
            f"(a={scheme.a}, b={scheme.b})", key="a"
        )
    if params.c > 0 and params.width > 0.5 * scheme.length:
        warnings.warn("soliton is wider than half the domain; periodic images will overlap", RuntimeWarning)
    x = scheme.epsilon * np.arange(scheme.N)
    psi = soliton_profile(params, x, 0.0, scheme.length)
    return AmplitudeField(np.stack([0.5 * psi, 0.5 * psi]), scheme.epsilon)


def peak_position(psi: np.ndarray, eps: float) -> float:
    """Argmax refined by a 3-point parabola (periodic neighbours)."""
    j = int(np.argmax(psi))
    ym, y0, yp = psi[j - 1], psi[j], psi[(j + 1) % psi.size]
    denom = ym - 2.0 * y0 + yp
    delta = 0.5 * (ym - yp) / denom if denom != 0 else 0.0
    return eps * (j + delta)


def diagnostics(field: AmplitudeField, params: Optional[SolitonParams], t: float) -> Dict[str, float]:
    eps = field.spacing
    psi = field.data[0] + field.data[1]
    rec = {
        "mass": float(np.sum(psi) * eps),
        "l2": l2_norm(field),
        "peak": peak_position(psi, eps) if np.any(psi) else 0.0,
    }
    if params is not None:
        x = eps * np.arange(psi.size)
        err = psi - soliton_profile(params, x, t, psi.size * eps)
        rec["linf_error"] = float(np.max(np.abs(err)))
        rec["l2_error"] = float(np.sqrt(np.sum(err * err) * eps))
    return rec
