"""2D x-y Maxwell qubit lattice scheme in a diagonal tensor dielectric.

The six-component field is ``Q = (n_x E_x, n_y E_y, n_z E_z, H_x, H_y, H_z)``
in units with mu0 = 1 and vacuum light speed 1.  One step is
``V_Y . V_X . U_Y . U_X`` and advances physical time by ``eps^2``.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from ._accel import default_workers, set_workers
from .errors import ConfigError, NumericAbort
from .lattice import AmplitudeField, CompiledProgram, LocalOperator, l2_norm
from .schemes import VY_FORMS, maxwell_program

__all__ = [
    "EmFields",
    "IndexProfile",
    "MaxwellScheme",
    "RefractiveIndexField",
    "build_cx",
    "build_cy",
    "build_vx",
    "build_vy",
    "em_diagnostics",
    "encode_em",
    "gaussian_pulse",
    "load_index_grid",
    "plane_wave",
    "reconstruct_em",
    "save_index_grid",
    "step",
]

N_FLOOR = 1e-3
PROFILES = ("uniform", "linear-ramp", "tanh-interface", "gaussian-lens")


@dataclass(frozen=True)
class IndexProfile:
    """Closed-form scalar profile ``n(x, y)``; ``params`` depend on ``kind``.

    uniform: n.  linear-ramp: n0, slope, axis.  tanh-interface: n1, n2,
    center, width, axis.  gaussian-lens: n0, dn, x0, y0, sigma.
    """

    kind: str
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in PROFILES:
            raise ConfigError(f"unknown index profile {self.kind!r}; expected one of {PROFILES}", key="profile")

    def _p(self, name, default=None):
        if name in self.params:
            return float(self.params[name])
        if default is None:
            raise ConfigError(f"index profile {self.kind} needs parameter {name!r}", key=name)
        return default

    def evaluate(self, x: np.ndarray, y: np.ndarray):
        """``(n, dn/dx, dn/dy)`` at the given coordinates."""
        zero = np.zeros_like(x, dtype=np.float64)
        if self.kind == "uniform":
            return zero + self._p("n", 1.0), zero, zero
        if self.kind == "linear-ramp":
            axis = int(self._p("axis", 0.0))
            n0, slope = self._p("n0", 1.0), self._p("slope")
            coord = x if axis == 0 else y
            d = zero + slope
            return n0 + slope * coord, (d if axis == 0 else zero), (zero if axis == 0 else d)
        if self.kind == "tanh-interface":
            axis = int(self._p("axis", 0.0))
            n1, n2 = self._p("n1"), self._p("n2")
            c, w = self._p("center"), self._p("width")
            coord = x if axis == 0 else y
            th = np.tanh((coord - c) / w)
            n = 0.5 * (n1 + n2) + 0.5 * (n2 - n1) * th
            d = 0.5 * (n2 - n1) * (1.0 - th * th) / w
            return n, (d if axis == 0 else zero), (zero if axis == 0 else d)
        n0, dn = self._p("n0", 1.0), self._p("dn")
        x0, y0, s = self._p("x0"), self._p("y0"), self._p("sigma")
        g = np.exp(-((x - x0) ** 2 + (y - y0) ** 2) / (2 * s * s))
        return n0 + dn * g, -dn * g * (x - x0) / (s * s), -dn * g * (y - y0) / (s * s)


@dataclass
class RefractiveIndexField:
    """Per-site ``n = (n_x, n_y, n_z)``; ``grad`` holds analytic ``(d/dx, d/dy)`` per component if known."""

    n: np.ndarray  # shape (3, Nx, Ny)
    grad: Optional[np.ndarray] = None  # shape (3, 2, Nx, Ny)
    floor: float = N_FLOOR

    def __post_init__(self):
        self.n = np.asarray(self.n, dtype=np.float64)
        if self.n.ndim != 3 or self.n.shape[0] != 3:
            raise ConfigError(f"index field must have shape (3, Nx, Ny), got {self.n.shape}", key="index")
        if not np.all(np.isfinite(self.n)):
            raise ConfigError("index field has non-finite entries", key="index")
        if np.min(self.n) < self.floor:
            raise ConfigError(f"refractive index {np.min(self.n):.3g} below floor {self.floor}", key="index")

    @property
    def dims(self) -> Tuple[int, int]:
        return tuple(self.n.shape[1:])

    @classmethod
    def uniform(cls, dims: Sequence[int], n: float = 1.0) -> "RefractiveIndexField":
        return cls(np.full((3, *dims), float(n)), np.zeros((3, 2, *dims)))

    @classmethod
    def from_profiles(cls, dims: Sequence[int], eps: float, profiles, floor: float = N_FLOOR):
        """One profile for all components, or a sequence of three (x, y, z)."""
        if isinstance(profiles, IndexProfile):
            profiles = (profiles,) * 3
        if len(profiles) != 3:
            raise ConfigError("need one index profile or three (n_x, n_y, n_z)", key="profile")
        x, y = np.meshgrid(eps * np.arange(dims[0]), eps * np.arange(dims[1]), indexing="ij")
        n = np.empty((3, *dims))
        grad = np.empty((3, 2, *dims))
        for i, p in enumerate(profiles):
            n[i], grad[i, 0], grad[i, 1] = p.evaluate(x, y)
        return cls(n, grad, floor)

    def gradients(self, eps: float, mode: str = "analytic") -> np.ndarray:
        if mode == "analytic":
            if self.grad is None:
                raise ConfigError("analytic derivatives requested but the index has no closed form",
                                  key="derivative_mode")
            return self.grad
        if mode != "central-difference":
            raise ConfigError(f"derivative mode must be 'analytic' or 'central-difference', got {mode!r}",
                              key="derivative_mode")
        g = np.empty((3, 2, *self.dims))
        for i in range(3):
            for ax in range(2):
                g[i, ax] = (np.roll(self.n[i], -1, axis=ax) - np.roll(self.n[i], 1, axis=ax)) / (2 * eps)
        return g


_GRID_HEADER = struct.Struct("<iii")


def save_index_grid(path, n: np.ndarray) -> None:
    """Little-endian: int32 Nx, int32 Ny, int32 ncomp, then float64 data as (ncomp, Nx, Ny) row-major."""
    n = np.asarray(n, dtype="<f8")
    if n.ndim == 2:
        n = n[None]
    with open(path, "wb") as fh:
        fh.write(_GRID_HEADER.pack(n.shape[1], n.shape[2], n.shape[0]))
        fh.write(np.ascontiguousarray(n).tobytes())


def load_index_grid(path, floor: float = N_FLOOR) -> RefractiveIndexField:
    raw = Path(path).read_bytes()
    if len(raw) < _GRID_HEADER.size:
        raise ConfigError(f"index grid {path} is too short for its header", key="index_file")
    nx, ny, nc = _GRID_HEADER.unpack_from(raw)
    if nx < 4 or ny < 4 or nc not in (1, 3):
        raise ConfigError(f"index grid header invalid: Nx={nx}, Ny={ny}, ncomp={nc}", key="index_file")
    expect = _GRID_HEADER.size + 8 * nx * ny * nc
    if len(raw) != expect:
        raise ConfigError(f"index grid {path} has {len(raw)} bytes, header implies {expect}", key="index_file")
    data = np.frombuffer(raw, dtype="<f8", offset=_GRID_HEADER.size).reshape(nc, nx, ny).astype(np.float64)
    if nc == 1:
        data = np.repeat(data, 3, axis=0)
    return RefractiveIndexField(data, None, floor)


def _angles(index: RefractiveIndexField, eps: float, mode: str) -> Dict[str, np.ndarray]:
    nx, ny, nz = (index.n[i].ravel() for i in range(3))
    g = index.gradients(eps, mode)
    return {
        "theta0": eps / (4 * nx),
        "theta1": eps / (4 * ny),
        "theta2": eps / (4 * nz),
        "beta0": eps ** 2 * g[1, 0].ravel() / ny ** 2,
        "beta1": eps ** 2 * g[0, 1].ravel() / nx ** 2,
        "beta2": eps ** 2 * g[2, 0].ravel() / nz ** 2,
        "beta3": eps ** 2 * g[2, 1].ravel() / nz ** 2,
    }


@dataclass
class MaxwellScheme:
    epsilon: float
    index: RefractiveIndexField
    derivative_mode: str = "analytic"
    vy_form: str = "VY"
    workers: Optional[int] = None
    angles: Dict[str, np.ndarray] = field(init=False, repr=False)

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError(f"epsilon must lie in (0, 1), got {self.epsilon}", key="epsilon")
        if self.vy_form not in VY_FORMS:
            raise ConfigError(f"unknown V_Y form {self.vy_form!r}", key="vy_form")
        if self.index.grad is None and self.derivative_mode == "analytic":
            self.derivative_mode = "central-difference"
        self.angles = _angles(self.index, self.epsilon, self.derivative_mode)
        self._program = CompiledProgram(maxwell_program(self.vy_form), self.dims, 6)
        self._ops = {
            "CX": build_cx(self),
            "CY": build_cy(self),
            "VX": build_vx(self),
            self.vy_form: build_vy(self),
        }
        self._bound = self._program.bind(self._ops)

    @property
    def dims(self) -> Tuple[int, int]:
        return self.index.dims

    @property
    def dt(self) -> float:
        return self.epsilon ** 2

    @property
    def operators(self) -> Dict[str, LocalOperator]:
        return dict(self._ops)

    def advance(self, flat: np.ndarray, steps: int, workers: Optional[int] = None, start: int = 0) -> np.ndarray:
        w = set_workers(workers or self.workers or default_workers())
        for n in range(steps):
            new = self._program.run_flat(flat, self._bound, w)
            if not np.isfinite(new).all():
                raise NumericAbort(f"non-finite amplitude after step {start + n + 1}", step=start + n + 1, last_good=flat)
            flat = new
        return flat


def build_cx(scheme: MaxwellScheme) -> LocalOperator:
    return LocalOperator("CX", {"theta1": scheme.angles["theta1"], "theta2": scheme.angles["theta2"]})


def build_cy(scheme: MaxwellScheme) -> LocalOperator:
    return LocalOperator("CY", {"theta0": scheme.angles["theta0"], "theta2": scheme.angles["theta2"]})


def build_vx(scheme: MaxwellScheme) -> LocalOperator:
    return LocalOperator("VX", {"beta0": scheme.angles["beta0"], "beta2": scheme.angles["beta2"]})


def build_vy(scheme: MaxwellScheme) -> LocalOperator:
    return LocalOperator(scheme.vy_form, {"beta1": scheme.angles["beta1"], "beta3": scheme.angles["beta3"]})


def step(scheme: MaxwellScheme, field: AmplitudeField, steps: int = 1) -> AmplitudeField:
    if field.ncomp != 6 or field.dims != scheme.dims:
        raise ConfigError(f"Maxwell field must be 6 x {scheme.dims}, got {field.ncomp} x {field.dims}")
    return field.with_flat(scheme.advance(field.flat(), steps))


@dataclass
class EmFields:
    E: np.ndarray  # (3, Nx, Ny)
    H: np.ndarray  # (3, Nx, Ny)


def reconstruct_em(field: AmplitudeField, scheme_or_index) -> EmFields:
    index = scheme_or_index.index if isinstance(scheme_or_index, MaxwellScheme) else scheme_or_index
    if np.min(index.n) < index.floor:
        raise ConfigError("refractive index below floor", key="index")
    return EmFields(field.data[:3] / index.n, field.data[3:].copy())


def encode_em(em: EmFields, scheme_or_index, spacing: float) -> AmplitudeField:
    index = scheme_or_index.index if isinstance(scheme_or_index, MaxwellScheme) else scheme_or_index
    if np.min(index.n) < index.floor:
        raise ConfigError("refractive index below floor", key="index")
    return AmplitudeField(np.concatenate([em.E * index.n, em.H]), spacing)


def _ddx(f: np.ndarray, axis: int, eps: float) -> np.ndarray:
    return (np.roll(f, -1, axis=axis) - np.roll(f, 1, axis=axis)) / (2 * eps)


def em_diagnostics(field: AmplitudeField, scheme: MaxwellScheme, initial_norm: Optional[float] = None) -> Dict[str, float]:
    eps = field.spacing
    q = field.data
    norm = l2_norm(field)
    # D_i = n_i^2 E_i = n_i q_i ; B = H (mu0 = 1); no z dependence
    n = scheme.index.n
    div_d = _ddx(n[0] * q[0], 0, eps) + _ddx(n[1] * q[1], 1, eps)
    div_b = _ddx(q[3], 0, eps) + _ddx(q[4], 1, eps)
    return {
        "energy": 0.5 * norm * norm * eps * eps,
        "l2": norm,
        "div_d": float(np.max(np.abs(div_d))),
        "div_b": float(np.max(np.abs(div_b))),
        "norm_drift": (norm - initial_norm) / initial_norm if initial_norm else 0.0,
    }


def plane_wave(dims: Sequence[int], eps: float, mode: int = 1, amplitude: float = 1.0,
               polarization: str = "y") -> AmplitudeField:
    """Right-moving vacuum wave varying in x only: ``(q1, q5) = (A, A) cos`` or ``(q2, q4) = (A, -A) cos``."""
    nx, ny = dims
    x = eps * np.arange(nx)
    k = 2 * math.pi * mode / (nx * eps)
    prof = amplitude * np.cos(k * x)[:, None] * np.ones((1, ny))
    q = np.zeros((6, nx, ny))
    if polarization == "y":
        q[1], q[5] = prof, prof
    elif polarization == "z":
        q[2], q[4] = prof, -prof
    else:
        raise ConfigError(f"polarization must be 'y' or 'z', got {polarization!r}", key="polarization")
    return AmplitudeField(q, eps)


def gaussian_pulse(dims: Sequence[int], eps: float, x0: float, width: float, amplitude: float = 1.0,
                   polarization: str = "y", y0: Optional[float] = None) -> AmplitudeField:
    """Right-moving pulse; ``y0`` (if given) also localizes it in y."""
    nx, ny = dims
    x, y = np.meshgrid(eps * np.arange(nx), eps * np.arange(ny), indexing="ij")
    lx = nx * eps
    d = np.mod(x - x0 + 0.5 * lx, lx) - 0.5 * lx
    prof = amplitude * np.exp(-0.5 * (d / width) ** 2)
    if y0 is not None:
        ly = ny * eps
        dy = np.mod(y - y0 + 0.5 * ly, ly) - 0.5 * ly
        prof = prof * np.exp(-0.5 * (dy / width) ** 2)
    q = np.zeros((6, nx, ny))
    if polarization == "y":
        q[1], q[5] = prof, prof
    elif polarization == "z":
        q[2], q[4] = prof, -prof
    else:
        raise ConfigError(f"polarization must be 'y' or 'z', got {polarization!r}", key="polarization")
    return AmplitudeField(q, eps)
