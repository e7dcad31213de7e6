"""Periodic amplitude lattices and the collide / stream / potential primitives."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from . import kernels
from ._accel import default_workers, set_workers
from .errors import ConfigError, NumericAbort, SequenceError
from .program import Collide, OperatorSequence, Potential, Stream, TEMPLATES

__all__ = [
    "AmplitudeField",
    "AngleField",
    "CompiledProgram",
    "LocalOperator",
    "apply_sequence",
    "collide",
    "l2_norm",
    "stream",
]

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class AmplitudeField:
    """Real amplitudes ``data[c, ...]`` on a periodic 1D ``(N,)`` or 2D ``(Nx, Ny)`` lattice."""

    data: np.ndarray
    spacing: float

    def __post_init__(self):
        data = np.ascontiguousarray(self.data, dtype=np.float64)
        if data.ndim not in (2, 3):
            raise ConfigError(f"field data must be (ncomp, N) or (ncomp, Nx, Ny), got shape {data.shape}")
        if any(n < 4 for n in data.shape[1:]):
            raise ConfigError(f"every lattice extent must be >= 4, got {data.shape[1:]}")
        if not 0.0 < self.spacing < 1.0:
            raise ConfigError(f"spacing must lie in (0, 1), got {self.spacing}", key="epsilon")
        if not np.all(np.isfinite(data)):
            raise NumericAbort("field contains non-finite amplitudes")
        object.__setattr__(self, "data", data)

    @classmethod
    def zeros(cls, dims: Sequence[int], ncomp: int, spacing: float) -> "AmplitudeField":
        return cls(np.zeros((ncomp, *dims)), spacing)

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(self.data.shape[1:])

    @property
    def ncomp(self) -> int:
        return self.data.shape[0]

    @property
    def nsites(self) -> int:
        return int(np.prod(self.dims))

    def flat(self) -> np.ndarray:
        return self.data.reshape(self.ncomp, self.nsites)

    def with_flat(self, flat: np.ndarray) -> "AmplitudeField":
        return AmplitudeField(flat.reshape(self.data.shape), self.spacing)

    def coordinates(self):
        """Physical site coordinates ``x = eps * index`` (one array per axis)."""
        axes = [self.spacing * np.arange(n) for n in self.dims]
        return np.meshgrid(*axes, indexing="ij") if len(axes) > 1 else axes


@dataclass(frozen=True)
class AngleField:
    label: str
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(v)):
            bad = int(np.flatnonzero(~np.isfinite(v.ravel()))[0])
            raise NumericAbort(f"angle {self.label} is non-finite at site {bad}", site=bad)
        object.__setattr__(self, "values", v)


def _unit_pair(c: np.ndarray, s: np.ndarray):
    """Re-derive the smaller of ``|cos|, |sin|`` from the larger so ``c^2 + s^2`` rounds as close to 1 as possible.

    Rounded cos/sin pairs typically miss the unit circle by ~1e-16, which
    compounds into a systematic norm drift over many thousand rotations.
    ``(1 - x)`` is exact for ``x`` in [0.5, 1], so the re-derived value is
    accurate to one rounding.
    """
    ac, as_ = np.abs(c), np.abs(s)
    use_c = ac >= as_
    big = np.where(use_c, ac, as_)
    small = np.sqrt((1.0 - big) * (1.0 + big))
    c2 = np.where(use_c, c, np.copysign(small, c))
    s2 = np.where(use_c, np.copysign(small, s), s)
    return c2, s2


@dataclass
class LocalOperator:
    """A matrix template bound to per-site (or uniform) angle values."""

    template: str
    angles: Dict[str, ArrayLike] = field(default_factory=dict)
    transpose: bool = False

    def __post_init__(self):
        if self.template not in TEMPLATES:
            raise ConfigError(f"unknown operator template {self.template!r}")
        tmpl = TEMPLATES[self.template]
        missing = [l for l in tmpl.labels if l not in self.angles]
        if missing:
            raise ConfigError(f"{self.template}: missing angle fields {missing}")
        self.angles = {
            k: (v.values if isinstance(v, AngleField) else np.asarray(v, dtype=np.float64))
            for k, v in self.angles.items()
        }
        self._sparse = None

    @property
    def kind(self) -> str:
        return TEMPLATES[self.template].kind

    @property
    def ncomp(self) -> int:
        return TEMPLATES[self.template].ncomp

    @property
    def T(self) -> "LocalOperator":
        return LocalOperator(self.template, self.angles, not self.transpose)

    def sparse(self, nsites: int):
        """``(rows, cols, vidx, vals)`` kernel arrays broadcast to ``nsites``."""
        if self._sparse is not None and self._sparse[0] == nsites:
            return self._sparse[1]
        trig = {}
        for label in TEMPLATES[self.template].labels:
            a = np.ravel(self.angles[label])
            if a.size not in (1, nsites):
                raise ConfigError(
                    f"{self.template}: angle {label} has {a.size} sites, field has {nsites}", key=label
                )
            c, sn = np.cos(a), np.sin(a)
            trig[label] = _unit_pair(c, sn) if self.kind == "collision" else (c, sn)
        ent = TEMPLATES[self.template].entries(trig, one=np.ones(1), transpose=self.transpose)
        keys = sorted(ent)
        rows = np.array([k[0] for k in keys], dtype=np.int64)
        cols = np.array([k[1] for k in keys], dtype=np.int64)
        vals = np.empty((len(keys), nsites))
        for i, k in enumerate(keys):
            vals[i] = np.broadcast_to(ent[k], (nsites,)) if np.size(ent[k]) == 1 else ent[k]
        bad = ~np.isfinite(vals)
        if bad.any():
            site = int(np.argwhere(bad)[0][1])
            raise NumericAbort(f"{self.template}: non-finite matrix entry at site {site}", site=site)
        out = (rows, cols, np.arange(len(keys), dtype=np.int64), vals)
        self._sparse = (nsites, out)
        return out

    def matrices(self, nsites: int) -> np.ndarray:
        """Dense per-site matrices, shape ``(nsites, ncomp, ncomp)``."""
        rows, cols, vidx, vals = self.sparse(nsites)
        m = np.zeros((nsites, self.ncomp, self.ncomp))
        for r, c, v in zip(rows, cols, vidx):
            m[:, r, c] += vals[v]
        return m

    def orthogonality_defect(self, nsites: int) -> float:
        """``max |M M^T - I|`` over all sites."""
        m = self.matrices(nsites)
        eye = np.eye(self.ncomp)
        return float(np.max(np.abs(m @ np.transpose(m, (0, 2, 1)) - eye)))


def _check_op(field: AmplitudeField, op: LocalOperator) -> None:
    if op.ncomp != field.ncomp:
        raise ConfigError(f"{op.template} acts on {op.ncomp} components, field has {field.ncomp}")


def collide(field: AmplitudeField, op: LocalOperator, angles: Optional[Mapping[str, ArrayLike]] = None,
            workers: Optional[int] = None) -> AmplitudeField:
    """Site-local ``q <- M(site angles) q``.  ``angles`` (if given) rebinds the operator's angles."""
    if angles is not None:
        op = LocalOperator(op.template, dict(angles), op.transpose)
    _check_op(field, op)
    w = set_workers(workers or default_workers())
    src = field.flat()
    dst = np.empty_like(src)
    rows, cols, vidx, vals = op.sparse(field.nsites)
    kernels.apply_entries(src, rows, cols, vidx, vals, dst, w)
    return field.with_flat(dst)


@lru_cache(maxsize=64)
def _neighbours(dims: Tuple[int, ...], axis: int, direction: int) -> np.ndarray:
    idx = np.arange(int(np.prod(dims)), dtype=np.int64).reshape(dims)
    # new[j] = old[j - direction]
    nbr = np.roll(idx, direction, axis=axis).ravel()
    nbr.setflags(write=False)
    return nbr


def _check_stream(field: AmplitudeField, spec: Stream) -> None:
    if spec.axis >= len(field.dims):
        raise ConfigError(f"stream along axis {'xy'[spec.axis]} on a {len(field.dims)}D lattice")
    bad = [c for c in spec.components if not 0 <= c < field.ncomp]
    if bad:
        raise ConfigError(f"stream component index {bad} outside 0..{field.ncomp - 1}")


def _mask(spec: Stream, ncomp: int) -> np.ndarray:
    m = np.zeros(ncomp, dtype=np.bool_)
    m[list(spec.components)] = True
    return m


def stream(field: AmplitudeField, spec: Stream, workers: Optional[int] = None) -> AmplitudeField:
    """Shift the listed components one site along ``spec.axis`` in ``spec.direction``."""
    _check_stream(field, spec)
    w = set_workers(workers or default_workers())
    src = field.flat()
    dst = np.empty_like(src)
    kernels.stream_gather(src, _mask(spec, field.ncomp), _neighbours(field.dims, spec.axis, spec.direction), dst, w)
    return field.with_flat(dst)


class CompiledProgram:
    """An operator sequence lowered to kernel arrays for a fixed lattice shape.

    Stream structure is resolved once; operator values are bound per call, so
    schemes whose angles change every step reuse the same compiled program.
    """

    def __init__(self, seq: OperatorSequence, dims: Sequence[int], ncomp: int):
        self.seq = seq
        self.dims = tuple(dims)
        self.ncomp = ncomp
        self.nsites = int(np.prod(self.dims))
        probe = AmplitudeField.zeros(self.dims, ncomp, 0.5)
        kinds, args, masks, nbr_tables = [], [], [], []
        nbr_ids: Dict[Tuple[int, int], int] = {}
        self.slots: list = []  # (template, transpose) in first-use order
        self.written_index: list = []
        for k, step in seq.execution_order():
            self.written_index.append(k)
            if isinstance(step, Stream):
                try:
                    _check_stream(probe, step)
                except ConfigError as exc:
                    raise SequenceError(f"step {k} ({step}): {exc}", k) from exc
                key = (step.axis, step.direction)
                if key not in nbr_ids:
                    nbr_ids[key] = len(nbr_tables)
                    nbr_tables.append(_neighbours(self.dims, *key))
                kinds.append(1)
                args.append(nbr_ids[key])
                masks.append(_mask(step, ncomp))
                continue
            if step.op not in TEMPLATES:
                raise SequenceError(f"step {k} ({step}): unknown operator {step.op!r}", k)
            if TEMPLATES[step.op].ncomp != ncomp:
                raise SequenceError(
                    f"step {k} ({step}): operator acts on {TEMPLATES[step.op].ncomp} components, field has {ncomp}", k
                )
            key = (step.op, step.transpose)
            if key not in self.slots:
                self.slots.append(key)
            kinds.append(0)
            args.append(self.slots.index(key))
            masks.append(np.zeros(ncomp, dtype=np.bool_))
        if not nbr_tables:
            nbr_tables.append(np.zeros(self.nsites, dtype=np.int64))
        self.kinds = np.array(kinds, dtype=np.int64)
        self.args = np.array(args, dtype=np.int64)
        self.masks = np.array(masks, dtype=np.bool_).reshape(len(kinds), ncomp)
        self.nbrs = np.stack(nbr_tables)

    def bind(self, operators: Mapping[str, LocalOperator]):
        """Kernel operand arrays ``(ent_ptr, rows, cols, vidx, vals)`` for these operator values."""
        ent_ptr = [0]
        rows, cols, vidx, vals = [], [], [], []
        base_ids: Dict[str, Tuple[int, int]] = {}
        nvals = 0
        for name, transpose in self.slots:
            if name not in operators:
                k = self.written_index[int(np.flatnonzero(
                    [isinstance(s, (Collide, Potential)) and s.op == name
                     for _, s in self.seq.execution_order()])[0])]
                raise SequenceError(f"step {k} ({name}): no operator bound for {name!r}", k)
            op = operators[name]
            if op.ncomp != self.ncomp:
                raise ConfigError(f"{op.template} acts on {op.ncomp} components, field has {self.ncomp}")
            r, c, v, vv = op.sparse(self.nsites)
            if name not in base_ids:
                base_ids[name] = (nvals, vv.shape[0])
                vals.append(vv)
                nvals += vv.shape[0]
            off = base_ids[name][0]
            if transpose != op.transpose:
                r, c = c, r
            rows.append(r)
            cols.append(c)
            vidx.append(v + off)
            ent_ptr.append(ent_ptr[-1] + len(r))
        empty = np.zeros(0, dtype=np.int64)
        return (
            np.array(ent_ptr, dtype=np.int64),
            np.concatenate(rows) if rows else empty,
            np.concatenate(cols) if cols else empty,
            np.concatenate(vidx) if vidx else empty,
            np.concatenate(vals) if vals else np.zeros((1, self.nsites)),
        )

    def run_flat(self, flat: np.ndarray, bound, workers: int) -> np.ndarray:
        if len(self.kinds) == 0:
            return flat.copy()
        ent_ptr, rows, cols, vidx, vals = bound
        return kernels.run_program(flat.copy(), self.kinds, self.args, self.masks, self.nbrs,
                                   ent_ptr, rows, cols, vidx, vals, workers)

    def __call__(self, field: AmplitudeField, operators: Mapping[str, LocalOperator],
                 workers: Optional[int] = None) -> AmplitudeField:
        if field.dims != self.dims or field.ncomp != self.ncomp:
            raise ConfigError(f"program compiled for {self.dims}x{self.ncomp}, field is {field.dims}x{field.ncomp}")
        w = set_workers(workers or default_workers())
        return field.with_flat(self.run_flat(field.flat(), self.bind(operators), w))


def apply_sequence(field: AmplitudeField, seq: OperatorSequence,
                   operators: Optional[Mapping[str, LocalOperator]] = None,
                   workers: Optional[int] = None) -> AmplitudeField:
    """Run ``seq`` rightmost step first.

    ``operators`` maps each template name used by the program to a bound
    :class:`LocalOperator`; a step's ``transpose`` flag is applied on top.
    Errors carry the written index of the failing step.
    """
    prog = CompiledProgram(seq, field.dims, field.ncomp)
    try:
        return prog(field, operators or {}, workers)
    except (ConfigError, NumericAbort) as exc:
        if isinstance(exc, SequenceError):
            raise
        k = next((k for k, s in seq.execution_order() if not isinstance(s, Stream)), 0)
        raise SequenceError(f"step {k}: {exc}", k) from exc


def l2_norm(field: Union[AmplitudeField, np.ndarray]) -> float:
    """Euclidean norm of all amplitudes with a fixed reduction tree."""
    data = field.data if isinstance(field, AmplitudeField) else np.asarray(field)
    return float(np.sqrt(kernels.sum_squares(data)))
