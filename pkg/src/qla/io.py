"""Run outputs: binary field snapshots, diagnostics CSV and the run manifest."""
from __future__ import annotations

import csv
import json
import re
import struct
import subprocess
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError

__all__ = [
    "DiagnosticsWriter",
    "SNAPSHOT_MAGIC",
    "read_snapshot",
    "snapshot_name",
    "snapshot_step",
    "version_string",
    "write_manifest",
    "write_snapshot",
]

SNAPSHOT_MAGIC = b"QLAF"
SNAPSHOT_VERSION = 1
# magic, version, Nx, Ny (1 for 1D), ncomp: 4 + 2 + 4 + 4 + 2 = 16 bytes
_HEADER = struct.Struct("<4sHIIH")


def snapshot_name(step: int) -> str:
    return f"snapshot_{step:09d}.bin"


def snapshot_step(path) -> int:
    m = re.search(r"snapshot_(\d+)\.bin$", str(path))
    if not m:
        raise ConfigError(f"cannot infer the step number from snapshot name {path}", key="resume")
    return int(m.group(1))


def write_snapshot(path, data: np.ndarray) -> None:
    """``data`` is ``(ncomp, N)`` or ``(ncomp, Nx, Ny)``; stored little-endian float64, row-major."""
    data = np.asarray(data, dtype="<f8")
    ncomp = data.shape[0]
    nx = data.shape[1]
    ny = data.shape[2] if data.ndim == 3 else 1
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, nx, ny, ncomp))
        fh.write(np.ascontiguousarray(data).tobytes())


def read_snapshot(path, one_d: Optional[bool] = None) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ConfigError(f"snapshot {path} is shorter than its header", key="resume")
    magic, version, nx, ny, ncomp = _HEADER.unpack_from(raw)
    if magic != SNAPSHOT_MAGIC or version != SNAPSHOT_VERSION:
        raise ConfigError(f"{path} is not a version-{SNAPSHOT_VERSION} snapshot", key="resume")
    expect = _HEADER.size + 8 * nx * ny * ncomp
    if len(raw) != expect:
        raise ConfigError(f"snapshot {path} has {len(raw)} bytes, header implies {expect}", key="resume")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).astype(np.float64)
    if one_d or (one_d is None and ny == 1):
        return data.reshape(ncomp, nx)
    return data.reshape(ncomp, nx, ny)


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


class DiagnosticsWriter:
    """CSV with a fixed column list; floats use shortest round-trip ``repr``."""

    def __init__(self, path, columns: Sequence[str], append: bool = False):
        self.columns = list(columns)
        new = not append or not Path(path).exists()
        self._fh = open(path, "a" if append else "w", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        if new:
            self._w.writerow(self.columns)

    def write(self, row: Mapping[str, object]) -> None:
        self._w.writerow([_fmt(row.get(c, "")) for c in self.columns])
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def version_string() -> str:
    """``git describe``-style identifier, falling back to the package version."""
    from . import __version__

    try:
        out = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True, text=True, timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def write_manifest(path, payload: Mapping[str, object]) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
