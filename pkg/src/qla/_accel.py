"""Backend selection: numba-compiled kernels or the pure numpy fallback.

Set ``QLA_BACKEND=numpy`` to force the fallback (``numba`` is the default when
importable).  ``QLA_WORKERS`` overrides the default worker count.
"""
from __future__ import annotations

import os

# must be fixed before numba is imported; the thread pool size is read once
os.environ.setdefault("NUMBA_NUM_THREADS", str(max(8, os.cpu_count() or 1)))
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

_requested = os.environ.get("QLA_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"QLA_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

try:
    if _requested == "numpy":
        raise ImportError("numba disabled by QLA_BACKEND")
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

    prange = range

BACKEND = "numba" if HAVE_NUMBA else "numpy"


def max_workers() -> int:
    if HAVE_NUMBA:
        return int(numba.config.NUMBA_NUM_THREADS)
    return max(8, os.cpu_count() or 1)


def default_workers() -> int:
    env = os.environ.get("QLA_WORKERS")
    if env:
        return int(env)
    return 1


def set_workers(n: int) -> int:
    """Clamp and apply a worker count; returns the value actually used."""
    if n < 1:
        raise ValueError(f"worker count must be >= 1, got {n}")
    n = min(n, max_workers())
    if HAVE_NUMBA:
        numba.set_num_threads(n)
    return n
