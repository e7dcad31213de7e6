"""Hot loops: sparse site-local matrix application and one-site streaming.

Both backends perform the same floating-point operations in the same order per
site, so results do not depend on how sites are partitioned among workers.

Layout: ``field[c, s]`` holds component ``c`` at flattened site ``s``.  A local
operator is a list of sparse entries ``(row, col, val_id)`` over a value table
``vals[val_id, s]``; a stream is a gather through a neighbour table
``nbr[s]`` (the site whose value moves into ``s``).
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ._accel import HAVE_NUMBA, njit, prange

__all__ = ["apply_entries", "stream_gather", "run_program", "sum_squares"]


# --- numba kernels -----------------------------------------------------------

@njit(parallel=True, nogil=True, cache=True)
def _apply_entries_nb(src, rows, cols, vidx, vals, dst):
    nc, ns = src.shape
    ne = rows.shape[0]
    for s in prange(ns):
        for i in range(nc):
            dst[i, s] = 0.0
        for e in range(ne):
            dst[rows[e], s] += vals[vidx[e], s] * src[cols[e], s]


@njit(parallel=True, nogil=True, cache=True)
def _stream_nb(src, mask, nbr, dst):
    nc, ns = src.shape
    for s in prange(ns):
        t = nbr[s]
        for c in range(nc):
            if mask[c]:
                dst[c, s] = src[c, t]
            else:
                dst[c, s] = src[c, s]


BLOCK = 512


def _run_program_py(field, kinds, args, masks, nbrs, ent_ptr, rows, cols, vidx, vals, scratch):
    """Execute steps in the given order; returns the buffer holding the result (0 or 1)."""
    nc, ns = field.shape
    nblocks = (ns + BLOCK - 1) // BLOCK
    cur = 0
    for k in range(kinds.shape[0]):
        if cur == 0:
            src = field
            dst = scratch
        else:
            src = scratch
            dst = field
        if kinds[k] == 0:
            lo = ent_ptr[args[k]]
            hi = ent_ptr[args[k] + 1]
            for b in prange(nblocks):
                s0 = b * BLOCK
                s1 = min(ns, s0 + BLOCK)
                for i in range(nc):
                    for s in range(s0, s1):
                        dst[i, s] = 0.0
                for e in range(lo, hi):
                    r = rows[e]
                    c = cols[e]
                    v = vidx[e]
                    for s in range(s0, s1):
                        dst[r, s] += vals[v, s] * src[c, s]
        else:
            nbr = nbrs[args[k]]
            for b in prange(nblocks):
                s0 = b * BLOCK
                s1 = min(ns, s0 + BLOCK)
                for c in range(nc):
                    if masks[k, c]:
                        for s in range(s0, s1):
                            dst[c, s] = src[c, nbr[s]]
                    else:
                        for s in range(s0, s1):
                            dst[c, s] = src[c, s]
        cur = 1 - cur
    return cur


# (not disk-cached: both dispatchers share one Python function and would share a cache index)
_run_program_par = njit(parallel=True, nogil=True)(_run_program_py)
_run_program_ser = njit(nogil=True)(_run_program_py)


@njit(nogil=True, cache=True)
def _block_sums_nb(flat, block):
    n = flat.shape[0]
    nb = (n + block - 1) // block
    out = np.zeros(nb)
    for b in range(nb):
        lo = b * block
        hi = min(n, lo + block)
        acc = 0.0
        for i in range(lo, hi):
            acc += flat[i] * flat[i]
        out[b] = acc
    return out


# --- numpy fallback ----------------------------------------------------------

def _chunks(n: int, workers: int):
    workers = max(1, min(workers, n))
    edges = np.linspace(0, n, workers + 1).astype(np.int64)
    return [(int(edges[i]), int(edges[i + 1])) for i in range(workers)]


def _parallel(fn, n: int, workers: int) -> None:
    parts = _chunks(n, workers)
    if len(parts) == 1:
        fn(*parts[0])
        return
    with ThreadPoolExecutor(max_workers=len(parts)) as pool:
        list(pool.map(lambda p: fn(*p), parts))


def _apply_entries_np(src, rows, cols, vidx, vals, dst, workers=1):
    def part(lo, hi):
        dst[:, lo:hi] = 0.0
        for r, c, v in zip(rows, cols, vidx):
            dst[r, lo:hi] += vals[v, lo:hi] * src[c, lo:hi]

    _parallel(part, src.shape[1], workers)


def _stream_np(src, mask, nbr, dst, workers=1):
    def part(lo, hi):
        idx = nbr[lo:hi]
        for c in range(src.shape[0]):
            dst[c, lo:hi] = src[c, idx] if mask[c] else src[c, lo:hi]

    _parallel(part, src.shape[1], workers)


def _block_sums_np(flat, block):
    n = flat.shape[0]
    nb = (n + block - 1) // block
    out = np.zeros(nb)
    for b in range(nb):
        seg = flat[b * block:(b + 1) * block]
        acc = 0.0
        # sequential accumulation to match the compiled kernel bit for bit
        for v in (seg * seg).tolist():
            acc += v
        out[b] = acc
    return out


# --- dispatch ----------------------------------------------------------------

def apply_entries(src, rows, cols, vidx, vals, dst, workers: int = 1) -> None:
    if HAVE_NUMBA:
        _apply_entries_nb(src, rows, cols, vidx, vals, dst)
    else:
        _apply_entries_np(src, rows, cols, vidx, vals, dst, workers)


def stream_gather(src, mask, nbr, dst, workers: int = 1) -> None:
    if HAVE_NUMBA:
        _stream_nb(src, mask, nbr, dst)
    else:
        _stream_np(src, mask, nbr, dst, workers)


def run_program(field, kinds, args, masks, nbrs, ent_ptr, rows, cols, vidx, vals, workers: int = 1):
    """Run a compiled step list in place on ``field``; returns the result array."""
    scratch = np.empty_like(field)
    if HAVE_NUMBA:
        fn = _run_program_par if workers > 1 else _run_program_ser
        cur = fn(field, kinds, args, masks, nbrs, ent_ptr, rows, cols, vidx, vals, scratch)
        return field if cur == 0 else scratch
    bufs = (field, scratch)
    cur = 0
    for k in range(kinds.shape[0]):
        src, dst = bufs[cur], bufs[1 - cur]
        if kinds[k] == 0:
            lo, hi = ent_ptr[args[k]], ent_ptr[args[k] + 1]
            _apply_entries_np(src, rows[lo:hi], cols[lo:hi], vidx[lo:hi], vals, dst, workers)
        else:
            _stream_np(src, masks[k], nbrs[args[k]], dst, workers)
        cur = 1 - cur
    return bufs[cur]


def sum_squares(flat: np.ndarray, block: int = 1024) -> float:
    """Sum of squares with a fixed reduction tree: sequential blocks, then pairwise."""
    flat = np.ascontiguousarray(flat, dtype=np.float64).ravel()
    if flat.size == 0:
        return 0.0
    sums = _block_sums_nb(flat, block) if HAVE_NUMBA else _block_sums_np(flat, block)
    sums = list(sums)
    while len(sums) > 1:
        nxt = [sums[i] + sums[i + 1] for i in range(0, len(sums) - 1, 2)]
        if len(sums) % 2:
            nxt.append(sums[-1])
        sums = nxt
    return float(sums[0])
