"""Compiled CSR loops. Each kernel works on a half-open vertex range so
callers can split the work across threads without changing any result."""

from concurrent.futures import ThreadPoolExecutor

import numba
import numpy as np


@numba.njit(cache=True, nogil=True)
def _count_common(indptr, indices, u, v):
    a0, a1 = indptr[u], indptr[u + 1]
    b0, b1 = indptr[v], indptr[v + 1]
    if a1 - a0 > b1 - b0:
        a0, a1, b0, b1 = b0, b1, a0, a1
    c = 0
    for p in range(a0, a1):
        x = indices[p]
        lo, hi = b0, b1
        while lo < hi:
            mid = (lo + hi) >> 1
            if indices[mid] < x:
                lo = mid + 1
            else:
                hi = mid
        if lo < b1 and indices[lo] == x:
            c += 1
    return c


@numba.njit(cache=True, nogil=True)
def common_counts_range(indptr, indices, out, start, stop):
    """out[p] = |N(u) & N(v)| for every CSR entry p = (u, v), u in [start, stop)."""
    for u in range(start, stop):
        for p in range(indptr[u], indptr[u + 1]):
            out[p] = _count_common(indptr, indices, u, indices[p])


@numba.njit(cache=True, nogil=True)
def spmv_range(indptr, indices, x, out, start, stop):
    """out[u] = sum of x over N(u), accumulated in ascending neighbor order."""
    for u in range(start, stop):
        s = 0.0
        for p in range(indptr[u], indptr[u + 1]):
            s += x[indices[p]]
        out[u] = s


@numba.njit(cache=True, nogil=True)
def pair_common_counts(indptr, indices, a, b, out):
    for i in range(len(a)):
        out[i] = _count_common(indptr, indices, a[i], b[i])


def chunks(n, parts):
    parts = max(1, min(int(parts), n)) if n else 1
    bounds = np.linspace(0, n, parts + 1).astype(np.int64)
    return list(zip(bounds[:-1].tolist(), bounds[1:].tolist()))


def run_ranges(kernel, n, threads, *args):
    """Apply ``kernel(*args, start, stop)`` over [0, n), optionally threaded.

    Ranges write disjoint output slices, so the result does not depend on
    the number of threads.
    """
    spans = chunks(n, threads)
    if threads <= 1 or len(spans) == 1:
        for s, e in spans:
            kernel(*args, s, e)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(lambda se: kernel(*args, se[0], se[1]), spans))
