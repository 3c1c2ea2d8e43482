"""Local (Jaccard) and global (HITS authority, normalized degree,
transitivity) topology features over a Snapshot."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .graph import Snapshot

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 1000
COLUMNS = ("authority", "hub", "degree_norm", "transitivity")


class VertexFeatures(NamedTuple):
    authority: float
    hub: float
    degree_norm: float
    transitivity: float


def common_neighbor_counts(snap: Snapshot, threads: int = 1) -> np.ndarray:
    """``|N(u) & N(v)|`` for every CSR entry (u, v) of the snapshot."""

    def build():
        out = np.zeros(len(snap.indices), dtype=np.int64)
        _kernels.run_ranges(_kernels.common_counts_range, snap.n, threads,
                            snap.indptr, snap.indices, out)
        out.flags.writeable = False
        return out

    return snap.cached("common", build)


def edge_jaccard(snap: Snapshot, threads: int = 1) -> np.ndarray:
    """Jaccard coefficient for every CSR entry, aligned with ``snap.indices``."""

    def build():
        common = common_neighbor_counts(snap, threads)
        deg = snap.degrees
        rows = np.repeat(np.arange(snap.n), deg)
        union = deg[rows] + deg[snap.indices] - common
        out = common / union  # union >= 2 for an existing edge
        out.flags.writeable = False
        return out

    return snap.cached("jaccard", build)


def jaccard(snap: Snapshot, u, v) -> float:
    """|N(u) & N(v)| / |N(u) | N(v)|; 0.0 when both neighborhoods are empty."""
    i, j = snap.index_of(u), snap.index_of(v)
    a, b = snap.adj(i), snap.adj(j)
    union = len(a) + len(b)
    if union == 0:
        return 0.0
    if i == j:
        return 1.0
    out = np.zeros(1, dtype=np.int64)
    _kernels.pair_common_counts(snap.indptr, snap.indices,
                                np.array([i]), np.array([j]), out)
    c = int(out[0])
    return c / (union - c)


def degree_coeff(snap: Snapshot, u) -> float:
    d = snap.degree(u)
    md = snap.max_degree
    return d / md if md else 0.0


def transitivity_coeff(snap: Snapshot, u) -> float:
    i = snap.index_of(u)
    d = int(snap.degrees[i])
    if d <= 1:
        return 0.0
    common = common_neighbor_counts(snap)
    twice_e = int(common[snap.indptr[i]:snap.indptr[i + 1]].sum())
    return twice_e / (d * (d - 1))


def transitivity_all(snap: Snapshot, threads: int = 1) -> np.ndarray:
    common = common_neighbor_counts(snap, threads)
    d = snap.degrees
    cs = np.concatenate([[0], np.cumsum(common)])
    twice_e = cs[snap.indptr[1:]] - cs[snap.indptr[:-1]]
    denom = d * (d - 1)
    out = np.zeros(snap.n)
    ok = d > 1
    out[ok] = twice_e[ok] / denom[ok]
    return out


class HitsResult(NamedTuple):
    authority: np.ndarray
    hub: np.ndarray
    iterations: int
    residual: float
    hub_auth_gap: float


def _normalize(x):
    norm = np.linalg.norm(x)
    return x / norm if norm > 0 else x


def hits(snap: Snapshot, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
         threads: int = 1) -> HitsResult:
    """Hub/authority scores by alternating power iteration.

    Each sweep sets auth = A @ hub, then hub = A @ auth, L2-normalizing
    after each update. Iteration stops once the authority vector moves by
    less than ``tol`` (L2) between sweeps.

    On an undirected graph both scores share one fixed point, the principal
    eigenvector of A. When the dominant component is bipartite the two
    iterates settle on mirror images ``a*v1 + b*v2`` and ``a*v1 - b*v2``
    (v2 for eigenvalue -lambda1), so the reported score for both columns is
    ``normalize(auth + hub)``. ``hub_auth_gap`` keeps the raw
    ``max |auth - hub|`` before that merge.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if int(max_iter) < 1:
        raise ValueError("max_iter must be >= 1")
    n = snap.n
    if n == 0:
        empty = np.zeros(0)
        return HitsResult(empty, empty, 0, 0.0, 0.0)
    hub = np.full(n, 1.0 / math.sqrt(n))
    auth = hub.copy()
    buf = np.empty(n)
    residual = math.inf
    it = 0
    for it in range(1, int(max_iter) + 1):
        prev = auth
        _kernels.run_ranges(_kernels.spmv_range, n, threads, snap.indptr, snap.indices, hub, buf)
        auth = _normalize(buf.copy())
        _kernels.run_ranges(_kernels.spmv_range, n, threads, snap.indptr, snap.indices, auth, buf)
        hub = _normalize(buf.copy())
        residual = float(np.linalg.norm(auth - prev))
        if residual < tol:
            break
    gap = float(np.max(np.abs(auth - hub)))
    score = _normalize(auth + hub)
    return HitsResult(score, score.copy(), it, residual, gap)


@dataclass(frozen=True, eq=False)
class FeatureTable:
    vertex_ids: np.ndarray
    authority: np.ndarray
    hub: np.ndarray
    degree_norm: np.ndarray
    transitivity: np.ndarray
    hits_iterations: int = 0
    hits_residual: float = 0.0
    hub_auth_gap: float = 0.0

    def __len__(self):
        return len(self.vertex_ids)

    def column(self, name: str) -> np.ndarray:
        if name not in COLUMNS:
            raise ValueError(f"unknown feature column {name!r}")
        return getattr(self, name)

    def row(self, u) -> VertexFeatures:
        i = int(np.searchsorted(self.vertex_ids, u))
        if i >= len(self.vertex_ids) or self.vertex_ids[i] != u:
            from .errors import UnknownVertexError
            raise UnknownVertexError(u)
        return VertexFeatures(float(self.authority[i]), float(self.hub[i]),
                              float(self.degree_norm[i]), float(self.transitivity[i]))

    def identical(self, other: "FeatureTable") -> bool:
        return all(np.array_equal(getattr(self, c), getattr(other, c))
                   for c in ("vertex_ids",) + COLUMNS)

    def to_csv(self, sink) -> None:
        lines = ["vertex,authority,degree_norm,transitivity\n"]
        for v, a, d, t in zip(self.vertex_ids.tolist(), self.authority.tolist(),
                              self.degree_norm.tolist(), self.transitivity.tolist()):
            lines.append(f"{v},{a!r},{d!r},{t!r}\n")
        _write(sink, "".join(lines))


def _write(sink, text):
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sink.write(text)


def compute_global_features(snap: Snapshot, tol: float = DEFAULT_TOL,
                            max_iter: int = DEFAULT_MAX_ITER, threads: int = 1) -> FeatureTable:
    h = hits(snap, tol, max_iter, threads)
    md = snap.max_degree
    deg = snap.degrees / md if md else np.zeros(snap.n)
    return FeatureTable(
        vertex_ids=snap.vertex_ids,
        authority=h.authority,
        hub=h.hub,
        degree_norm=deg,
        transitivity=transitivity_all(snap, threads),
        hits_iterations=h.iterations,
        hits_residual=h.residual,
        hub_auth_gap=h.hub_auth_gap,
    )


def feature_histogram(table: FeatureTable, column: str, bins: int,
                      transform: str = "identity") -> list[tuple[float, int]]:
    """Equal-width histogram of one feature column.

    ``transform`` is ``identity`` or ``log1p`` (log(x + 1)). Returns
    ``(bin_lower, count)`` rows whose counts sum to the vertex count.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if len(table) == 0:
        return []
    x = np.asarray(table.column(column), dtype=float)
    if transform == "log1p":
        x = np.log1p(x)
    elif transform != "identity":
        raise ValueError(f"unknown transform {transform!r}")
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        counts = np.zeros(bins, dtype=np.int64)
        counts[0] = len(x)
        return [(lo, int(c)) for c in counts]
    counts, edges = np.histogram(x, bins=bins, range=(lo, hi))
    return [(float(e), int(c)) for e, c in zip(edges[:-1], counts)]
