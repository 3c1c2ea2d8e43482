"""Temporal edge lists, immutable CSR snapshots and observation windows.

External vertex ids are arbitrary non-negative 64-bit integers. Internally
every vertex gets a dense index; the index is assigned in ascending order
of external id, so sorting by internal index and sorting by external id
agree everywhere.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass, field
from typing import IO, Iterator, NamedTuple, Union

import numpy as np

from .errors import ParseError, UnknownVertexError

MAX_ID = 2**63 - 1


class TemporalEdge(NamedTuple):
    u: int
    v: int
    t: int


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class TemporalGraph:
    """Timestamped undirected edge multiset.

    ``src``/``dst`` hold internal indices with ``src < dst``; duplicates of
    the same pair at different timestamps are kept.
    """

    src: np.ndarray
    dst: np.ndarray
    t: np.ndarray
    vertex_ids: np.ndarray
    lines_read: int = 0
    dropped_self_loops: int = 0

    @property
    def n(self) -> int:
        return len(self.vertex_ids)

    @property
    def num_edges(self) -> int:
        return len(self.t)

    def index_of(self, u) -> int:
        return _index_of(self.vertex_ids, u)

    def edges(self) -> Iterator[TemporalEdge]:
        ids = self.vertex_ids
        for a, b, t in zip(self.src.tolist(), self.dst.tolist(), self.t.tolist()):
            yield TemporalEdge(int(ids[a]), int(ids[b]), t)

    def unique_pairs(self) -> int:
        return len(np.unique(self.src * self.n + self.dst))

    def earliest(self) -> dict:
        """Earliest timestamp per unordered external pair."""
        out = {}
        for e in self.edges():
            key = (min(e.u, e.v), max(e.u, e.v))
            if key not in out or e.t < out[key]:
                out[key] = e.t
        return out


def _index_of(vertex_ids, u) -> int:
    try:
        u = int(u)
    except (TypeError, ValueError):
        raise UnknownVertexError(u) from None
    i = int(np.searchsorted(vertex_ids, u))
    if i >= len(vertex_ids) or vertex_ids[i] != u:
        raise UnknownVertexError(u)
    return i


def from_edges(u, v, t, *, lines_read=None, extra_vertices=()) -> TemporalGraph:
    """Build a TemporalGraph from parallel arrays of external ids."""
    u = np.asarray(u, dtype=np.int64).reshape(-1)
    v = np.asarray(v, dtype=np.int64).reshape(-1)
    t = np.asarray(t, dtype=np.int64).reshape(-1)
    if not (len(u) == len(v) == len(t)):
        raise ValueError("edge arrays differ in length")
    ids = np.unique(np.concatenate([u, v, np.asarray(list(extra_vertices), dtype=np.int64)]))
    loops = u == v
    dropped = int(loops.sum())
    keep = ~loops
    a = np.searchsorted(ids, u[keep])
    b = np.searchsorted(ids, v[keep])
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    return TemporalGraph(
        src=_readonly(lo),
        dst=_readonly(hi),
        t=_readonly(t[keep]),
        vertex_ids=_readonly(ids),
        lines_read=len(u) if lines_read is None else lines_read,
        dropped_self_loops=dropped,
    )


Source = Union[str, os.PathLike, bytes, IO]


def _open_lines(source: Source):
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8")), True
    if isinstance(source, (str, os.PathLike)):
        return open(source, encoding="utf-8"), True
    if isinstance(source, io.TextIOBase):
        return source, False
    return io.TextIOWrapper(source, encoding="utf-8"), False


def load_edge_list(source: Source) -> TemporalGraph:
    """Parse ``u v t`` lines. Blank lines and ``#`` comments are skipped.

    Raises ParseError (with the 1-based line number) on malformed lines or
    negative ids/timestamps. Self-loops are dropped and counted in
    ``dropped_self_loops``.
    """
    fh, close = _open_lines(source)
    us, vs, ts = [], [], []
    lines = 0
    try:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            lines += 1
            parts = s.split()
            if len(parts) != 3:
                raise ParseError(f"expected 3 fields 'u v t', got {len(parts)}", lineno)
            try:
                a, b, t = (int(p) for p in parts)
            except ValueError:
                raise ParseError(f"non-integer field in {s!r}", lineno) from None
            if a < 0 or b < 0 or t < 0:
                raise ParseError("negative vertex id or timestamp", lineno)
            if a > MAX_ID or b > MAX_ID or t > MAX_ID:
                raise ParseError("value exceeds 64-bit range", lineno)
            us.append(a)
            vs.append(b)
            ts.append(t)
    finally:
        if close:
            fh.close()
    return from_edges(us, vs, ts, lines_read=lines)


def write_edge_list(g: TemporalGraph, sink) -> None:
    ids = g.vertex_ids
    out = [f"{ids[a]} {ids[b]} {t}\n" for a, b, t in zip(g.src.tolist(), g.dst.tolist(), g.t.tolist())]
    text = "".join(out)
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sink.write(text)


@dataclass(frozen=True, eq=False)
class Snapshot:
    """Simple undirected graph in CSR form.

    Neighbor lists are sorted ascending by internal index. ``edge_keys``
    holds ``lo * n + hi`` for every edge, sorted, which gives vectorised
    pair membership tests.
    """

    indptr: np.ndarray
    indices: np.ndarray
    vertex_ids: np.ndarray
    edge_keys: np.ndarray
    t0: int | None = None
    degrees: np.ndarray = field(init=False, repr=False)
    memo: dict = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "degrees", _readonly(np.diff(self.indptr)))

    def cached(self, name, build):
        """Memoise a derived array; results are pure functions of the snapshot."""
        if name not in self.memo:
            self.memo[name] = build()
        return self.memo[name]

    @property
    def n(self) -> int:
        return len(self.vertex_ids)

    @property
    def m(self) -> int:
        return len(self.edge_keys)

    @property
    def max_degree(self) -> int:
        return int(self.degrees.max()) if self.n else 0

    def index_of(self, u) -> int:
        return _index_of(self.vertex_ids, u)

    def adj(self, i: int) -> np.ndarray:
        """Neighbor slice for internal index ``i``."""
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def neighbors(self, u) -> list[int]:
        return self.vertex_ids[self.adj(self.index_of(u))].tolist()

    def degree(self, u) -> int:
        return int(self.degrees[self.index_of(u)])

    def has_edge(self, u, v) -> bool:
        a = self.adj(self.index_of(u))
        j = self.index_of(v)
        k = int(np.searchsorted(a, j))
        return k < len(a) and a[k] == j

    def has_pairs(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Vectorised edge test over internal index arrays."""
        keys = np.minimum(a, b) * self.n + np.maximum(a, b)
        pos = np.searchsorted(self.edge_keys, keys)
        pos = np.minimum(pos, max(len(self.edge_keys) - 1, 0))
        if not len(self.edge_keys):
            return np.zeros(len(keys), dtype=bool)
        return self.edge_keys[pos] == keys

    def edges(self) -> np.ndarray:
        """(m, 2) array of external id pairs, lower id first."""
        lo = self.edge_keys // max(self.n, 1)
        hi = self.edge_keys % max(self.n, 1)
        return np.stack([self.vertex_ids[lo], self.vertex_ids[hi]], axis=1)

    def stats(self) -> dict:
        return {"n": self.n, "m": self.m, "max_degree": self.max_degree}


def snapshot_from_pairs(lo: np.ndarray, hi: np.ndarray, vertex_ids: np.ndarray, t0=None) -> Snapshot:
    n = len(vertex_ids)
    keys = np.unique(np.asarray(lo, dtype=np.int64) * n + np.asarray(hi, dtype=np.int64))
    lo = keys // max(n, 1)
    hi = keys % max(n, 1)
    rows = np.concatenate([lo, hi])
    cols = np.concatenate([hi, lo])
    order = np.lexsort((cols, rows))
    cols = cols[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    return Snapshot(
        indptr=_readonly(indptr),
        indices=_readonly(cols.astype(np.int64)),
        vertex_ids=vertex_ids,
        edge_keys=_readonly(keys),
        t0=t0,
    )


def snapshot_at(g: TemporalGraph, t0: int) -> Snapshot:
    """Edges with ``t <= t0`` collapsed into a simple graph over all of g's vertices."""
    mask = g.t <= t0
    return snapshot_from_pairs(g.src[mask], g.dst[mask], g.vertex_ids, t0=int(t0))


@dataclass(frozen=True, eq=False)
class ObservationWindow:
    """New unordered pairs first seen in ``(t_start, t_end]``.

    ``keys`` are sorted ``lo * n + hi`` internal pair codes.
    """

    t_start: int
    t_end: int
    keys: np.ndarray
    vertex_ids: np.ndarray

    def __len__(self):
        return len(self.keys)

    @property
    def pairs(self) -> np.ndarray:
        n = max(len(self.vertex_ids), 1)
        return np.stack([self.keys // n, self.keys % n], axis=1)

    @property
    def new_edges(self) -> set:
        ids = self.vertex_ids
        return {(int(ids[a]), int(ids[b])) for a, b in self.pairs.tolist()}

    def contains_pairs(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        n = len(self.vertex_ids)
        keys = np.minimum(a, b) * n + np.maximum(a, b)
        if not len(self.keys):
            return np.zeros(len(keys), dtype=bool)
        pos = np.minimum(np.searchsorted(self.keys, keys), len(self.keys) - 1)
        return self.keys[pos] == keys

    def endpoints(self) -> np.ndarray:
        """Sorted internal indices incident to at least one window pair."""
        return np.unique(self.pairs.reshape(-1))


def window_edges(g: TemporalGraph, snap: Snapshot, t0: int, t_end: int) -> ObservationWindow:
    if t_end <= t0:
        raise ValueError(f"t_end ({t_end}) must be greater than t0 ({t0})")
    n = g.n
    mask = (g.t > t0) & (g.t <= t_end)
    keys = np.unique(g.src[mask] * n + g.dst[mask])
    if len(snap.edge_keys) and len(keys):
        keys = keys[~np.isin(keys, snap.edge_keys, assume_unique=True)]
    return ObservationWindow(int(t0), int(t_end), _readonly(keys), g.vertex_ids)


def neighbors(snap: Snapshot, u) -> list[int]:
    return snap.neighbors(u)


def degree(snap: Snapshot, u) -> int:
    return snap.degree(u)


def has_edge(snap: Snapshot, u, v) -> bool:
    return snap.has_edge(u, v)


def max_degree(snap: Snapshot) -> int:
    return snap.max_degree


def ingest_stats(g: TemporalGraph, snap: Snapshot) -> dict:
    return {
        "lines": g.lines_read,
        "temporal_edges": g.num_edges,
        "unique_pairs": g.unique_pairs(),
        "dropped_self_loops": g.dropped_self_loops,
        "vertices": g.n,
        "t0": snap.t0,
        **snap.stats(),
    }
