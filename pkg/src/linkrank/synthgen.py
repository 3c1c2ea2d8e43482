"""Seedable synthetic temporal graphs with a planted link-formation signal.

Growth is preferential attachment from a seed clique (optionally with
triad formation, Holme-Kim style). After the cutoff, window edges are
planted between existing vertices with target weight

    (1 + degree(target)) ** authority_bias * (1 + common(u, target)) ** locality_bias

or, with probability ``noise``, uniformly among non-edges. With
``signal_source="authority"`` the degree term is replaced by the t0 HITS
authority rescaled so its maximum equals the maximum degree.
"""

from __future__ import annotations

import math
import os
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import GenerationError
from .features import hits
from .graph import Snapshot, TemporalGraph, from_edges, snapshot_from_pairs


@dataclass(frozen=True)
class GenConfig:
    n: int = 1000
    m_per_step: int = 2
    t0_fraction: float = 0.9
    window_edges: int | None = None  # None -> 3 * n
    authority_bias: float = 0.0
    locality_bias: float = 0.0
    noise: float = 0.0
    triad_prob: float = 0.9
    signal_source: str = "authority"  # or "degree"
    rng_seed: int = 0

    def __post_init__(self):
        if self.m_per_step < 1 or self.n < self.m_per_step + 1:
            raise GenerationError("need m_per_step >= 1 and n >= m_per_step + 1")
        if not 0.0 < self.t0_fraction < 1.0:
            raise GenerationError("t0_fraction must lie in (0, 1)")
        if self.window_edges is not None and self.window_edges < 0:
            raise GenerationError("window_edges must be >= 0")
        if self.authority_bias < 0 or self.locality_bias < 0:
            raise GenerationError("biases must be non-negative")
        if not 0.0 <= self.noise <= 1.0 or not 0.0 <= self.triad_prob <= 1.0:
            raise GenerationError("noise and triad_prob must lie in [0, 1]")
        if self.signal_source not in ("authority", "degree"):
            raise GenerationError("signal_source must be 'authority' or 'degree'")

    @property
    def n_window(self) -> int:
        return 3 * self.n if self.window_edges is None else int(self.window_edges)


def timeline(cfg: GenConfig) -> tuple[int, int]:
    """(t0, t_end): growth occupies [0, t0], planted edges (t0, t_end]."""
    t0 = cfg.n - cfg.m_per_step - 1
    t_end = max(t0 + 1, math.ceil(t0 / cfg.t0_fraction))
    return t0, t_end


def _stream(seed: int, name: str) -> np.random.Generator:
    import zlib
    return np.random.default_rng([int(seed), zlib.crc32(name.encode())])


def grow(cfg: GenConfig, rng: np.random.Generator):
    """Preferential-attachment edges as (u, v, t) lists."""
    m = cfg.m_per_step
    us, vs, ts = [], [], []
    adj: list[list[int]] = [[] for _ in range(cfg.n)]
    pool: list[int] = []  # each vertex once per incident edge

    def add(a, b, t):
        us.append(a)
        vs.append(b)
        ts.append(t)
        adj[a].append(b)
        adj[b].append(a)
        pool.append(a)
        pool.append(b)

    for a in range(m + 1):
        for b in range(a + 1, m + 1):
            add(a, b, 0)
    for v in range(m + 1, cfg.n):
        t = v - m
        chosen: list[int] = []
        anchor = None
        while len(chosen) < m:
            target = None
            if anchor is not None and rng.random() < cfg.triad_prob:
                opts = [w for w in adj[anchor] if w not in chosen]
                if opts:
                    target = opts[int(rng.integers(len(opts)))]
            if target is None:
                target = pool[int(rng.integers(len(pool)))]
                if target in chosen:
                    continue
                anchor = target
            chosen.append(target)
        for target in chosen:
            add(target, v, t)
    return us, vs, ts


def plant(snap: Snapshot, count: int, authority_bias: float, locality_bias: float,
          noise: float, rng: np.random.Generator, strength=None):
    """Sample ``count`` distinct non-edges of ``snap``.

    ``strength`` is the per-vertex attractiveness (defaults to degree).
    Returns (sources, targets) internal index arrays; sources are uniform,
    targets carry the weighted signal.
    """
    n = snap.n
    available = n * (n - 1) // 2 - snap.m
    if count > available:
        raise GenerationError(f"cannot plant {count} window edges: only {available} non-edges")
    deg = snap.degrees.astype(float) if strength is None else np.asarray(strength, dtype=float)
    base = (1.0 + deg) ** authority_bias
    cum = np.cumsum(base)
    partners: dict[int, set] = {}
    src, dst = [], []
    stalls = 0
    while len(src) < count:
        u = int(rng.integers(n))
        excluded = set(snap.adj(u).tolist())
        excluded.add(u)
        excluded |= partners.get(u, set())
        if len(excluded) >= n:
            stalls += 1
            if stalls > 100 * n:
                raise GenerationError("could not find free pairs to plant")
            continue
        if rng.random() < noise:
            v = _uniform_target(n, excluded, rng)
        else:
            v = _weighted_target(snap, u, base, cum, excluded, locality_bias, rng)
        partners.setdefault(u, set()).add(v)
        partners.setdefault(v, set()).add(u)
        src.append(u)
        dst.append(v)
    return np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64)


def _uniform_target(n, excluded, rng):
    for _ in range(1000):
        v = int(rng.integers(n))
        if v not in excluded:
            return v
    pool = np.setdiff1d(np.arange(n), np.fromiter(excluded, dtype=np.int64))
    return int(pool[rng.integers(len(pool))])


def _draw(cum, rng):
    return int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))


def _weighted_target(snap, u, base, cum, excluded, locality_bias, rng):
    extra_v = extra_w = None
    if locality_bias > 0:
        two_hop = np.concatenate([snap.adj(w) for w in snap.adj(u).tolist()] or [np.zeros(0, np.int64)])
        if len(two_hop):
            cand, common = np.unique(two_hop, return_counts=True)
            keep = np.fromiter((c not in excluded for c in cand.tolist()), dtype=bool, count=len(cand))
            extra_v = cand[keep]
            extra_w = base[extra_v] * ((1.0 + common[keep]) ** locality_bias - 1.0)
    ex = np.fromiter(excluded, dtype=np.int64)
    global_mass = cum[-1] - base[ex].sum()
    extra_mass = extra_w.sum() if extra_w is not None else 0.0
    if global_mass <= 0 and extra_mass <= 0:
        return _uniform_target(len(base), excluded, rng)
    if extra_mass > 0 and rng.random() * (global_mass + extra_mass) >= global_mass:
        return int(extra_v[_draw(np.cumsum(extra_w), rng)])
    for _ in range(200):
        v = _draw(cum, rng)
        if v not in excluded:
            return v
    # excluded vertices hold most of the mass; sample the complement exactly
    w = base.copy()
    w[ex] = 0.0
    return _draw(np.cumsum(w), rng)


def generate(cfg: GenConfig) -> TemporalGraph:
    """Growth edges at t <= t0 followed by planted edges in (t0, t_end]."""
    gen_rng = _stream(cfg.rng_seed, "generation")
    us, vs, ts = grow(cfg, gen_rng)
    t0, t_end = timeline(cfg)
    ids = np.arange(cfg.n, dtype=np.int64)
    u = np.array(us, dtype=np.int64)
    v = np.array(vs, dtype=np.int64)
    snap = snapshot_from_pairs(np.minimum(u, v), np.maximum(u, v), ids, t0=t0)
    strength = None
    if cfg.signal_source == "authority" and snap.m:
        auth = hits(snap).authority
        strength = auth / auth.max() * snap.max_degree
    plant_rng = _stream(cfg.rng_seed, "planting")
    pu, pv = plant(snap, cfg.n_window, cfg.authority_bias, cfg.locality_bias, cfg.noise,
                   plant_rng, strength)
    pt = np.sort(plant_rng.integers(t0 + 1, t_end + 1, size=len(pu)))
    return from_edges(np.concatenate([u, pu]), np.concatenate([v, pv]),
                      np.concatenate([np.array(ts, dtype=np.int64), pt]))


def links_per_vertex(g: TemporalGraph, t_from=None, t_to=None) -> list[tuple[int, int]]:
    """(vertex, temporal edge count) rows, optionally restricted to t_from < t <= t_to."""
    mask = np.ones(g.num_edges, dtype=bool)
    if t_from is not None:
        mask &= g.t > t_from
    if t_to is not None:
        mask &= g.t <= t_to
    counts = np.bincount(np.concatenate([g.src[mask], g.dst[mask]]), minlength=g.n)
    return [(int(g.vertex_ids[i]), int(c)) for i, c in enumerate(counts.tolist()) if c]


def degree_histogram(g: TemporalGraph, t_from=None, t_to=None) -> list[tuple[int, int]]:
    """(links per vertex, number of vertices) rows, ascending."""
    c = Counter(cnt for _, cnt in links_per_vertex(g, t_from, t_to))
    return sorted(c.items())


def links_per_step(g: TemporalGraph, divisor: int = 1, t_from=None, t_to=None) -> list[tuple[int, int]]:
    """(t // divisor, temporal edge count) rows, ascending."""
    if divisor < 1:
        raise ValueError("divisor must be >= 1")
    t = g.t
    if t_from is not None:
        t = t[t > t_from]
    if t_to is not None:
        t = t[t <= t_to]
    c = Counter((t // divisor).tolist())
    return sorted(c.items())


def write_rows(rows, sink, header="value,count") -> None:
    text = header + "\n" + "".join(f"{a},{b}\n" for a, b in rows)
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sink.write(text)
