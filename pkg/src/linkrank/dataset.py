"""Labeled real/false link datasets built from a t0 snapshot and the
observation window that follows it."""

from __future__ import annotations

import io
import os
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import BalanceError, ParseError
from .features import FeatureTable
from .graph import ObservationWindow, Snapshot
from .ranker import candidate_indices, seed_indices

FEATURE_NAMES = ("authority1", "authority2", "degree1", "degree2", "transitivity1", "transitivity2")
HEADER = "u,v," + ",".join(FEATURE_NAMES) + ",label"
REAL, FALSE = "real", "false"


class LabeledInstance(NamedTuple):
    u: int
    v: int
    authority1: float
    authority2: float
    degree1: float
    degree2: float
    transitivity1: float
    transitivity2: float
    label: str


@dataclass(eq=False)
class Dataset:
    """Column-oriented instance store. ``u``/``v`` hold external ids,
    ``X`` the six features in FEATURE_NAMES order, ``y`` True for real."""

    u: np.ndarray
    v: np.ndarray
    X: np.ndarray
    y: np.ndarray
    provenance: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.y)

    @property
    def n_real(self) -> int:
        return int(self.y.sum())

    @property
    def n_false(self) -> int:
        return len(self.y) - self.n_real

    @property
    def instances(self) -> list[LabeledInstance]:
        return [LabeledInstance(u, v, *x, REAL if y else FALSE)
                for u, v, x, y in zip(self.u.tolist(), self.v.tolist(), self.X.tolist(), self.y.tolist())]

    def pairs(self) -> set:
        return {(min(a, b), max(a, b)) for a, b in zip(self.u.tolist(), self.v.tolist())}

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.u[idx], self.v[idx], self.X[idx], self.y[idx], dict(self.provenance))

    def equals(self, other: "Dataset") -> bool:
        return (np.array_equal(self.u, other.u) and np.array_equal(self.v, other.v)
                and np.array_equal(self.X, other.X) and np.array_equal(self.y, other.y)
                and self.provenance == other.provenance)

    @classmethod
    def from_instances(cls, instances, provenance=None) -> "Dataset":
        instances = list(instances)
        u = np.array([i.u for i in instances], dtype=np.int64)
        v = np.array([i.v for i in instances], dtype=np.int64)
        X = np.array([i[2:8] for i in instances], dtype=float).reshape(-1, 6)
        y = np.array([i.label == REAL for i in instances], dtype=bool)
        return cls(u, v, X, y, dict(provenance or {}))


def _provenance(window, variant, th, seed):
    return {"t0": window.t_start, "t_end": window.t_end, "variant": variant, "th": th, "seed": seed}


def _assemble(snap, feats, a, b, real, provenance) -> Dataset:
    """Sort pairs by (slot1, slot2) and attach features from ``feats``."""
    order = np.lexsort((b, a))
    a, b, real = a[order], b[order], real[order]
    X = np.column_stack([
        feats.authority[a], feats.authority[b],
        feats.degree_norm[a], feats.degree_norm[b],
        feats.transitivity[a], feats.transitivity[b],
    ]) if len(a) else np.zeros((0, 6))
    ids = snap.vertex_ids
    return Dataset(ids[a].astype(np.int64), ids[b].astype(np.int64), X.astype(float),
                   real.astype(bool), provenance)


def _orient(a, b, active_mask):
    """Slot 1 goes to the active endpoint; lower id when both are active."""
    swap = active_mask[b] & (~active_mask[a] | (b < a))
    return np.where(swap, b, a), np.where(swap, a, b)


def active_indices(snap: Snapshot, window: ObservationWindow, roster=None) -> np.ndarray:
    """Sorted internal indices of old users touching at least one window pair.

    A user is old if it has an edge at t0, or appears in ``roster`` (external ids).
    """
    touched = window.endpoints()
    old = snap.degrees[touched] > 0
    if roster is not None:
        rost = np.asarray(sorted(set(int(r) for r in roster)), dtype=np.int64)
        old |= np.isin(snap.vertex_ids[touched], rost)
    return touched[old]


def active_users(snap: Snapshot, window: ObservationWindow, roster=None) -> set:
    return set(snap.vertex_ids[active_indices(snap, window, roster)].tolist())


def build_classification_dataset(snap: Snapshot, window: ObservationWindow, feats: FeatureTable,
                                 neg_cap_per_user: int = 10, rng_seed: int = 0,
                                 roster=None) -> Dataset:
    """Real links between active users plus sampled unobserved links.

    Every active user contributes at most ``neg_cap_per_user`` false pairs,
    drawn uniformly from active targets that are neither t0 neighbors,
    window partners, nor already paired.
    """
    if neg_cap_per_user < 1:
        raise ValueError("neg_cap_per_user must be >= 1")
    _check_features(snap, feats)
    n = snap.n
    active = active_indices(snap, window, roster)
    is_active = np.zeros(n, dtype=bool)
    is_active[active] = True
    prov = _provenance(window, "classification", None, rng_seed)

    wp = window.pairs
    both = is_active[wp[:, 0]] & is_active[wp[:, 1]] if len(wp) else np.zeros(0, dtype=bool)
    real_a, real_b = wp[both, 0], wp[both, 1]

    rng = np.random.default_rng(rng_seed)
    used = set((real_a * n + real_b).tolist())
    partners = {}
    for a, b in zip(real_a.tolist(), real_b.tolist()):
        partners.setdefault(a, set()).add(b)
        partners.setdefault(b, set()).add(a)
    neg_a, neg_b = [], []
    cap = int(neg_cap_per_user)
    n_act = len(active)
    for u in active.tolist():
        picked = _sample_negatives(snap, window, u, active, n_act, cap, used, rng)
        for w in picked:
            used.add(min(u, w) * n + max(u, w))
            neg_a.append(u)
            neg_b.append(w)

    a = np.concatenate([real_a, np.asarray(neg_a, dtype=np.int64)])
    b = np.concatenate([real_b, np.asarray(neg_b, dtype=np.int64)])
    real = np.concatenate([np.ones(len(real_a), bool), np.zeros(len(neg_a), bool)])
    a, b = _orient(a, b, is_active)
    if len(a) == 0:
        warnings.warn("no eligible pairs: classification dataset is empty", stacklevel=2)
    ds = _assemble(snap, feats, a, b, real, prov)
    ds.stats = {"active_users": int(n_act), "window_pairs": len(window)}
    return ds


def _valid_targets(snap, window, u, cand, used, n):
    cand = cand[cand != u]
    if not len(cand):
        return cand
    uu = np.full(len(cand), u)
    ok = ~snap.has_pairs(uu, cand) & ~window.contains_pairs(uu, cand)
    keys = np.minimum(uu, cand) * n + np.maximum(uu, cand)
    ok &= np.fromiter((k not in used for k in keys.tolist()), dtype=bool, count=len(keys))
    return cand[ok]


def _sample_negatives(snap, window, u, active, n_act, cap, used, rng):
    n = snap.n
    picked: list[int] = []
    # rejection sampling from the active set is uniform over the valid pool;
    # fall back to exact enumeration when the pool turns out to be small
    attempts = 0
    chosen = set()
    while len(picked) < cap and attempts < 20 * cap and n_act > 1:
        attempts += 1
        w = int(active[rng.integers(n_act)])
        if w == u or w in chosen:
            continue
        if len(_valid_targets(snap, window, u, np.array([w]), used, n)) == 0:
            continue
        chosen.add(w)
        picked.append(w)
    if len(picked) < cap:
        pool = _valid_targets(snap, window, u, active, used, n)
        pool = pool[~np.isin(pool, np.asarray(picked, dtype=np.int64))]
        need = min(cap - len(picked), len(pool))
        if need:
            picked.extend(rng.choice(pool, size=need, replace=False).tolist())
    return picked


def _check_features(snap, feats):
    if len(feats) != snap.n or not np.array_equal(feats.vertex_ids, snap.vertex_ids):
        raise ValueError("feature table does not belong to this snapshot")


def threshold_pairs(snap: Snapshot, active: np.ndarray, th: float):
    """All (active user, candidate) pairs reachable through seeds at ``th``.

    Returns (a, b, seed_total, candidate_total) with pairs unoriented and
    possibly duplicated across users.
    """
    a_parts, b_parts = [], []
    n_seeds = 0
    n_cands = 0
    for u in active.tolist():
        seeds = seed_indices(snap, u, th)
        if not len(seeds):
            continue
        n_seeds += len(seeds)
        cands, _ = candidate_indices(snap, u, seeds)
        n_cands += len(cands)
        a_parts.append(np.full(len(cands), u, dtype=np.int64))
        b_parts.append(cands)
    if not a_parts:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, n_seeds, n_cands
    return np.concatenate(a_parts), np.concatenate(b_parts), n_seeds, n_cands


def build_threshold_dataset(snap: Snapshot, window: ObservationWindow, feats: FeatureTable,
                            th: float, rng_seed: int = 0, roster=None) -> Dataset:
    """Candidates of every active user via Jaccard-gated seeds.

    A pair is real when it appears in the window, false otherwise. Slot 1
    holds the user whose candidate list produced the pair, or the lower id
    when each endpoint is a candidate of the other.
    ``stats`` records seed/candidate totals and real-link recall against
    the window pairs.
    """
    if not 0.0 <= th < 1.0:
        raise ValueError(f"th must lie in [0, 1), got {th}")
    _check_features(snap, feats)
    n = snap.n
    active = active_indices(snap, window, roster)
    is_active = np.zeros(n, dtype=bool)
    is_active[active] = True
    a, b, n_seeds, n_cands = threshold_pairs(snap, active, th)
    # slot 1 is the querying user; a pair reached from both ends goes to the lower id
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    keys, first, hits = np.unique(lo * n + hi, return_index=True, return_counts=True)
    a, b = a[first], b[first]
    mutual = hits > 1
    a, b = np.where(mutual, lo[first], a), np.where(mutual, hi[first], b)
    real = window.contains_pairs(a, b)
    ds = _assemble(snap, feats, a, b, real, _provenance(window, "threshold", th, rng_seed))
    ds.stats = {
        "active_users": int(len(active)),
        "seeds": int(n_seeds),
        "candidates": int(n_cands),
        "window_pairs": len(window),
        "recall": ds.n_real / len(window) if len(window) else 0.0,
    }
    return ds


def balance(ds: Dataset, rng_seed: int = 0) -> Dataset:
    """Undersample the majority class to the minority size, then shuffle."""
    real = np.flatnonzero(ds.y)
    false = np.flatnonzero(~ds.y)
    if not len(real) or not len(false):
        raise BalanceError(f"cannot balance: {len(real)} real and {len(false)} false instances")
    rng = np.random.default_rng(rng_seed)
    if len(real) > len(false):
        real = np.sort(rng.choice(real, size=len(false), replace=False))
    elif len(false) > len(real):
        false = np.sort(rng.choice(false, size=len(real), replace=False))
    idx = rng.permutation(np.concatenate([real, false]))
    out = ds.subset(idx)
    out.provenance["balanced"] = rng_seed
    return out


def _fmt_prov(p: dict) -> str:
    keys = ["t0", "t_end", "variant", "th", "seed"] + sorted(k for k in p if k not in
                                                           ("t0", "t_end", "variant", "th", "seed"))
    return "# " + " ".join(f"{k}={'none' if p.get(k) is None else p.get(k)}" for k in keys)


def write_dataset(ds: Dataset, sink) -> None:
    lines = [_fmt_prov(ds.provenance), HEADER]
    for u, v, x, y in zip(ds.u.tolist(), ds.v.tolist(), ds.X.tolist(), ds.y.tolist()):
        lines.append(f"{u},{v}," + ",".join(repr(f) for f in x) + f",{REAL if y else FALSE}")
    text = "\n".join(lines) + "\n"
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sink.write(text)


def _parse_value(s: str):
    if s == "none":
        return None
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    return s


def read_dataset(source) -> Dataset:
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    elif isinstance(source, bytes):
        text = source.decode("utf-8")
    else:
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
    prov = {}
    u, v, X, y = [], [], [], []
    saw_header = False
    for lineno, line in enumerate(io.StringIO(text), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                if "=" not in tok:
                    raise ParseError(f"bad provenance token {tok!r}", lineno)
                k, val = tok.split("=", 1)
                prov[k] = _parse_value(val)
            continue
        if not saw_header:
            if line != HEADER:
                raise ParseError(f"expected header {HEADER!r}", lineno)
            saw_header = True
            continue
        parts = line.split(",")
        if len(parts) != 9:
            raise ParseError(f"expected 9 fields, got {len(parts)}", lineno)
        try:
            a, b = int(parts[0]), int(parts[1])
            feats = [float(p) for p in parts[2:8]]
        except ValueError:
            raise ParseError("non-numeric field", lineno) from None
        if parts[8] not in (REAL, FALSE):
            raise ParseError(f"label must be real or false, got {parts[8]!r}", lineno)
        u.append(a)
        v.append(b)
        X.append(feats)
        y.append(parts[8] == REAL)
    if not saw_header:
        raise ParseError("missing header line", None)
    return Dataset(np.array(u, dtype=np.int64), np.array(v, dtype=np.int64),
                   np.array(X, dtype=float).reshape(-1, 6), np.array(y, dtype=bool), prov)
