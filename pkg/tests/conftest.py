import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from linkrank.graph import from_edges, snapshot_at


def make_snap(edges, vertices=()):
    """Snapshot at t=0 from an undirected edge list over external ids."""
    edges = list(edges)
    u = np.array([a for a, _ in edges], dtype=np.int64)
    v = np.array([b for _, b in edges], dtype=np.int64)
    g = from_edges(u, v, np.zeros(len(edges), dtype=np.int64), extra_vertices=vertices)
    return snapshot_at(g, 0)


def random_edges(n, p, rng):
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < p
    return list(zip(iu[keep].tolist(), ju[keep].tolist()))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
