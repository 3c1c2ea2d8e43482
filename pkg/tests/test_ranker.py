import io

import numpy as np
import pytest

import oracles
from conftest import make_snap, random_edges
from linkrank.features import compute_global_features
from linkrank.ranker import RankerConfig, predict_links, rank_candidates, retrieve_seeds, write_rankings

EX = [(1, 2), (2, 3), (1, 3), (3, 4), (2, 5)]


def test_seeds_example():
    s = make_snap(EX)
    assert retrieve_seeds(s, 1, 0.2) == [2, 3]
    assert retrieve_seeds(s, 1, 0.25) == []  # strict threshold


def test_seeds_isolated_and_high_threshold():
    s = make_snap(EX, vertices=[99])
    assert retrieve_seeds(s, 99, 0.0) == []
    assert retrieve_seeds(s, 1, 1.0 - 1e-9) == []


def test_rank_example_tie_break():
    s = make_snap(EX)
    feats = compute_global_features(s)
    a = feats.authority
    assert a[s.index_of(4)] == pytest.approx(a[s.index_of(5)], abs=1e-12)
    ranked = rank_candidates(s, feats, 1, [2, 3], RankerConfig(th=0.2, k=10))
    assert [c.vertex for c in ranked] == [4, 5]
    assert [c.via_seed_count for c in ranked] == [1, 1]
    top = rank_candidates(s, feats, 1, [2, 3], RankerConfig(th=0.2, k=1))
    assert [c.vertex for c in top] == [4]
    assert rank_candidates(s, feats, 1, [], RankerConfig()) == []


def test_rank_rejects_non_neighbor_seed():
    s = make_snap(EX)
    feats = compute_global_features(s)
    with pytest.raises(ValueError):
        rank_candidates(s, feats, 1, [4], RankerConfig())


def test_config_validation():
    with pytest.raises(ValueError):
        RankerConfig(th=1.0)
    with pytest.raises(ValueError):
        RankerConfig(k=0)
    with pytest.raises(ValueError):
        RankerConfig(scoring="weighted", weights=(0, 0, 0))
    with pytest.raises(ValueError):
        RankerConfig(scoring="pagerank")


def test_predict_links_small_cases():
    s = make_snap(EX, vertices=[99])
    feats = compute_global_features(s)
    assert predict_links(s, feats, [], RankerConfig()).ranked == {}
    r = predict_links(s, feats, [99, 12345], RankerConfig())
    assert r.ranked == {99: []}
    assert 12345 in r.failed


@pytest.mark.parametrize("scoring", ["authority", "degree_norm", "transitivity", "weighted"])
def test_predict_links_matches_naive(scoring):
    rng = np.random.default_rng(7)
    n = 100
    edges = random_edges(n, 0.08, rng)
    s = make_snap(edges, vertices=range(n))
    feats = compute_global_features(s)
    cfg = RankerConfig(th=0.1, k=10, scoring=scoring, weights=(0.5, 0.3, 0.2))
    score = dict(zip(range(n), cfg.score_vector(feats).tolist()))
    adj = oracles.adjacency_sets(edges, range(n))
    res = predict_links(s, feats, range(n), cfg, threads=4)
    for u in range(n):
        want = oracles.ranked(adj, score, u, 0.1, 10)
        got = [(c.vertex, c.score, c.via_seed_count) for c in res.ranked[u]]
        assert got == want
        assert u not in [c for c, *_ in got]
        assert not set(c for c, *_ in got) & adj[u]


def test_monotone_in_threshold():
    rng = np.random.default_rng(8)
    n = 80
    s = make_snap(random_edges(n, 0.1, rng), vertices=range(n))
    feats = compute_global_features(s)
    ths = [0.0, 0.1, 0.2, 0.3, 0.5]
    for u in range(n):
        sets = [set(retrieve_seeds(s, u, th)) for th in ths]
        cands = [{c.vertex for c in rank_candidates(s, feats, u, sorted(sd), RankerConfig(k=n))}
                 for sd in sets]
        for a, b in zip(sets, sets[1:]):
            assert b <= a
        for a, b in zip(cands, cands[1:]):
            assert b <= a


def test_write_rankings_format():
    s = make_snap(EX)
    feats = compute_global_features(s)
    res = predict_links(s, feats, [1], RankerConfig(th=0.2))
    buf = io.StringIO()
    write_rankings(res, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "user,rank,candidate,score,via_seed_count"
    assert [l.split(",")[2] for l in lines[1:]] == ["4", "5"]
    assert res.seed_counts[1] == 2 and res.candidate_counts[1] == 2
