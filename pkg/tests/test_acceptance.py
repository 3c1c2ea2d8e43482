"""Acceptance suite: eight end-to-end criteria, each printing one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or directly with
``python tests/test_acceptance.py``.
"""

import functools
import json
import os
import subprocess
import sys
import tempfile
import textwrap
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

import oracles
from conftest import make_snap, random_edges
from linkrank import cli
from linkrank.dataset import Dataset, balance, build_threshold_dataset, read_dataset
from linkrank.features import compute_global_features, degree_coeff, jaccard, transitivity_coeff
from linkrank.graph import snapshot_at, window_edges
from linkrank.learners import TrainConfig, cross_validate
from linkrank.metrics import ConfusionCounts, build_report, class_metrics, prc_area, roc_area
from linkrank.ranker import RankerConfig, rank_candidates, retrieve_seeds
from linkrank.synthgen import GenConfig, generate, timeline

PLANTED_SEEDS = range(5)


def report(num, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {title} -- {detail}"
    print("\n" + line, flush=True)
    return ok


# --- 1 ---------------------------------------------------------------------

def criterion_1():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    densities = (0.02, 0.1, 0.3)
    worst = 0.0
    hits_checked = 0
    min_cos = 1.0
    for k in range(50):
        n = int(rng.integers(10, 201))
        edges = random_edges(n, densities[k % 3], rng)
        s = make_snap(edges, vertices=range(n))
        adj = oracles.adjacency_sets(edges, range(n))
        for u in range(n):
            worst = max(worst, abs(degree_coeff(s, u) - oracles.degree_coeff(adj, u)),
                        abs(transitivity_coeff(s, u) - oracles.transitivity(adj, u)))
            for v in range(n):
                worst = max(worst, abs(jaccard(s, u, v) - oracles.jaccard(adj, u, v)))
        if edges and oracles.is_connected(adj) and not oracles.is_bipartite(adj):
            ref, eig = oracles.dense_principal(edges, range(n))
            assert ref @ eig > 1 - 1e-10  # oracle self-check
            auth = compute_global_features(s).authority
            min_cos = min(min_cos, float(auth @ ref / (np.linalg.norm(auth) * np.linalg.norm(ref))))
            hits_checked += 1
    elapsed = time.perf_counter() - start
    ok = worst < 1e-12 and min_cos > 1 - 1e-8 and hits_checked > 0 and elapsed < 60
    return ok, (f"max |delta|={worst:.1e}, HITS min cosine={min_cos:.12f} on {hits_checked} graphs, "
                f"{elapsed:.1f}s")


# --- 2 ---------------------------------------------------------------------

def criterion_2():
    start = time.perf_counter()
    rng = np.random.default_rng(77)
    mismatches = 0
    checked = 0
    for k in range(12):
        n = int(rng.integers(5, 101))
        edges = random_edges(n, (0.05, 0.1, 0.2)[k % 3], rng)
        s = make_snap(edges, vertices=range(n))
        feats = compute_global_features(s)
        adj = oracles.adjacency_sets(edges, range(n))
        score = dict(enumerate(feats.authority.tolist()))
        for th in (0.0, 0.1, 0.2, 0.3, 0.5):
            for u in range(n):
                seeds = retrieve_seeds(s, u, th)
                got = [(c.vertex, c.score, c.via_seed_count)
                       for c in rank_candidates(s, feats, u, seeds, RankerConfig(th=th, k=n))]
                want = oracles.ranked(adj, score, u, th, n)
                mismatches += seeds != oracles.seeds(adj, u, th)
                mismatches += got != want
                checked += 1
    elapsed = time.perf_counter() - start
    return mismatches == 0 and elapsed < 30, (f"{checked} (graph, th, vertex) cases, "
                                              f"{mismatches} mismatches, {elapsed:.1f}s")


# --- 3 ---------------------------------------------------------------------

def criterion_3():
    bad = []
    for seed in range(10):
        cfg = GenConfig(n=1500, authority_bias=2, locality_bias=1, noise=0.2, rng_seed=100 + seed)
        g = generate(cfg)
        t0, t_end = timeline(cfg)
        s = snapshot_at(g, t0)
        w = window_edges(g, s, t0, t_end)
        f = compute_global_features(s)
        st = [build_threshold_dataset(s, w, f, th).stats for th in (0.1, 0.2, 0.3)]
        for key in ("seeds", "candidates", "recall"):
            vals = [x[key] for x in st]
            if any(b > a for a, b in zip(vals, vals[1:])):
                bad.append((seed, key, vals))
    return not bad, f"10 graphs, violations: {bad or 'none'}"


# --- 4 ---------------------------------------------------------------------

def criterion_4():
    tol = 1e-12
    checks = []
    m = class_metrics(ConfusionCounts(9, 1, 9, 1))
    checks.append(abs(m["mcc"] - 0.8))
    m = class_metrics(ConfusionCounts(1, 1, 1, 0))
    checks += [abs(m["precision"] - 0.5), abs(m["recall"] - 1.0), abs(m["f_measure"] - 2 / 3)]
    m = class_metrics(ConfusionCounts(4, 0, 0, 0))
    checks += [abs(m["f_measure"] - 1.0), abs(m["mcc"])]
    checks.append(abs(roc_area([0.9, 0.8, 0.4, 0.3], [1, 0, 1, 0]) - 0.75))
    checks.append(abs(prc_area([0.9, 0.8, 0.4, 0.3], [1, 0, 1, 0]) - (1 + 2 / 3) / 2))
    checks.append(abs(roc_area([0.5] * 4, [1, 0, 1, 0]) - 0.5))
    checks.append(abs(prc_area([0.9, 0.5, 0.4], [0, 0, 1]) - 1 / 3))
    r = build_report([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
    checks.append(max(abs(v - (0.0 if c == "fp_rate" else 1.0)) for c, v in r.weighted.items()))
    hand = max(checks)
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 60))
        s = np.round(rng.random(n), int(rng.integers(1, 4)))  # rounding forces ties
        y = rng.random(n) < rng.uniform(0.1, 0.9)
        y[0], y[1] = True, False
        worst = max(worst, abs(roc_area(s, y) - oracles.roc_pairwise(s.tolist(), y.tolist())))
    return hand < tol and worst < tol, f"hand examples max |delta|={hand:.1e}, ROC vs pairwise max |delta|={worst:.1e}"


# --- 5 & 6 -------------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def planted_run(seed):
    """Generate the planted graph and run the threshold pipeline at th=0.1 through the CLI."""
    work = Path(tempfile.mkdtemp(prefix=f"planted{seed}_"))
    edges = work / "g.txt"
    assert cli.main(["gen", "--n", "5000", "--authority-bias", "3", "--noise", "0.1",
                     "--seed", str(seed), "--out", str(edges)]) == 0
    t = json.loads((work / "g.txt.manifest.json").read_text())["timeline"]
    out = work / "run"
    assert cli.main(["pipeline", "--edges", str(edges), "--t0", str(t["t0"]), "--t-end", str(t["t_end"]),
                     "--mode", "threshold", "--th", "0.1", "--seed", str(seed), "--out", str(out)]) == 0
    return out


def criterion_5():
    start = time.perf_counter()
    rows = []
    for seed in PLANTED_SEEDS:
        out = planted_run(seed)
        run = json.loads((out / "summary.json").read_text())["runs"]["th0.1"]
        f = run["solvers"]["tree"]["weighted_f_measure"]
        top = run["info_gain"][0][0]
        rows.append((seed, f, top, f >= 0.85 and top == "authority2"))
    elapsed = time.perf_counter() - start
    good = sum(r[3] for r in rows)
    detail = "; ".join(f"seed {s}: F={f:.3f} top={t}" for s, f, t, _ in rows)
    return good >= 4 and elapsed < 300, f"{good}/5 seeds ok ({detail}), {elapsed:.1f}s"


def criterion_6():
    rows = []
    for seed in PLANTED_SEEDS:
        ds = read_dataset(planted_run(seed) / "dataset_th0.1.csv")
        a2 = ds.X[:, 1]
        # axis-aligned step: every pair whose target authority exceeds the median is real
        y = ds.y | (a2 > np.median(a2))
        relabeled = balance(Dataset(ds.u, ds.v, ds.X, y, dict(ds.provenance)), seed)
        cfg = TrainConfig()
        f_tree = cross_validate(relabeled, cfg, "tree", 5, seed).weighted["f_measure"]
        f_log = cross_validate(relabeled, cfg, "logistic", 5, seed).weighted["f_measure"]
        rows.append((seed, f_tree, f_log))
    good = sum(t >= l for _, t, l in rows)
    detail = "; ".join(f"seed {s}: tree={t:.3f} logistic={l:.3f}" for s, t, l in rows)
    return good >= 4, f"{good}/5 seeds with tree >= logistic ({detail})"


# --- 7 ---------------------------------------------------------------------

def criterion_7():
    work = Path(tempfile.mkdtemp(prefix="determinism_"))
    edges = work / "g.txt"
    assert cli.main(["gen", "--n", "2000", "--authority-bias", "3", "--noise", "0.1", "--seed", "3",
                     "--out", str(edges)]) == 0
    t = json.loads((work / "g.txt.manifest.json").read_text())["timeline"]
    diffs = []
    for mode in ("classification", "threshold"):
        base = ["pipeline", "--edges", str(edges), "--t0", str(t["t0"]), "--t-end", str(t["t_end"]),
                "--mode", mode, "--seed", "3"]
        a, b, c = work / f"{mode}_1", work / f"{mode}_8", work / f"{mode}_replay"
        assert cli.main(base + ["--threads", "1", "--out", str(a)]) == 0
        assert cli.main(base + ["--threads", "8", "--out", str(b)]) == 0
        assert cli.main(["replay", str(a / "manifest.json"), "--out", str(c), "--threads", "4"]) == 0
        fa = {p.name: p.read_bytes() for p in a.iterdir()}
        for other in (b, c):
            fo = {p.name: p.read_bytes() for p in other.iterdir()}
            if fa != fo:
                diffs.append(f"{other.name}: {sorted(k for k in fa if fa[k] != fo.get(k))}")
        n_files = len(fa)
    return not diffs, f"2 modes x (threads 1 vs 8, manifest replay), {n_files} files each, diffs: {diffs or 'none'}"


# --- 8 ---------------------------------------------------------------------

SCALE_SCRIPT = textwrap.dedent("""
    import json, resource, time
    from linkrank.dataset import build_threshold_dataset
    from linkrank.features import compute_global_features
    from linkrank.graph import snapshot_at, window_edges
    from linkrank.synthgen import GenConfig, generate, timeline
    cfg = GenConfig(n=100_000, m_per_step=5, window_edges=20_000, authority_bias=3, noise=0.1, rng_seed=0)
    g = generate(cfg)
    t0, t_end = timeline(cfg)
    start = time.perf_counter()
    snap = snapshot_at(g, t0)
    feats = compute_global_features(snap)
    ds = build_threshold_dataset(snap, window_edges(g, snap, t0, t_end), feats, 0.1)
    elapsed = time.perf_counter() - start
    print(json.dumps({"vertices": g.n, "edges": g.num_edges, "seconds": elapsed, "instances": len(ds),
                      "peak_mb": resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024}))
""")


def criterion_8():
    # separate process so peak RSS covers only this workload
    r = subprocess.run([sys.executable, "-c", SCALE_SCRIPT], capture_output=True, text=True, timeout=600)
    if r.returncode != 0:
        return False, r.stderr.strip().splitlines()[-1]
    d = json.loads(r.stdout.strip().splitlines()[-1])
    ok = d["vertices"] == 100_000 and d["edges"] >= 500_000 and d["seconds"] < 300 and d["peak_mb"] < 2048
    return ok, (f"{d['vertices']} vertices, {d['edges']} edges, features + threshold dataset in "
                f"{d['seconds']:.1f}s, peak RSS {d['peak_mb']:.0f} MB, {d['instances']} instances")


CRITERIA = [
    (1, "feature-oracle equivalence", criterion_1),
    (2, "ranker-oracle equivalence", criterion_2),
    (3, "threshold monotonicity", criterion_3),
    (4, "metric exactness", criterion_4),
    (5, "planted-signal end-to-end", criterion_5),
    (6, "solver-ordering sanity", criterion_6),
    (7, "determinism", criterion_7),
    (8, "scale smoke test", criterion_8),
]


@pytest.mark.parametrize("num,title,fn", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_acceptance(num, title, fn, capsys):
    ok, detail = fn()
    with capsys.disabled():
        report(num, title, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    results = [report(num, title, *fn()) for num, title, fn in CRITERIA]
    sys.exit(0 if all(results) else 1)
