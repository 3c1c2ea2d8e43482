"""Command-line driver.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant
violation. Every command that writes files also writes a JSON run manifest
next to them; ``linkrank replay MANIFEST`` re-executes it.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import zlib
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import (FEATURE_NAMES, balance, build_classification_dataset,
                      build_threshold_dataset, read_dataset, write_dataset)
from .errors import InvariantViolation, LinkRankError
from .features import DEFAULT_MAX_ITER, DEFAULT_TOL, compute_global_features, edge_jaccard, feature_histogram
from .graph import ingest_stats, load_edge_list, snapshot_at, window_edges, write_edge_list
from .learners import (TrainConfig, TreeConfig, canonical_variant, cross_val_predict,
                       pruning_effect, rank_features, save_model, train)
from .metrics import REPORT_HEADER, build_report
from .ranker import RankerConfig, predict_links, write_rankings
from .synthgen import (GenConfig, degree_histogram, generate, links_per_step,
                       links_per_vertex, timeline, write_rows)

log = logging.getLogger("linkrank")

DEFAULT_THRESHOLDS = (0.1, 0.2, 0.3)
SOLVERS = ("gaussian_nb", "tree", "logistic")
# options that change wall time or destinations only, never output bytes
_NOT_IN_MANIFEST = {"threads", "out", "func", "verbose"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def sub_seed(seed: int, name: str) -> int:
    """Independent integer seed for a named random stream."""
    ss = np.random.SeedSequence([int(seed), zlib.crc32(name.encode())])
    return int(ss.generate_state(1)[0])


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_json(path, obj):
    _write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _manifest(args, inputs, outputs, extra=None) -> dict:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in _NOT_IN_MANIFEST}
    m = {
        "tool": "linkrank",
        "version": __version__,
        "command": args.command,
        "params": params,
        "inputs": {str(p): _digest(p) for p in inputs},
        "outputs": [os.path.basename(str(o)) for o in outputs],
    }
    if getattr(args, "seed", None) is not None:
        m["seeds"] = {name: sub_seed(args.seed, name)
                      for name in ("generation", "negatives", "balance", "folds")}
    if extra:
        m.update(extra)
    return m


def _finish(args, inputs, outputs, extra=None):
    out = Path(args.out)
    path = out / "manifest.json" if out.is_dir() else out.with_name(out.name + ".manifest.json")
    _write_json(path, _manifest(args, inputs, outputs, extra))


def _snapshot(args):
    g = load_edge_list(args.edges)
    snap = snapshot_at(g, args.t0)
    return g, snap


def _window(g, snap, args):
    return window_edges(g, snap, args.t0, args.t_end)


# --- commands ----------------------------------------------------------------

def cmd_gen(args):
    cfg = GenConfig(n=args.n, m_per_step=args.m, t0_fraction=args.t0_fraction,
                    window_edges=args.window_edges, authority_bias=args.authority_bias,
                    locality_bias=args.locality_bias, noise=args.noise, triad_prob=args.triad_prob,
                    signal_source=args.signal_source, rng_seed=sub_seed(args.seed, "generation"))
    g = generate(cfg)
    write_edge_list(g, args.out)
    t0, t_end = timeline(cfg)
    print(json.dumps({"t0": t0, "t_end": t_end, "edges": g.num_edges}))
    _finish(args, [], [args.out], {"timeline": {"t0": t0, "t_end": t_end}})


def cmd_ingest_stats(args):
    g, snap = _snapshot(args)
    stats = ingest_stats(g, snap)
    if args.t_end is not None:
        stats["window_pairs"] = len(_window(g, snap, args))
    text = json.dumps(stats, indent=2, sort_keys=True) + "\n"
    if args.out:
        _write_text(args.out, text)
        _finish(args, [args.edges], [args.out])
    else:
        sys.stdout.write(text)


def cmd_features(args):
    _, snap = _snapshot(args)
    table = compute_global_features(snap, args.tol, args.max_iter, args.threads)
    table.to_csv(args.out)
    _finish(args, [args.edges], [args.out],
            {"hits": {"iterations": table.hits_iterations, "residual": table.hits_residual}})


def cmd_histogram(args):
    g = load_edge_list(args.edges)
    kind = args.column
    if kind == "links-per-vertex":
        rows = degree_histogram(g, args.t0, args.t_end)
    elif kind == "links-per-user":
        rows = links_per_vertex(g, args.t0, args.t_end)
    elif kind == "links-per-step":
        rows = links_per_step(g, args.divisor, args.t0, args.t_end)
    else:
        if args.t0 is None:
            raise UsageError("--t0 is required for feature histograms")
        snap = snapshot_at(g, args.t0)
        if kind == "jaccard":
            # one value per undirected edge
            rows_u = np.repeat(np.arange(snap.n), snap.degrees)
            vals = edge_jaccard(snap, args.threads)[rows_u < snap.indices]
            from .features import FeatureTable
            fake = FeatureTable(np.arange(len(vals)), vals, vals, vals, vals)
            rows = feature_histogram(fake, "authority", args.bins, args.transform)
        else:
            table = compute_global_features(snap, threads=args.threads)
            rows = feature_histogram(table, kind, args.bins, args.transform)
        rows = [(repr(a), c) for a, c in rows]
    write_rows(rows, args.out, "value,count" if kind != "links-per-user" else "vertex,count")
    _finish(args, [args.edges], [args.out])


def cmd_rank(args):
    _, snap = _snapshot(args)
    feats = compute_global_features(snap, threads=args.threads)
    weights = tuple(args.weights) if args.weights else (1.0, 0.0, 0.0)
    cfg = RankerConfig(th=args.th, k=args.k, scoring=args.scoring, weights=weights)
    if args.users:
        users = [int(x) for x in args.users.split(",") if x.strip()]
    else:
        users = snap.vertex_ids[snap.degrees > 0].tolist()
    result = predict_links(snap, feats, users, cfg, args.threads)
    write_rankings(result, args.out)
    for u, err in result.failed.items():
        print(f"warning: user {u}: {err}", file=sys.stderr)
    _finish(args, [args.edges], [args.out], {
        "failed_users": sorted(result.failed),
        "totals": {"users": len(users), "seeds": sum(result.seed_counts.values()),
                   "candidates": sum(result.candidate_counts.values())},
    })


def _build(args, g, snap, feats, th=None):
    window = _window(g, snap, args)
    if args.mode == "classification":
        return build_classification_dataset(snap, window, feats, args.neg_cap,
                                            sub_seed(args.seed, "negatives"))
    return build_threshold_dataset(snap, window, feats, th, sub_seed(args.seed, "negatives"))


def cmd_build_dataset(args):
    g, snap = _snapshot(args)
    feats = compute_global_features(snap, threads=args.threads)
    th = args.th[0] if args.th else DEFAULT_THRESHOLDS[0]
    ds = _build(args, g, snap, feats, th)
    write_dataset(ds, args.out)
    _finish(args, [args.edges], [args.out], {"stats": ds.stats})


def cmd_balance(args):
    ds = read_dataset(args.dataset)
    out = balance(ds, sub_seed(args.seed, "balance"))
    write_dataset(out, args.out)
    _finish(args, [args.dataset], [args.out])


def _info_gain_csv(ranking):
    return "feature,info_gain\n" + "".join(f"{name},{float(gain)!r}\n" for name, gain in ranking)


def cmd_rank_features(args):
    ds = read_dataset(args.dataset)
    _write_text(args.out, _info_gain_csv(rank_features(ds, args.bins)))
    _finish(args, [args.dataset], [args.out])


def _train_config(args):
    return TrainConfig(tree=TreeConfig(min_leaf=args.min_leaf, max_depth=args.max_depth,
                                       pruning_confidence=args.pruning_confidence),
                       rng_seed=args.seed)


def cmd_train(args):
    ds = read_dataset(args.dataset)
    model = train(ds, _train_config(args), args.variant[0])
    save_model(model, args.out)
    _finish(args, [args.dataset], [args.out])


def _evaluate(ds, args, variant):
    p = cross_val_predict(ds, _train_config(args), variant, args.folds,
                          sub_seed(args.seed, "folds"), args.threads)
    return build_report(p.scores, p.labels)


def cmd_evaluate(args):
    ds = read_dataset(args.dataset)
    variants = [canonical_variant(v) for v in (args.variant or ["tree"])]
    lines = []
    for v in variants:
        rep = _evaluate(ds, args, v)
        text = rep.to_csv(prefix=v if len(variants) > 1 else None)
        lines.extend(text.splitlines()[(1 if lines else 0):])
    _write_text(args.out, "\n".join(lines) + "\n")
    _finish(args, [args.dataset], [args.out])


def cmd_pipeline(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    g, snap = _snapshot(args)
    window = _window(g, snap, args)
    # leakage guard: features see only edges stamped <= t0
    if snap.t0 != args.t0 or (len(window) and snap.has_pairs(window.pairs[:, 0], window.pairs[:, 1]).any()):
        raise InvariantViolation("observation-window pairs present in the feature snapshot")
    if g.num_edges and snap.m > len(np.unique((g.src * g.n + g.dst)[g.t <= args.t0])):
        raise InvariantViolation("snapshot holds edges stamped after t0")
    feats = compute_global_features(snap, args.tol, args.max_iter, args.threads)
    feats.to_csv(out / "features.csv")
    outputs = ["features.csv"]
    variants = [canonical_variant(v) for v in (args.variant or SOLVERS)]
    if args.mode == "classification":
        runs = [("classification", None)]
    else:
        ths = args.th or list(DEFAULT_THRESHOLDS)
        runs = [(f"th{th:g}", th) for th in ths]
    summary = {"snapshot": ingest_stats(g, snap), "window_pairs": len(window), "runs": {}}
    for tag, th in runs:
        ds = _build(args, g, snap, feats, th)
        write_dataset(ds, out / f"dataset_{tag}.csv")
        run = {"stats": ds.stats, "real": ds.n_real, "false": ds.n_false}
        outputs.append(f"dataset_{tag}.csv")
        try:
            bal = balance(ds, sub_seed(args.seed, "balance"))
        except LinkRankError as exc:
            run["error"] = str(exc)
            summary["runs"][tag] = run
            log.warning("%s: %s", tag, exc)
            continue
        write_dataset(bal, out / f"balanced_{tag}.csv")
        ranking = rank_features(bal, args.bins)
        _write_text(out / f"info_gain_{tag}.csv", _info_gain_csv(ranking))
        lines = ["solver," + REPORT_HEADER]
        run["solvers"] = {}
        for v in variants:
            rep = _evaluate(bal, args, v)
            lines.extend(rep.to_csv(prefix=v).splitlines()[1:])
            run["solvers"][v] = {"weighted_f_measure": rep.weighted["f_measure"],
                                 "roc_area": rep.weighted["roc_area"]}
        if "tree" in variants:
            run["pruning"] = pruning_effect(bal, _train_config(args), args.folds,
                                            sub_seed(args.seed, "folds"))
        _write_text(out / f"report_{tag}.csv", "\n".join(lines) + "\n")
        run["balanced"] = len(bal)
        run["info_gain"] = [[n, float(gval)] for n, gval in ranking]
        outputs += [f"balanced_{tag}.csv", f"info_gain_{tag}.csv", f"report_{tag}.csv"]
        summary["runs"][tag] = run
    _write_json(out / "summary.json", summary)
    outputs.append("summary.json")
    _finish(args, [args.edges], outputs)


def cmd_replay(args):
    with open(args.manifest, encoding="utf-8") as fh:
        m = json.load(fh)
    argv = [m["command"]]
    for k, v in m["params"].items():
        if k == "command" or v is None or v is False:
            continue
        flag = "--" + k.replace("_", "-")
        if v is True:
            argv.append(flag)
        elif isinstance(v, list):
            for item in v:
                argv += [flag, str(item)]
        else:
            argv += [flag, str(v)]
    argv += ["--out", args.out, "--threads", str(args.threads)]
    return main(argv)


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="linkrank", description="Temporal link prediction toolkit.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, edges=True, t0=True, t_end=False, seed=False):
        if edges:
            sp.add_argument("--edges", required=True, help="edge list 'u v t'")
        if t0:
            sp.add_argument("--t0", type=int, required=True)
        if t_end:
            sp.add_argument("--t-end", type=int, required=True)
        if seed:
            sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("-v", "--verbose", action="store_true")

    sp = sub.add_parser("gen", help="generate a synthetic temporal graph")
    sp.add_argument("--n", type=int, default=1000)
    sp.add_argument("--m", type=int, default=2, help="edges per arriving vertex")
    sp.add_argument("--t0-fraction", type=float, default=0.9)
    sp.add_argument("--window-edges", type=int, default=None)
    sp.add_argument("--authority-bias", type=float, default=0.0)
    sp.add_argument("--locality-bias", type=float, default=0.0)
    sp.add_argument("--noise", type=float, default=0.0)
    sp.add_argument("--triad-prob", type=float, default=0.9)
    sp.add_argument("--signal-source", choices=("authority", "degree"), default="authority")
    sp.add_argument("--out", required=True)
    common(sp, edges=False, t0=False, seed=True)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("ingest-stats", help="snapshot statistics as JSON")
    common(sp)
    sp.add_argument("--t-end", type=int, default=None)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_ingest_stats)

    sp = sub.add_parser("features", help="per-vertex global features CSV")
    common(sp)
    sp.add_argument("--tol", type=float, default=DEFAULT_TOL)
    sp.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_features)

    sp = sub.add_parser("histogram", help="histogram / count CSVs behind the figures")
    sp.add_argument("--edges", required=True)
    sp.add_argument("--t0", type=int, default=None)
    sp.add_argument("--t-end", type=int, default=None)
    sp.add_argument("--column", required=True,
                    choices=("authority", "degree_norm", "transitivity", "jaccard",
                             "links-per-vertex", "links-per-user", "links-per-step"))
    sp.add_argument("--bins", type=int, default=20)
    sp.add_argument("--transform", choices=("identity", "log1p"), default="identity")
    sp.add_argument("--divisor", type=int, default=1, help="timestamp units per step (e.g. 86400)")
    sp.add_argument("--out", required=True)
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("-v", "--verbose", action="store_true")
    sp.set_defaults(func=cmd_histogram)

    sp = sub.add_parser("rank", help="ranked candidate lists per user")
    common(sp)
    sp.add_argument("--th", type=float, default=0.1)
    sp.add_argument("--k", type=int, default=10)
    sp.add_argument("--scoring", choices=("authority", "degree_norm", "transitivity", "weighted"),
                    default="authority")
    sp.add_argument("--weights", type=float, nargs=3, default=None)
    sp.add_argument("--users", default=None, help="comma-separated user ids (default: all with edges)")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_rank)

    def dataset_opts(sp):
        sp.add_argument("--mode", choices=("classification", "threshold"), default="classification")
        sp.add_argument("--th", type=float, action="append", default=None)
        sp.add_argument("--neg-cap", type=int, default=10)

    sp = sub.add_parser("build-dataset", help="labeled real/false link dataset")
    common(sp, t_end=True, seed=True)
    dataset_opts(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_build_dataset)

    sp = sub.add_parser("balance", help="undersample the majority class")
    sp.add_argument("--dataset", required=True)
    common(sp, edges=False, t0=False, seed=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_balance)

    sp = sub.add_parser("rank-features", help="information gain per feature")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--bins", type=int, default=10)
    common(sp, edges=False, t0=False)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_rank_features)

    def learner_opts(sp):
        sp.add_argument("--variant", action="append", default=None,
                        choices=("nb", "gaussian_nb", "logistic", "tree"))
        sp.add_argument("--folds", type=int, default=5)
        sp.add_argument("--min-leaf", type=int, default=2)
        sp.add_argument("--max-depth", type=int, default=None)
        sp.add_argument("--pruning-confidence", type=float, default=0.25)

    sp = sub.add_parser("train", help="fit one model and save it as JSON")
    sp.add_argument("--dataset", required=True)
    common(sp, edges=False, t0=False, seed=True)
    learner_opts(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_train, variant=None)

    sp = sub.add_parser("evaluate", help="k-fold cross-validated report CSV")
    sp.add_argument("--dataset", required=True)
    common(sp, edges=False, t0=False, seed=True)
    learner_opts(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("pipeline", help="snapshot -> features -> dataset -> balance -> CV -> report")
    common(sp, t_end=True, seed=True)
    dataset_opts(sp)
    learner_opts(sp)
    sp.add_argument("--bins", type=int, default=10)
    sp.add_argument("--tol", type=float, default=DEFAULT_TOL)
    sp.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_pipeline)

    sp = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    sp.add_argument("manifest")
    sp.add_argument("--out", required=True)
    sp.add_argument("--threads", type=int, default=1)
    sp.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "train" and not args.variant:
            args.variant = ["tree"]
        if getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be >= 1")
    except UsageError as exc:
        print(f"linkrank: usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        rc = args.func(args)
        return int(rc or 0)
    except UsageError as exc:
        print(f"linkrank: usage error: {exc}", file=sys.stderr)
        return 1
    except InvariantViolation as exc:
        print(f"linkrank: invariant violation: {exc}", file=sys.stderr)
        return 3
    except (LinkRankError, ValueError, OSError) as exc:
        print(f"linkrank: error: {exc}", file=sys.stderr)
        return 2
    except AssertionError as exc:
        print(f"linkrank: invariant violation: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
