"""Gaussian naive Bayes, gradient-descent logistic regression and a C4.5
style decision tree, plus information-gain ranking and stratified
k-fold cross-validation."""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from statistics import NormalDist
from typing import NamedTuple

import numpy as np

from .dataset import FEATURE_NAMES, Dataset
from .errors import TrainingError
from .metrics import MetricsReport, build_report

VARIANTS = ("gaussian_nb", "logistic", "tree")
ALIASES = {"nb": "gaussian_nb", "bayes": "gaussian_nb", "log": "logistic", "j48": "tree"}


def canonical_variant(name: str) -> str:
    v = ALIASES.get(name, name)
    if v not in VARIANTS:
        raise ValueError(f"unknown variant {name!r}; expected one of {VARIANTS}")
    return v


@dataclass
class TreeConfig:
    min_leaf: int = 2
    max_depth: int | None = None
    pruning_confidence: float = 0.25
    prune: bool = True


@dataclass
class LogisticConfig:
    learning_rate: float = 0.1
    epochs: int = 200
    l2: float = 1e-4


@dataclass
class NBConfig:
    variance_floor: float = 1e-9


@dataclass
class TrainConfig:
    tree: TreeConfig = field(default_factory=TreeConfig)
    logistic: LogisticConfig = field(default_factory=LogisticConfig)
    nb: NBConfig = field(default_factory=NBConfig)
    rng_seed: int = 0

    def __post_init__(self):
        t, lg = self.tree, self.logistic
        if t.min_leaf < 1 or (t.max_depth is not None and t.max_depth < 0):
            raise ValueError("tree min_leaf must be >= 1 and max_depth >= 0")
        if not 0 < t.pruning_confidence < 1:
            raise ValueError("pruning_confidence must lie in (0, 1)")
        if lg.learning_rate <= 0 or lg.epochs < 0 or lg.l2 < 0:
            raise ValueError("logistic hyperparameters must be non-negative (learning_rate > 0)")
        if self.nb.variance_floor <= 0:
            raise ValueError("variance_floor must be positive")


class Prediction(NamedTuple):
    label: str
    score: float


def _entropy(counts) -> float:
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def equal_frequency_bins(x: np.ndarray, bins: int) -> np.ndarray:
    """Bin index per value; equal values always share the bin of their first
    sorted occurrence."""
    n = len(x)
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    pos_bin = (np.arange(n) * bins) // n
    first = np.concatenate([[True], xs[1:] != xs[:-1]]) if n else np.zeros(0, bool)
    run_id = np.cumsum(first) - 1
    run_bin = pos_bin[first]
    out = np.empty(n, dtype=np.int64)
    out[order] = run_bin[run_id]
    return out


def _info_gain(x, y, bins) -> float:
    b = equal_frequency_bins(np.asarray(x, dtype=float), bins)
    y = np.asarray(y, dtype=bool)
    h = _entropy([(~y).sum(), y.sum()])
    cond = 0.0
    for k in np.unique(b):
        m = b == k
        cond += m.mean() * _entropy([(~y[m]).sum(), y[m].sum()])
    return max(h - cond, 0.0)


def info_gain(ds: Dataset, feature_index: int, bins: int = 10) -> float:
    """Information gain (bits) of one feature after equal-frequency binning."""
    if bins < 2:
        raise ValueError("bins must be >= 2")
    if len(ds) == 0:
        raise ValueError("dataset is empty")
    return _info_gain(ds.X[:, feature_index], ds.y, bins)


def rank_features(ds: Dataset, bins: int = 10) -> list[tuple[str, float]]:
    gains = [(name, info_gain(ds, j, bins)) for j, name in enumerate(FEATURE_NAMES)]
    return sorted(gains, key=lambda g: -g[1])


# --- models -----------------------------------------------------------------

@dataclass
class GaussianNB:
    priors: np.ndarray  # [false, real]
    means: np.ndarray  # (2, d)
    variances: np.ndarray
    variant: str = "gaussian_nb"

    def log_joint(self, X):
        X = np.asarray(X, dtype=float)
        out = np.empty((len(X), 2))
        for c in range(2):
            var = self.variances[c]
            ll = -0.5 * np.log(2 * np.pi * var) - (X - self.means[c]) ** 2 / (2 * var)
            out[:, c] = math.log(self.priors[c]) + ll.sum(axis=1)
        return out

    def predict_proba(self, X) -> np.ndarray:
        """(n, 2) posteriors, columns [false, real]."""
        lj = self.log_joint(X)
        lse = np.logaddexp(lj[:, 0], lj[:, 1])
        return np.exp(lj - lse[:, None])

    def scores(self, X):
        return self.predict_proba(X)[:, 1]

    @property
    def n_features(self):
        return self.means.shape[1]


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    mean: np.ndarray
    scale: np.ndarray
    losses: list = field(default_factory=list)
    lr_halvings: int = 0
    variant: str = "logistic"

    def scores(self, X):
        Z = (np.asarray(X, dtype=float) - self.mean) / self.scale
        return _sigmoid(Z @ self.weights + self.bias)

    @property
    def n_features(self):
        return len(self.weights)


@dataclass
class TreeModel:
    root: dict
    n_features: int
    unpruned_nodes: int = 0
    variant: str = "tree"

    def scores(self, X):
        X = np.asarray(X, dtype=float)
        out = np.empty(len(X))
        stack = [(self.root, np.arange(len(X)))]
        while stack:
            node, idx = stack.pop()
            if "feature" not in node:
                f, r = node["counts"]
                out[idx] = (r + 1) / (f + r + 2)
                continue
            go_left = X[idx, node["feature"]] <= node["threshold"]
            stack.append((node["left"], idx[go_left]))
            stack.append((node["right"], idx[~go_left]))
        return out

    @property
    def n_nodes(self):
        return _count_nodes(self.root)

    @property
    def depth(self):
        return _depth(self.root)


def _count_nodes(node):
    if "feature" not in node:
        return 1
    return 1 + _count_nodes(node["left"]) + _count_nodes(node["right"])


def _depth(node):
    if "feature" not in node:
        return 0
    return 1 + max(_depth(node["left"]), _depth(node["right"]))


def _sigmoid(z):
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))),
                    np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))


def _train_nb(X, y, cfg: NBConfig) -> GaussianNB:
    priors, means, variances = [], [], []
    for c in (False, True):
        Xc = X[y == c]
        priors.append(len(Xc) / len(X))
        means.append(Xc.mean(axis=0))
        variances.append(np.maximum(Xc.var(axis=0), cfg.variance_floor))
    return GaussianNB(np.array(priors), np.array(means), np.array(variances))


def _log_loss(Z, y, w, b, l2):
    z = Z @ w + b
    # log(1 + exp(-z)) for y=1, log(1 + exp(z)) for y=0
    loss = np.logaddexp(0.0, np.where(y, -z, z)).mean()
    return float(loss + 0.5 * l2 * (w @ w))


def _train_logistic(X, y, cfg: LogisticConfig) -> LogisticModel:
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    Z = (X - mean) / scale
    yf = y.astype(float)
    w = np.zeros(X.shape[1])
    b = 0.0
    lr = cfg.learning_rate
    halvings = 0
    loss = _log_loss(Z, y, w, b, cfg.l2)
    losses = [loss]
    for _ in range(cfg.epochs):
        err = _sigmoid(Z @ w + b) - yf
        gw = Z.T @ err / len(y) + cfg.l2 * w
        gb = float(err.mean())
        while True:
            w_new, b_new = w - lr * gw, b - lr * gb
            new_loss = _log_loss(Z, y, w_new, b_new, cfg.l2)
            if new_loss <= loss or halvings >= 60:
                break
            lr /= 2
            halvings += 1
        if new_loss > loss:
            break
        w, b, loss = w_new, b_new, new_loss
        losses.append(loss)
    return LogisticModel(w, b, mean, scale, losses, halvings)


def _best_split(X, y, min_leaf):
    """(gain, feature, threshold) maximizing information gain, or None."""
    n = len(y)
    parent = _entropy([(~y).sum(), y.sum()])
    best = None
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="mergesort")
        xs = X[order, f]
        ys = y[order]
        left_n = np.arange(1, n)
        left_r = np.cumsum(ys)[:-1]
        ok = (xs[1:] != xs[:-1]) & (left_n >= min_leaf) & (n - left_n >= min_leaf)
        if not ok.any():
            continue
        ln, lr_ = left_n[ok], left_r[ok]
        rn, rr = n - ln, y.sum() - lr_
        h = (ln * _h2(lr_ / ln) + rn * _h2(rr / rn)) / n
        gains = parent - h
        j = int(np.argmax(gains))
        g = float(gains[j])
        if best is None or g > best[0]:
            pos = np.flatnonzero(ok)[j]
            lo, hi = xs[pos], xs[pos + 1]
            thr = (lo + hi) / 2.0
            if not lo <= thr < hi:
                thr = lo
            best = (g, f, float(thr))
    return best


def _h2(p):
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(p * np.log2(p) + (1 - p) * np.log2(1 - p))
    return np.nan_to_num(h, nan=0.0)


def _grow(X, y, depth, cfg: TreeConfig):
    counts = [int((~y).sum()), int(y.sum())]
    leaf = {"counts": counts}
    if min(counts) == 0 or len(y) < 2 * cfg.min_leaf:
        return leaf
    if cfg.max_depth is not None and depth >= cfg.max_depth:
        return leaf
    split = _best_split(X, y, cfg.min_leaf)
    if split is None or split[0] <= 1e-12:
        return leaf
    _, f, thr = split
    m = X[:, f] <= thr
    return {
        "feature": f,
        "threshold": thr,
        "counts": None,
        "left": _grow(X[m], y[m], depth + 1, cfg),
        "right": _grow(X[~m], y[~m], depth + 1, cfg),
    }


def _add_errs(n, e, cf):
    """Upper confidence bound on extra errors at a leaf (C4.5 pessimistic estimate)."""
    if e < 1:
        base = n * (1 - cf ** (1 / n))
        if e == 0:
            return base
        return base + e * (_add_errs(n, 1, cf) - base)
    if e + 0.5 >= n:
        return max(n - e, 0.0)
    z = NormalDist().inv_cdf(1 - cf)
    f = (e + 0.5) / n
    r = (f + z * z / (2 * n) + z * math.sqrt(f / n - f * f / n + z * z / (4 * n * n))) / (1 + z * z / n)
    return r * n - e


def _leaf_estimate(counts, cf):
    n = sum(counts)
    e = n - max(counts)
    return e + _add_errs(n, e, cf) if n else 0.0


def _prune(node, cf):
    """Bottom-up subtree replacement. Returns (node, estimated errors, counts)."""
    if "feature" not in node:
        return node, _leaf_estimate(node["counts"], cf), node["counts"]
    left, el, cl = _prune(node["left"], cf)
    right, er, cr = _prune(node["right"], cf)
    counts = [cl[0] + cr[0], cl[1] + cr[1]]
    subtree = el + er
    as_leaf = _leaf_estimate(counts, cf)
    if as_leaf <= subtree + 0.1:
        return {"counts": counts}, as_leaf, counts
    return {**node, "left": left, "right": right, "counts": None}, subtree, counts


def _strip(node):
    if "feature" not in node:
        return {"counts": node["counts"]}
    return {"feature": node["feature"], "threshold": node["threshold"],
            "left": _strip(node["left"]), "right": _strip(node["right"])}


def _train_tree(X, y, cfg: TreeConfig) -> TreeModel:
    root = _grow(X, y, 0, cfg)
    unpruned = _count_nodes(root)
    if cfg.prune:
        root = _prune(root, cfg.pruning_confidence)[0]
    return TreeModel(_strip(root), X.shape[1], unpruned)


def train(ds: Dataset, cfg: TrainConfig | None = None, variant: str = "tree"):
    cfg = cfg or TrainConfig()
    variant = canonical_variant(variant)
    X, y = np.asarray(ds.X, dtype=float), np.asarray(ds.y, dtype=bool)
    return train_arrays(X, y, cfg, variant)


def train_arrays(X, y, cfg: TrainConfig, variant: str):
    n_real = int(y.sum())
    n_false = len(y) - n_real
    need = 1 if variant == "tree" else 2
    if min(n_real, n_false) < need:
        raise TrainingError(f"{variant} needs >= {need} instances per class "
                            f"(got {n_real} real, {n_false} false)")
    if variant == "gaussian_nb":
        return _train_nb(X, y, cfg.nb)
    if variant == "logistic":
        return _train_logistic(X, y, cfg.logistic)
    return _train_tree(X, y, cfg.tree)


def predict(model, features) -> Prediction:
    x = np.asarray(features, dtype=float).reshape(-1)
    if len(x) != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got {len(x)}")
    s = float(model.scores(x[None, :])[0])
    return Prediction("real" if s >= 0.5 else "false", s)


def predict_scores(model, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"expected (n, {model.n_features}) feature matrix")
    return model.scores(X)


# --- persistence --------------------------------------------------------------

def model_to_dict(model) -> dict:
    if isinstance(model, GaussianNB):
        return {"variant": model.variant, "priors": model.priors.tolist(),
                "means": model.means.tolist(), "variances": model.variances.tolist()}
    if isinstance(model, LogisticModel):
        return {"variant": model.variant, "weights": model.weights.tolist(), "bias": model.bias,
                "mean": model.mean.tolist(), "scale": model.scale.tolist(),
                "lr_halvings": model.lr_halvings}
    return {"variant": model.variant, "n_features": model.n_features,
            "unpruned_nodes": model.unpruned_nodes, "root": model.root}


def model_from_dict(d: dict):
    v = d["variant"]
    if v == "gaussian_nb":
        return GaussianNB(np.array(d["priors"]), np.array(d["means"]), np.array(d["variances"]))
    if v == "logistic":
        return LogisticModel(np.array(d["weights"]), float(d["bias"]), np.array(d["mean"]),
                             np.array(d["scale"]), [], int(d.get("lr_halvings", 0)))
    if v == "tree":
        return TreeModel(d["root"], int(d["n_features"]), int(d.get("unpruned_nodes", 0)))
    raise ValueError(f"unknown model variant {v!r}")


def save_model(model, path) -> None:
    # json emits floats with repr(), which round-trips exactly
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, sort_keys=True)
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


# --- cross-validation ---------------------------------------------------------

def stratified_folds(y: np.ndarray, k: int, rng_seed: int) -> np.ndarray:
    """Fold id per instance; each class is shuffled then dealt round-robin."""
    rng = np.random.default_rng(rng_seed)
    folds = np.empty(len(y), dtype=np.int64)
    for c in (True, False):
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(len(idx))]
        folds[idx] = np.arange(len(idx)) % k
    return folds


class CVPredictions(NamedTuple):
    scores: np.ndarray
    labels: np.ndarray
    folds: np.ndarray
    index: np.ndarray


def cross_val_predict(ds: Dataset, cfg: TrainConfig | None = None, variant: str = "tree",
                      k: int = 5, rng_seed: int = 0, threads: int = 1) -> CVPredictions:
    cfg = cfg or TrainConfig()
    variant = canonical_variant(variant)
    X, y = np.asarray(ds.X, dtype=float), np.asarray(ds.y, dtype=bool)
    if k < 2:
        raise ValueError("k must be >= 2")
    if min(int(y.sum()), int((~y).sum())) < k:
        raise ValueError(f"each class needs at least k={k} instances")
    folds = stratified_folds(y, k, rng_seed)

    def run(f):
        test = np.flatnonzero(folds == f)
        train_idx = np.flatnonzero(folds != f)
        model = train_arrays(X[train_idx], y[train_idx], cfg, variant)
        return test, model.scores(X[test])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, range(k)))
    else:
        parts = [run(f) for f in range(k)]
    index = np.concatenate([p[0] for p in parts])
    scores = np.concatenate([p[1] for p in parts])
    return CVPredictions(scores, y[index], folds[index], index)


def cross_validate(ds: Dataset, cfg: TrainConfig | None = None, variant: str = "tree",
                   k: int = 5, rng_seed: int = 0, threads: int = 1) -> MetricsReport:
    """Stratified k-fold CV; held-out predictions are pooled into one report."""
    p = cross_val_predict(ds, cfg, variant, k, rng_seed, threads)
    return build_report(p.scores, p.labels)


def pruning_effect(ds: Dataset, cfg: TrainConfig | None = None, k: int = 5,
                   rng_seed: int = 0) -> dict:
    """Weighted F-measure of the tree with and without pruning, same folds."""
    cfg = cfg or TrainConfig()
    out = {}
    for prune in (True, False):
        c = TrainConfig(TreeConfig(**{**asdict(cfg.tree), "prune": prune}),
                        cfg.logistic, cfg.nb, cfg.rng_seed)
        out["pruned" if prune else "unpruned"] = cross_validate(ds, c, "tree", k, rng_seed).weighted["f_measure"]
    out["delta"] = out["unpruned"] - out["pruned"]
    return out
