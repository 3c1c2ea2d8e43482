"""Binary classification metrics laid out like a per-class evaluation table.

Degenerate ratios (0/0) evaluate to 0.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import MetricError

COLUMNS = ("tp_rate", "fp_rate", "precision", "recall", "f_measure", "mcc", "roc_area", "prc_area")
REPORT_HEADER = "class," + ",".join(COLUMNS)


class ConfusionCounts(NamedTuple):
    tp: int
    fp: int
    tn: int
    fn: int


def _div(a, b):
    return a / b if b else 0.0


def confusion(predictions, labels, positive_class="real") -> ConfusionCounts:
    predictions = list(predictions)
    labels = list(labels)
    if len(predictions) != len(labels):
        raise ValueError(f"length mismatch: {len(predictions)} predictions, {len(labels)} labels")
    if not labels:
        raise ValueError("need at least one prediction")
    p = np.array([x == positive_class for x in predictions])
    t = np.array([x == positive_class for x in labels])
    return ConfusionCounts(int((p & t).sum()), int((p & ~t).sum()),
                           int((~p & ~t).sum()), int((~p & t).sum()))


def class_metrics(c: ConfusionCounts) -> dict:
    tp, fp, tn, fn = c
    recall = _div(tp, tp + fn)
    precision = _div(tp, tp + fp)
    denom = math.sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
    return {
        "tp_rate": recall,
        "fp_rate": _div(fp, fp + tn),
        "precision": precision,
        "recall": recall,
        "f_measure": _div(2 * precision * recall, precision + recall),
        "mcc": _div(tp * tn - fp * fn, denom),
    }


def _check_binary(scores, labels):
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=bool)
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    return s, y


def roc_area(scores, labels) -> float:
    """P(score_pos > score_neg) + 0.5 * P(tie), via mid-ranks."""
    s, y = _check_binary(scores, labels)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("ROC area needs both classes")
    order = np.argsort(s, kind="mergesort")
    ss = s[order]
    ranks = np.empty(len(s))
    # mid-rank for each run of equal scores
    bounds = np.flatnonzero(np.diff(ss)) + 1
    starts = np.concatenate([[0], bounds])
    ends = np.concatenate([bounds, [len(ss)]])
    mid = (starts + ends + 1) / 2.0
    ranks[order] = np.repeat(mid, ends - starts)
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def prc_area(scores, labels) -> float:
    """Average precision; tied scores form one group evaluated at its end."""
    s, y = _check_binary(scores, labels)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise MetricError("PRC area needs at least one positive")
    order = np.argsort(-s, kind="mergesort")
    ss, yy = s[order], y[order]
    bounds = np.flatnonzero(np.diff(ss)) + 1
    ends = np.concatenate([bounds, [len(ss)]])
    starts = np.concatenate([[0], bounds])
    cum_tp = np.cumsum(yy)
    total = 0.0
    for st, en in zip(starts.tolist(), ends.tolist()):
        pos_in_group = int(cum_tp[en - 1] - (cum_tp[st - 1] if st else 0))
        if pos_in_group:
            total += pos_in_group * (cum_tp[en - 1] / en)
    return float(total / n_pos)


@dataclass
class MetricsReport:
    rows: dict  # class name -> {column: value}
    supports: dict

    def row(self, name: str) -> dict:
        return self.rows[name]

    @property
    def weighted(self) -> dict:
        return self.rows["weighted"]

    def to_csv(self, sink=None, prefix: str | None = None) -> str:
        head = ("solver," if prefix is not None else "") + REPORT_HEADER
        lines = [head]
        for name in ("real", "false", "weighted"):
            cells = ",".join(repr(float(self.rows[name][c])) for c in COLUMNS)
            label = "Weighted Avg." if name == "weighted" else name
            lines.append((f"{prefix}," if prefix is not None else "") + f"{label},{cells}")
        text = "\n".join(lines) + "\n"
        if sink is not None:
            if isinstance(sink, (str, os.PathLike)):
                with open(sink, "w", encoding="utf-8", newline="\n") as fh:
                    fh.write(text)
            else:
                sink.write(text)
        return text


def build_report(scores, labels) -> MetricsReport:
    """Per-class rows for ``real`` (score) and ``false`` (1 - score), plus a
    support-weighted average row.

    ``scores`` are probabilities of class real; a prediction is real when
    its score is >= 0.5. ``labels`` are booleans (True = real) or the
    strings ``real``/``false``.
    """
    s = np.asarray(scores, dtype=float)
    y = np.array([l == "real" if isinstance(l, str) else bool(l) for l in labels], dtype=bool)
    if len(s) != len(y):
        raise ValueError("scores and labels differ in length")
    if y.all() or not y.any():
        raise MetricError("report needs both classes present")
    pred = s >= 0.5
    rows = {}
    supports = {"real": int(y.sum()), "false": int((~y).sum())}
    for name, p, t, sc in (("real", pred, y, s), ("false", ~pred, ~y, 1.0 - s)):
        c = ConfusionCounts(int((p & t).sum()), int((p & ~t).sum()),
                            int((~p & ~t).sum()), int((~p & t).sum()))
        row = class_metrics(c)
        row["roc_area"] = roc_area(sc, t)
        row["prc_area"] = prc_area(sc, t)
        rows[name] = row
    total = supports["real"] + supports["false"]
    rows["weighted"] = {
        col: (rows["real"][col] * supports["real"] + rows["false"][col] * supports["false"]) / total
        for col in COLUMNS
    }
    return MetricsReport(rows, supports)
