import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from linkrank.errors import MetricError
from linkrank.metrics import (COLUMNS, REPORT_HEADER, ConfusionCounts, build_report, class_metrics,
                              confusion, prc_area, roc_area)


def test_confusion_examples():
    assert confusion(["real", "false"], ["real", "false"]) == ConfusionCounts(1, 0, 1, 0)
    assert confusion(["real"] * 4, ["real", "real", "false", "false"]) == ConfusionCounts(2, 2, 0, 0)
    assert confusion(["real", "real", "false"], ["real", "false", "false"]) == ConfusionCounts(1, 1, 1, 0)
    with pytest.raises(ValueError):
        confusion(["real"], ["real", "false"])


def test_class_metrics_examples():
    m = class_metrics(ConfusionCounts(5, 0, 0, 0))
    assert m["precision"] == m["recall"] == m["f_measure"] == 1.0
    assert m["mcc"] == 0.0
    assert class_metrics(ConfusionCounts(9, 1, 9, 1))["mcc"] == pytest.approx(0.8, abs=1e-12)
    m = class_metrics(ConfusionCounts(1, 1, 1, 0))
    assert m["precision"] == 0.5 and m["recall"] == 1.0
    assert abs(m["f_measure"] - 2 / 3) < 1e-12
    assert class_metrics(ConfusionCounts(0, 0, 0, 0))["f_measure"] == 0.0


def test_roc_examples():
    assert roc_area([0.9, 0.8, 0.1], [1, 1, 0]) == 1.0
    assert roc_area([0.5] * 6, [1, 0, 1, 0, 1, 0]) == 0.5
    assert abs(roc_area([0.9, 0.8, 0.4, 0.3], [1, 0, 1, 0]) - 0.75) < 1e-12
    with pytest.raises(MetricError):
        roc_area([0.1, 0.2], [1, 1])


def test_prc_examples():
    assert prc_area([0.9, 0.8, 0.1], [1, 1, 0]) == 1.0
    assert prc_area([0.9, 0.8, 0.7, 0.1], [0, 0, 0, 1]) == 0.25
    assert abs(prc_area([0.9, 0.8, 0.4, 0.3], [1, 0, 1, 0]) - 5 / 6) < 1e-12
    # a tie group is scored at its end
    assert abs(prc_area([0.5, 0.5, 0.1], [1, 0, 1]) - (0.5 + 2 / 3) / 2) < 1e-12
    with pytest.raises(MetricError):
        prc_area([0.1], [0])


def test_report_perfect():
    r = build_report([0.9, 0.8, 0.2, 0.1], [True, True, False, False])
    for name in ("real", "false", "weighted"):
        for c in COLUMNS:
            assert r.row(name)[c] == (0.0 if c == "fp_rate" else 1.0)


def test_report_hand_built_six():
    scores = [0.9, 0.7, 0.6, 0.4, 0.3, 0.2]
    labels = ["real", "false", "real", "real", "false", "false"]
    r = build_report(scores, labels)
    real, false, w = r.row("real"), r.row("false"), r.weighted
    # predicted real: 0.9, 0.7, 0.6 -> tp=2 fp=1 tn=2 fn=1
    assert real["tp_rate"] == pytest.approx(2 / 3, abs=1e-12)
    assert real["fp_rate"] == pytest.approx(1 / 3, abs=1e-12)
    assert real["precision"] == pytest.approx(2 / 3, abs=1e-12)
    assert real["f_measure"] == pytest.approx(2 / 3, abs=1e-12)
    assert real["mcc"] == pytest.approx((4 - 1) / 9, abs=1e-12)
    assert false["mcc"] == pytest.approx(real["mcc"], abs=1e-15)
    # pairs (pos, neg): 0.9 beats 3, 0.6 beats 2, 0.4 beats 2 -> 7/9
    assert real["roc_area"] == pytest.approx(7 / 9, abs=1e-12)
    assert false["roc_area"] == pytest.approx(7 / 9, abs=1e-12)
    # real ranks 1, 3, 4: (1 + 2/3 + 3/4) / 3
    assert real["prc_area"] == pytest.approx((1 + 2 / 3 + 3 / 4) / 3, abs=1e-12)
    # false by 1-score: order 0.8(f) 0.7(f) 0.6(r) 0.4(r) 0.3(f) 0.1(r) -> ranks 1,2,5
    assert false["prc_area"] == pytest.approx((1 + 1 + 3 / 5) / 3, abs=1e-12)
    for c in COLUMNS:
        assert w[c] == pytest.approx((real[c] + false[c]) / 2, abs=1e-15)


def test_report_csv_layout():
    r = build_report([0.9, 0.2, 0.6, 0.1], [1, 0, 1, 0])
    lines = r.to_csv().splitlines()
    assert lines[0] == REPORT_HEADER
    assert [l.split(",")[0] for l in lines[1:]] == ["real", "false", "Weighted Avg."]
    buf = io.StringIO()
    r.to_csv(buf, prefix="tree")
    assert buf.getvalue().splitlines()[1].startswith("tree,real,")
    with pytest.raises(MetricError):
        build_report([0.1, 0.2], [1, 1])


def test_roc_matches_pairwise_random():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(2, 40))
        s = np.round(rng.random(n), 1)
        y = rng.random(n) < 0.5
        y[0], y[1] = True, False
        assert abs(roc_area(s, y) - oracles.roc_pairwise(s.tolist(), y.tolist())) < 1e-12


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 1000), min_size=2, max_size=30, unique=True),
       st.integers(0, 2**32 - 1))
def test_roc_symmetry_and_monotone_invariance(scores, seed):
    rng = np.random.default_rng(seed)
    y = rng.random(len(scores)) < 0.5
    y[0], y[1] = True, False
    s = np.array(scores) / 1000.0
    assert roc_area(s, y) + roc_area(s, ~y) == pytest.approx(1.0, abs=1e-12)
    assert roc_area(np.exp(3 * s) - 7, y) == roc_area(s, y)


@settings(max_examples=100, deadline=None)
@given(*(st.integers(0, 50) for _ in range(4)))
def test_mcc_symmetric_and_bounded(tp, fp, tn, fn):
    a = class_metrics(ConfusionCounts(tp, fp, tn, fn))
    b = class_metrics(ConfusionCounts(tn, fn, tp, fp))
    assert a["mcc"] == pytest.approx(b["mcc"], abs=1e-12)
    for k, v in a.items():
        assert math.isfinite(v)
        if k != "mcc":
            assert 0.0 <= v <= 1.0
    assert -1.0 <= a["mcc"] <= 1.0
