import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linkfault.errors import ConstantTarget, DimensionMismatch, NoFaultyPoints
from linkfault.metrics import (
    ConfusionMatrix,
    evaluate,
    f1_score,
    fault_detection_accuracy,
    precision_recall_f1,
    prf_from_counts,
    r2_score,
    timing_summary,
)

from oracles import prf_oracle, r2_oracle


def test_counts_example():
    p, r, f, pu, ru = prf_from_counts([9], [1], [3])
    assert p[0] == pytest.approx(0.9) and r[0] == pytest.approx(0.75)
    assert f[0] == pytest.approx(2 * 0.9 * 0.75 / 1.65) and round(f[0], 4) == 0.8182
    assert not pu[0] and not ru[0]


@given(st.floats(0.01, 1.0))
def test_equal_precision_and_recall(x):
    assert f1_score(x, x) == pytest.approx(x, rel=1e-12)


def test_undefined_scores_are_zero_and_flagged():
    cm = ConfusionMatrix.from_predictions([0, 0, 1], [0, 0, 0], labels=[0, 1, 2])
    s = precision_recall_f1(cm)
    assert s.precision[1] == 0 and s.precision_undefined[1] and s.precision_undefined[2]
    assert s.recall_undefined[2] and not s.recall_undefined[1]
    assert 0 <= s.macro_f1 <= 1


def test_confusion_matrix_layout():
    cm = ConfusionMatrix.from_predictions(["a", "b", "b"], ["a", "a", "b"])
    assert cm.labels == ["a", "b"] and cm.counts.tolist() == [[1, 0], [1, 1]]
    assert cm.tp.tolist() == [1, 1] and cm.fp.tolist() == [1, 0] and cm.fn.tolist() == [0, 1]
    with pytest.raises(DimensionMismatch):
        ConfusionMatrix.from_predictions([1], [1, 2])


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32), k=st.integers(2, 8), n=st.integers(1, 200))
def test_macro_scores_match_counting_oracle(seed, k, n):
    rng = np.random.default_rng(seed)
    t, p = rng.integers(0, k, n).tolist(), rng.integers(0, k, n).tolist()
    s = precision_recall_f1(ConfusionMatrix.from_predictions(t, p, labels=list(range(k))))
    per, macro = prf_oracle(t, p, range(k))
    for c in range(k):
        assert abs(s.precision[c] - per[c][0]) <= 1e-12
        assert abs(s.recall[c] - per[c][1]) <= 1e-12
        assert abs(s.f1[c] - per[c][2]) <= 1e-12
    assert abs(s.macro_f1 - macro[2]) <= 1e-12
    # F1 lies between P and R wherever both are defined
    ok = ~(s.precision_undefined | s.recall_undefined)
    assert np.all(s.f1[ok] >= np.minimum(s.precision, s.recall)[ok] - 1e-15)
    assert np.all(s.f1[ok] <= np.maximum(s.precision, s.recall)[ok] + 1e-15)


def test_micro_average_equals_accuracy_for_single_label():
    t, p = [0, 1, 2, 2, 1], [0, 2, 2, 2, 1]
    s = precision_recall_f1(ConfusionMatrix.from_predictions(t, p), average="micro")
    assert s.macro_f1 == pytest.approx(s.accuracy) == pytest.approx(0.8)
    with pytest.raises(ValueError):
        precision_recall_f1(ConfusionMatrix.from_predictions(t, p), average="weighted")


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32))
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    t, p = rng.integers(0, 4, 60), rng.integers(0, 4, 60)
    perm = rng.permutation(60)
    a = evaluate("a", t.tolist(), p.tolist(), labels=[0, 1, 2, 3]).to_dict()
    b = evaluate("b", t[perm].tolist(), p[perm].tolist(), labels=[0, 1, 2, 3]).to_dict()
    assert a["f1"] == b["f1"] and a["per_class"] == b["per_class"]
    pred, act = rng.standard_normal(30), rng.standard_normal(30)
    idx = rng.permutation(30)
    assert r2_score(pred, act) == pytest.approx(r2_score(pred[idx], act[idx]), abs=1e-14)


def test_merge_equals_whole(rng):
    t, p = rng.integers(0, 5, 100).tolist(), rng.integers(0, 5, 100).tolist()
    whole = ConfusionMatrix.from_predictions(t, p)
    parts = ConfusionMatrix.from_predictions(t[:40], p[:40]) + ConfusionMatrix.from_predictions(t[40:], p[40:])
    assert parts.labels == whole.labels and np.array_equal(parts.counts, whole.counts)


def test_r2_examples(rng):
    a = rng.standard_normal(50)
    assert r2_score(a, a) == 1.0
    assert r2_score(np.full(50, a.mean()), a) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ConstantTarget):
        r2_score(a, np.ones(50))
    with pytest.raises(DimensionMismatch):
        r2_score(a, a[:10])


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32), n=st.integers(2, 100), cols=st.integers(1, 4))
def test_r2_matches_two_pass_oracle(seed, n, cols):
    rng = np.random.default_rng(seed)
    act = rng.standard_normal((n, cols)) * 10 + 3
    pred = act + rng.standard_normal((n, cols))
    if cols == 1:
        act, pred = act[:, 0], pred[:, 0]
    assert abs(r2_score(pred, act) - r2_oracle(pred, act)) <= 1e-12


def test_detection_accuracy():
    assert fault_detection_accuracy([True, True, False], [True, True, False]) == 1.0
    assert fault_detection_accuracy([True, False, True, False], [True] * 4) == 0.5
    with pytest.raises(NoFaultyPoints):
        fault_detection_accuracy([False], [False])


def test_detection_accuracy_bounds_every_class_recall(rng):
    # classes 1..4 are faults; detection = predicted any fault class
    t = rng.integers(0, 5, 300)
    p = np.where(rng.random(300) < 0.8, t, rng.integers(0, 5, 300))
    det = fault_detection_accuracy(p != 0, t != 0)
    s = precision_recall_f1(ConfusionMatrix.from_predictions(t.tolist(), p.tolist(), labels=list(range(5))))
    assert all(det >= s.recall[c] for c in range(1, 5))


def test_report_files(tmp_path):
    rep = evaluate("demo", [0, 1, 1], [0, 1, 0], detection_accuracy=0.5)
    rep.write(tmp_path / "demo")
    assert (tmp_path / "demo.json").exists()
    rows = (tmp_path / "demo.csv").read_text().splitlines()
    assert rows[0] == "metric,class,value" and "fault_detection_accuracy,all,0.5" in rows


def test_perfect_classifier_report_is_all_ones():
    d = evaluate("perfect", [0, 1, 2, 2], [0, 1, 2, 2]).to_dict()
    assert d["precision"] == d["recall"] == d["f1"] == d["accuracy"] == 1.0


def test_timing_summary():
    s = timing_summary([1.0, 2.0, 3.0, 4.0])
    assert s["count"] == 4 and s["mean_us"] == 2.5 and s["p50_us"] == 2.5 and s["max_us"] == 4.0
    assert timing_summary([]) == {"count": 0}
