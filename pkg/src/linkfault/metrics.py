"""Confusion matrices, precision/recall/F1, R^2 and timing summaries."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConstantTarget, DimensionMismatch, NoFaultyPoints


@dataclass
class ConfusionMatrix:
    """Counts with rows = true class and columns = predicted class.

    ``labels`` may be any hashable values; they fix the row/column order.
    """

    labels: list
    counts: np.ndarray

    @classmethod
    def from_predictions(cls, y_true, y_pred, labels=None):
        y_true, y_pred = list(y_true), list(y_pred)
        if len(y_true) != len(y_pred):
            raise DimensionMismatch("y_true and y_pred differ in length")
        if labels is None:
            labels = sorted(set(y_true) | set(y_pred), key=_sort_key)
        index = {l: i for i, l in enumerate(labels)}
        counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
        for t, p in zip(y_true, y_pred):
            counts[index[t], index[p]] += 1
        return cls(list(labels), counts)

    @property
    def total(self):
        return int(self.counts.sum())

    @property
    def tp(self):
        return np.diag(self.counts).copy()

    @property
    def fp(self):
        return self.counts.sum(axis=0) - self.tp

    @property
    def fn(self):
        return self.counts.sum(axis=1) - self.tp

    def merge(self, other):
        """Combine partial matrices (e.g. from parallel evaluation)."""
        labels = sorted(set(self.labels) | set(other.labels), key=_sort_key)
        out = ConfusionMatrix(labels, np.zeros((len(labels), len(labels)), dtype=np.int64))
        for cm in (self, other):
            idx = [labels.index(l) for l in cm.labels]
            out.counts[np.ix_(idx, idx)] += cm.counts
        return out

    __add__ = merge


def _sort_key(x):
    return (str(type(x)), x) if not isinstance(x, (int, np.integer)) else ("", int(x))


@dataclass
class Scores:
    """Per-class and averaged precision/recall/F1.

    A class nobody predicted has undefined precision, and a class that never
    occurs has undefined recall; both are reported as 0 and flagged.
    """

    labels: list
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    precision_undefined: np.ndarray
    recall_undefined: np.ndarray
    support: np.ndarray
    average: str
    macro_precision: float
    macro_recall: float
    macro_f1: float
    accuracy: float


def prf_from_counts(tp, fp, fn):
    tp, fp, fn = (np.asarray(a, dtype=float) for a in (tp, fp, fn))
    p_den, r_den = tp + fp, tp + fn
    precision = np.divide(tp, p_den, out=np.zeros_like(tp), where=p_den > 0)
    recall = np.divide(tp, r_den, out=np.zeros_like(tp), where=r_den > 0)
    s = precision + recall
    f1 = np.divide(2 * precision * recall, s, out=np.zeros_like(tp), where=s > 0)
    return precision, recall, f1, p_den == 0, r_den == 0


def precision_recall_f1(cm, average="macro"):
    """Scores from a confusion matrix.

    ``average="macro"`` gives the unweighted mean over classes of P, R and
    F1; ``"micro"`` pools TP/FP/FN over classes first.
    """
    tp, fp, fn = cm.tp, cm.fp, cm.fn
    p, r, f1, pu, ru = prf_from_counts(tp, fp, fn)
    if average == "macro":
        agg = (float(p.mean()), float(r.mean()), float(f1.mean())) if len(p) else (0.0, 0.0, 0.0)
    elif average == "micro":
        mp, mr, mf, _, _ = prf_from_counts([tp.sum()], [fp.sum()], [fn.sum()])
        agg = (float(mp[0]), float(mr[0]), float(mf[0]))
    else:
        raise ValueError(f"average must be 'macro' or 'micro', not {average!r}")
    accuracy = float(tp.sum() / cm.total) if cm.total else 0.0
    return Scores(list(cm.labels), p, r, f1, pu, ru, cm.counts.sum(axis=1), average, *agg, accuracy)


def f1_score(precision, recall):
    return 0.0 if precision + recall == 0 else 2.0 * precision * recall / (precision + recall)


def r2_score(predicted, actual):
    """1 - SS_res / SS_tot.

    For 2-D targets each column is centred on its own mean and the sums run
    over all entries (variance-weighted R^2).
    """
    predicted = np.asarray(predicted, dtype=float)
    actual = np.asarray(actual, dtype=float)
    if predicted.shape != actual.shape:
        raise DimensionMismatch(f"shapes differ: {predicted.shape} vs {actual.shape}")
    if actual.shape[0] < 2:
        raise ValueError("R^2 needs at least two samples")
    ss_tot = np.sum((actual - actual.mean(axis=0)) ** 2)
    if ss_tot == 0:
        raise ConstantTarget("actual values are constant")
    ss_res = np.sum((actual - predicted) ** 2)
    return float(1.0 - ss_res / ss_tot)


def fault_detection_accuracy(detected, is_fault):
    """Share of truly faulty points for which any fault class was reported.

    ``detected`` holds booleans or Diagnosis objects (``fault_detected``);
    ``is_fault`` holds the ground-truth booleans.
    """
    det = np.array([getattr(d, "fault_detected", d) for d in detected], dtype=bool)
    truth = np.asarray(is_fault, dtype=bool)
    if det.shape != truth.shape:
        raise DimensionMismatch("detected and is_fault differ in length")
    if not truth.any():
        raise NoFaultyPoints("no faulty points to evaluate")
    return float(det[truth].mean())


def timing_summary(times_us):
    t = np.asarray(times_us, dtype=float)
    if t.size == 0:
        return {"count": 0}
    return {
        "count": int(t.size),
        "mean_us": float(t.mean()),
        "p50_us": float(np.percentile(t, 50)),
        "p90_us": float(np.percentile(t, 90)),
        "p99_us": float(np.percentile(t, 99)),
        "max_us": float(t.max()),
    }


@dataclass
class EvaluationReport:
    name: str
    scores: Scores
    detection_accuracy: float | None = None
    r2: float | None = None
    timing: dict = field(default_factory=dict)

    def to_dict(self):
        s = self.scores
        return {
            "name": self.name,
            "average": s.average,
            "precision": s.macro_precision,
            "recall": s.macro_recall,
            "f1": s.macro_f1,
            "accuracy": s.accuracy,
            "fault_detection_accuracy": self.detection_accuracy,
            "r2": self.r2,
            "timing": self.timing,
            "per_class": [
                {"class": str(l), "precision": float(p), "recall": float(r), "f1": float(f),
                 "support": int(n), "precision_undefined": bool(pu), "recall_undefined": bool(ru)}
                for l, p, r, f, n, pu, ru in zip(s.labels, s.precision, s.recall, s.f1, s.support,
                                                 s.precision_undefined, s.recall_undefined)
            ],
        }

    def rows(self):
        """Flat (metric, class, value) triples; class "all" for aggregates."""
        d = self.to_dict()
        out = [(m, "all", d[m]) for m in ("precision", "recall", "f1", "accuracy",
                                           "fault_detection_accuracy", "r2") if d[m] is not None]
        for c in d["per_class"]:
            out += [(m, c["class"], c[m]) for m in ("precision", "recall", "f1")]
        return out

    def write(self, stem):
        stem = Path(stem)
        stem.with_suffix(".json").write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", "class", "value"])
        w.writerows(self.rows())
        stem.with_suffix(".csv").write_text(buf.getvalue(), encoding="utf-8")


def evaluate(name, y_true, y_pred, labels=None, average="macro", **extra):
    cm = ConfusionMatrix.from_predictions(y_true, y_pred, labels)
    return EvaluationReport(name, precision_recall_f1(cm, average), **extra)
