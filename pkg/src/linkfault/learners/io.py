"""JSON model documents.

A document wraps one trained model with what is needed to use it safely:

    {"format": "linkfault-model", "version": 1, "kind": "rf" | "mlp" | "svm",
     "topology_fingerprint": ..., "label_space": [...] | null,
     "preprocessor": {...} | null, "preprocessor_fingerprint": ... | null,
     "model": {...}}

Floats are written with ``repr`` precision, so a loaded model reproduces the
original predictions bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..dataset import LabelSpace
from ..errors import CorruptModel, FingerprintMismatch, VersionMismatch
from ..preprocess import Preprocessor
from .forest import DecisionTree, RandomForestModel
from .mlp import MlpModel
from .svm import SvmModel

FORMAT = "linkfault-model"
VERSION = 1


@dataclass
class ModelArtifact:
    """A trained model plus its label space, preprocessing and provenance."""

    model: object
    label_space: LabelSpace | None = None
    topology_fingerprint: str = ""
    preprocessor: Preprocessor | None = None

    @property
    def kind(self):
        return self.model.kind

    def features(self, rows):
        rows = np.asarray(rows, dtype=float)
        return self.preprocessor.transform(rows) if self.preprocessor is not None else rows

    def predict(self, rows):
        return self.model.predict(self.features(rows))


def _arr(a):
    return None if a is None else np.asarray(a).tolist()


def _model_dict(model):
    if isinstance(model, RandomForestModel):
        return {
            "classes": _arr(model.classes),
            "n_features": model.n_features,
            "features_per_split": model.features_per_split,
            "seed": model.seed,
            "trees": [
                {"feature": _arr(t.feature), "threshold": _arr(t.threshold), "left": _arr(t.left),
                 "right": _arr(t.right), "counts": _arr(t.counts)}
                for t in model.trees
            ],
        }
    if isinstance(model, MlpModel):
        return {
            "task": model.task,
            "layer_sizes": list(model.layer_sizes),
            "weights": [_arr(W) for W in model.weights],
            "biases": [_arr(b) for b in model.biases],
            "x_mean": _arr(model.x_mean),
            "x_scale": _arr(model.x_scale),
            "classes": _arr(model.classes),
            "y_mean": _arr(model.y_mean),
            "y_scale": _arr(model.y_scale),
            "train_r2": model.train_r2,
            "val_r2": model.val_r2,
        }
    if isinstance(model, SvmModel):
        return {"weights": _arr(model.weights), "bias": _arr(model.bias), "classes": _arr(model.classes)}
    raise TypeError(f"cannot serialise {type(model).__name__}")


def _model_from(kind, d):
    if kind == "rf":
        trees = [
            DecisionTree(np.array(t["feature"], dtype=np.intp), np.array(t["threshold"], dtype=float),
                         np.array(t["left"], dtype=np.intp), np.array(t["right"], dtype=np.intp),
                         np.array(t["counts"], dtype=np.int64).reshape(len(t["feature"]), -1))
            for t in d["trees"]
        ]
        return RandomForestModel(trees, np.array(d["classes"]), d["n_features"], d["features_per_split"], d["seed"])
    if kind == "mlp":
        opt = lambda key: None if d.get(key) is None else np.array(d[key])  # noqa: E731
        return MlpModel(
            d["layer_sizes"],
            [np.array(W, dtype=float).reshape(a, b) for W, a, b in
             zip(d["weights"], d["layer_sizes"][:-1], d["layer_sizes"][1:])],
            [np.array(b, dtype=float) for b in d["biases"]],
            d["task"],
            np.array(d["x_mean"], dtype=float),
            np.array(d["x_scale"], dtype=float),
            classes=opt("classes"),
            y_mean=opt("y_mean"),
            y_scale=opt("y_scale"),
            train_r2=d.get("train_r2"),
            val_r2=d.get("val_r2"),
        )
    if kind == "svm":
        W = np.array(d["weights"], dtype=float)
        return SvmModel(W.reshape(len(d["weights"]), -1), np.array(d["bias"], dtype=float), np.array(d["classes"]))
    raise CorruptModel(f"unknown model kind {kind!r}")


def serialize_model(model, label_space=None, topology_fingerprint="", preprocessor=None):
    if isinstance(model, ModelArtifact):
        label_space = model.label_space
        topology_fingerprint = model.topology_fingerprint
        preprocessor = model.preprocessor
        model = model.model
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "kind": model.kind,
        "topology_fingerprint": topology_fingerprint,
        "label_space": label_space.to_list() if label_space is not None else None,
        "preprocessor": preprocessor.to_dict() if preprocessor is not None else None,
        "preprocessor_fingerprint": preprocessor.digest() if preprocessor is not None else None,
        "model": _model_dict(model),
    }
    return json.dumps(doc, separators=(",", ":")) + "\n"


def deserialize_model(text, expected_fingerprint=None):
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptModel(f"model document is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise CorruptModel("not a linkfault model document")
    if doc.get("version") != VERSION:
        raise VersionMismatch(f"model version {doc.get('version')} (supported: {VERSION})")
    fp = doc.get("topology_fingerprint", "")
    if expected_fingerprint is not None and fp != expected_fingerprint:
        raise FingerprintMismatch(f"model was trained for topology {fp}, not {expected_fingerprint}")
    try:
        model = _model_from(doc["kind"], doc["model"])
        labels = LabelSpace.from_list(doc["label_space"]) if doc.get("label_space") is not None else None
        pre = Preprocessor.from_dict(doc["preprocessor"]) if doc.get("preprocessor") is not None else None
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModel(f"model document is incomplete: {exc!r}") from None
    if pre is not None and doc.get("preprocessor_fingerprint") != pre.digest():
        raise CorruptModel("preprocessor does not match its recorded fingerprint")
    return ModelArtifact(model, labels, fp, pre)


def save_model(path, model, **kwargs):
    Path(path).write_text(serialize_model(model, **kwargs), encoding="utf-8")


def load_model(path, expected_fingerprint=None):
    return deserialize_model(Path(path).read_text(encoding="utf-8"), expected_fingerprint)


def write_training_curve(path, history):
    lines = ["epoch,loss,metric"] + [f"{h['epoch']},{h['loss']!r},{h['metric']!r}" for h in history]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
