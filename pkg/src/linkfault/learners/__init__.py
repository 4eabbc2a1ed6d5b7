"""From-scratch classifiers (RF, MLP, linear SVM) and the MLP delay regressor."""

import numpy as np

from ..errors import DimensionMismatch
from .config import REGRESSOR_CONFIG, REGRESSOR_LAYERS, TrainConfig
from .forest import DecisionTree, RandomForestModel, train_rf
from .io import (
    ModelArtifact,
    deserialize_model,
    load_model,
    save_model,
    serialize_model,
    write_training_curve,
)
from .mlp import MlpModel, train_mlp_classifier, train_mlp_regressor
from .svm import SvmModel, train_svm

TRAINERS = {"rf": train_rf, "mlp": train_mlp_classifier, "svm": train_svm}


def train_classifier(algo, X, y, config=TrainConfig()):
    try:
        trainer = TRAINERS[algo]
    except KeyError:
        raise ValueError(f"unknown algorithm {algo!r}; choose from {sorted(TRAINERS)}") from None
    return trainer(X, y, config=config)


def predict(model, rows):
    """Labels (classifiers) or target rows (regressor) for a batch of rows."""
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2:
        raise DimensionMismatch("predict expects a 2-D batch of rows")
    return model.predict(rows)


__all__ = [
    "DecisionTree", "MlpModel", "ModelArtifact", "RandomForestModel", "REGRESSOR_CONFIG", "REGRESSOR_LAYERS", "SvmModel",
    "TrainConfig", "deserialize_model", "load_model", "predict", "save_model", "serialize_model",
    "train_classifier", "train_mlp_classifier", "train_mlp_regressor", "train_rf", "train_svm",
    "write_training_curve",
]
