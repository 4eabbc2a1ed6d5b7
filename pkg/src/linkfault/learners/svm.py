"""One-vs-rest linear SVM trained by sub-gradient descent on the hinge loss.

For each class ``c`` the objective is

    l2/2 * ||w_c||^2 + mean_i max(0, 1 - t_ic (w_c . x_i + b_c))

with ``t_ic = +1`` when row ``i`` belongs to ``c`` and ``-1`` otherwise. All
classes are optimised together as one weight matrix. Training runs on
standardised inputs; the scaling is folded back into the stored hyperplanes,
so the model is literally ``argmax_c (w_c . x + b_c)`` on raw features.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import _rng
from ..errors import DimensionMismatch, Diverged, SingleClass
from .config import TrainConfig


@dataclass
class SvmModel:
    weights: np.ndarray  # (features, classes)
    bias: np.ndarray  # (classes,)
    classes: np.ndarray
    history: list = field(default_factory=list)

    kind = "svm"

    @property
    def n_features(self):
        return self.weights.shape[0]

    def decision_function(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise DimensionMismatch(f"expected {self.n_features} features, got {X.shape[1]}")
        return X @ self.weights + self.bias

    def predict(self, X):
        return self.classes[np.argmax(self.decision_function(X), axis=1)]


def hinge_objective(W, b, X, T, l2):
    margins = T * (X @ W + b)
    return 0.5 * l2 * np.sum(W * W) + np.mean(np.sum(np.maximum(0.0, 1.0 - margins), axis=1))


def train_svm(X, y, config=TrainConfig()):
    X = np.asarray(X, dtype=float)
    classes, yi = np.unique(np.asarray(y), return_inverse=True)
    if len(classes) < 2:
        raise SingleClass("SVM needs at least two classes")
    n, F = X.shape
    K = len(classes)
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    Xs = (X - mean) / scale
    T = -np.ones((n, K))
    T[np.arange(n), yi] = 1.0

    W = np.zeros((F, K))
    b = np.zeros(K)
    vW = np.zeros_like(W)
    vb = np.zeros_like(b)
    history = []
    for epoch in range(config.epochs):
        order = _rng.derive_rng(config.seed, _rng.TRAINING, epoch).permutation(n)
        lr = config.learning_rate / (1.0 + epoch / 10.0)
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            xb, tb = Xs[batch], T[batch]
            active = (tb * (xb @ W + b)) < 1.0
            coef = np.where(active, -tb, 0.0) / len(batch)
            gW = xb.T @ coef + config.l2 * W
            gb = coef.sum(axis=0)
            vW = config.momentum * vW - lr * gW
            vb = config.momentum * vb - lr * gb
            W += vW
            b += vb
        obj = hinge_objective(W, b, Xs, T, config.l2)
        if not np.isfinite(obj):
            raise Diverged(f"hinge objective became {obj} in epoch {epoch}")
        acc = float(np.mean(np.argmax(Xs @ W + b, axis=1) == yi))
        history.append({"epoch": epoch, "loss": float(obj), "metric": acc})
    W_raw = W / scale[:, None]
    b_raw = b - mean @ W_raw
    return SvmModel(W_raw, b_raw, classes, history)
