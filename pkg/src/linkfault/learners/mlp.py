"""Fully connected ReLU networks trained by back-propagation.

The classifier ends in a softmax and minimises mean cross-entropy; the
regressor has a linear head and minimises mean squared error. Both are
trained with mini-batch SGD with momentum and an L2 penalty on weights.
Inputs (and regression targets) are standardised with training statistics
that are stored in the model, so callers pass raw features.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import _rng
from ..errors import ConstantTarget, DimensionMismatch, Diverged, SingleClass
from .config import REGRESSOR_CONFIG, REGRESSOR_LAYERS, TrainConfig


def relu(z):
    return np.maximum(z, 0.0)


def softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def init_params(layer_sizes, rng):
    """He-normal weights, zero biases."""
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        weights.append(rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in))
        biases.append(np.zeros(fan_out))
    return weights, biases


def forward(weights, biases, X):
    """Pre-activation output and the list of layer inputs (for backprop)."""
    acts = [X]
    h = X
    for W, b in zip(weights[:-1], biases[:-1]):
        h = relu(h @ W + b)
        acts.append(h)
    return h @ weights[-1] + biases[-1], acts


def loss_and_grads(weights, biases, X, Y, task, l2=0.0):
    """Loss and its gradients w.r.t. every weight matrix and bias vector.

    ``Y`` holds integer classes for ``task == "classifier"`` and a target
    matrix for ``"regressor"``. The regression loss is the mean over all
    entries of the squared error.
    """
    out, acts = forward(weights, biases, X)
    n = len(X)
    if task == "classifier":
        p = softmax(out)
        loss = -np.mean(np.log(np.maximum(p[np.arange(n), Y], 1e-300)))
        delta = p
        delta[np.arange(n), Y] -= 1.0
        delta /= n
    else:
        diff = out - Y
        loss = np.mean(diff * diff)
        delta = 2.0 * diff / diff.size
    loss += 0.5 * l2 * sum(np.sum(W * W) for W in weights)

    gW = [None] * len(weights)
    gb = [None] * len(biases)
    for i in range(len(weights) - 1, -1, -1):
        gW[i] = acts[i].T @ delta + l2 * weights[i]
        gb[i] = delta.sum(axis=0)
        if i:
            delta = (delta @ weights[i].T) * (acts[i] > 0)
    return loss, gW, gb


@dataclass
class MlpModel:
    layer_sizes: list
    weights: list
    biases: list
    task: str  # "classifier" | "regressor"
    x_mean: np.ndarray
    x_scale: np.ndarray
    classes: np.ndarray | None = None
    y_mean: np.ndarray | None = None
    y_scale: np.ndarray | None = None
    history: list = field(default_factory=list)  # dicts: epoch, loss, metric
    train_r2: float | None = None
    val_r2: float | None = None

    kind = "mlp"

    @property
    def n_features(self):
        return self.layer_sizes[0]

    def _inputs(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise DimensionMismatch(f"expected {self.n_features} features, got {X.shape[1]}")
        return (X - self.x_mean) / self.x_scale

    def decision_function(self, X):
        out, _ = forward(self.weights, self.biases, self._inputs(X))
        return out

    def predict_proba(self, X):
        return softmax(self.decision_function(X))

    def predict(self, X):
        out = self.decision_function(X)
        if self.task == "classifier":
            return self.classes[np.argmax(out, axis=1)]
        return out * self.y_scale + self.y_mean


def _standardizer(A):
    mean = A.mean(axis=0)
    scale = A.std(axis=0)
    return mean, np.where(scale > 0, scale, 1.0)


def _holdout(n, fraction, rng):
    if fraction <= 0 or n < 10:
        return np.arange(n), np.arange(0)
    perm = rng.permutation(n)
    k = max(1, int(round(n * fraction)))
    return np.sort(perm[k:]), np.sort(perm[:k])


def _r2(pred, actual):
    ss_res = np.sum((actual - pred) ** 2)
    ss_tot = np.sum((actual - actual.mean(axis=0)) ** 2)
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else float("nan")


def _fit(Xs, Y, layer_sizes, task, config, metric):
    """SGD loop shared by both heads. Returns (weights, biases, history)."""
    weights, biases = init_params(layer_sizes, _rng.derive_rng(config.seed, _rng.TRAINING, 0))
    tr, va = _holdout(len(Xs), config.validation_fraction if config.patience else 0.0,
                      _rng.derive_rng(config.seed, _rng.SPLIT, 1))
    vW = [np.zeros_like(W) for W in weights]
    vb = [np.zeros_like(b) for b in biases]
    history = []
    best = (np.inf, weights, biases)
    stale = 0
    for epoch in range(config.epochs):
        order = tr[_rng.derive_rng(config.seed, _rng.TRAINING, epoch + 1).permutation(len(tr))]
        total = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            loss, gW, gb = loss_and_grads(weights, biases, Xs[batch], Y[batch], task, config.l2)
            if not np.isfinite(loss):
                raise Diverged(f"loss became {loss} in epoch {epoch}")
            total += loss * len(batch)
            if config.clip_norm:
                norm = np.sqrt(sum(np.sum(g * g) for g in gW + gb))
                if norm > config.clip_norm:
                    gW = [g * (config.clip_norm / norm) for g in gW]
                    gb = [g * (config.clip_norm / norm) for g in gb]
            for i in range(len(weights)):
                vW[i] = config.momentum * vW[i] - config.learning_rate * gW[i]
                vb[i] = config.momentum * vb[i] - config.learning_rate * gb[i]
                weights[i] = weights[i] + vW[i]
                biases[i] = biases[i] + vb[i]
        train_loss = total / len(order)
        if len(va):
            val_loss, _, _ = loss_and_grads(weights, biases, Xs[va], Y[va], task, 0.0)
            score = metric(weights, biases, Xs[va], Y[va])
        else:
            val_loss, score = train_loss, metric(weights, biases, Xs[tr], Y[tr])
        if not np.isfinite(val_loss):
            raise Diverged(f"validation loss became {val_loss} in epoch {epoch}")
        history.append({"epoch": epoch, "loss": float(train_loss), "metric": float(score)})
        if val_loss < best[0]:
            best = (val_loss, [W.copy() for W in weights], [b.copy() for b in biases])
            stale = 0
        else:
            stale += 1
            if config.patience and stale >= config.patience:
                break
    if config.patience:
        weights, biases = best[1], best[2]
    return weights, biases, history, tr, va


def train_mlp_classifier(X, y, layer_sizes=None, config=TrainConfig()):
    """Softmax MLP. ``layer_sizes`` lists hidden widths only (may be empty)."""
    X = np.asarray(X, dtype=float)
    classes, yi = np.unique(np.asarray(y), return_inverse=True)
    if len(classes) < 2:
        raise SingleClass("classifier needs at least two classes")
    hidden = list(config.hidden_layers if layer_sizes is None else layer_sizes)
    sizes = [X.shape[1]] + hidden + [len(classes)]
    x_mean, x_scale = _standardizer(X)
    Xs = (X - x_mean) / x_scale

    def accuracy(W, b, Xv, yv):
        out, _ = forward(W, b, Xv)
        return np.mean(np.argmax(out, axis=1) == yv)

    weights, biases, history, _, _ = _fit(Xs, yi, sizes, "classifier", config, accuracy)
    return MlpModel(sizes, weights, biases, "classifier", x_mean, x_scale, classes=classes, history=history)


def train_mlp_regressor(X, Y, layer_sizes=REGRESSOR_LAYERS, config=REGRESSOR_CONFIG):
    """Linear-head MLP minimising MSE; records train and validation R^2."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    squeeze = Y.ndim == 1
    if squeeze:
        Y = Y[:, None]
    if not np.all(np.isfinite(Y)):
        raise ValueError("targets must be finite")
    if np.all(Y.std(axis=0) == 0):
        raise ConstantTarget("every target column is constant; R^2 is undefined")
    sizes = [X.shape[1]] + list(layer_sizes) + [Y.shape[1]]
    x_mean, x_scale = _standardizer(X)
    y_mean, y_scale = _standardizer(Y)
    Xs = (X - x_mean) / x_scale
    Ys = (Y - y_mean) / y_scale

    def r2(W, b, Xv, Yv):
        out, _ = forward(W, b, Xv)
        return _r2(out * y_scale, Yv * y_scale)

    weights, biases, history, tr, va = _fit(Xs, Ys, sizes, "regressor", config, r2)
    model = MlpModel(sizes, weights, biases, "regressor", x_mean, x_scale,
                     y_mean=y_mean, y_scale=y_scale, history=history)
    model.train_r2 = float(_r2(model.predict(X[tr]), Y[tr]))
    if len(va):
        model.val_r2 = float(_r2(model.predict(X[va]), Y[va]))
    return model
