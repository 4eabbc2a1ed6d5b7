"""Feature normalisation followed by principal component projection."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, InvalidParams


@dataclass(frozen=True)
class Preprocessor:
    center: np.ndarray
    scale: np.ndarray
    components: np.ndarray  # (retained, features), orthonormal rows
    explained_variance: np.ndarray  # eigenvalues of retained components
    explained_variance_ratio: np.ndarray
    method: str = "zscore"
    fingerprint: str = ""

    @property
    def n_components(self):
        return self.components.shape[0]

    @property
    def n_features(self):
        return self.components.shape[1]

    def normalize(self, rows):
        rows = np.asarray(rows, dtype=float)
        if rows.shape[-1] != self.n_features:
            raise DimensionMismatch(f"expected {self.n_features} features, got {rows.shape[-1]}")
        return (rows - self.center) / self.scale

    def transform(self, rows):
        return self.normalize(rows) @ self.components.T

    def inverse_transform(self, projected):
        return (np.asarray(projected) @ self.components) * self.scale + self.center

    def to_dict(self):
        return {
            "method": self.method,
            "means": self.center.tolist(),
            "stds": self.scale.tolist(),
            "components": self.components.tolist(),
            "explained_variance": self.explained_variance.tolist(),
            "explained_variance_ratio": self.explained_variance_ratio.tolist(),
            "retained": self.n_components,
            "topology_fingerprint": self.fingerprint,
        }

    @classmethod
    def from_dict(cls, d):
        comps = np.array(d["components"], dtype=float).reshape(d["retained"], len(d["means"]))
        return cls(
            np.array(d["means"], dtype=float),
            np.array(d["stds"], dtype=float),
            comps,
            np.array(d["explained_variance"], dtype=float),
            np.array(d["explained_variance_ratio"], dtype=float),
            d.get("method", "zscore"),
            d.get("topology_fingerprint", ""),
        )

    def digest(self):
        return hashlib.sha256(json.dumps(self.to_dict()).encode()).hexdigest()[:16]

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _orient(vectors):
    # sign convention: largest-magnitude entry of each row is positive
    idx = np.argmax(np.abs(vectors), axis=1)
    signs = np.sign(vectors[np.arange(len(vectors)), idx])
    signs[signs == 0] = 1.0
    return vectors * signs[:, None]


def principal_axes(Z):
    """Eigen-decomposition of the sample covariance of centred rows ``Z``.

    Returns eigenvalues (descending) and unit eigenvectors as rows. With more
    features than rows the same nonzero eigenpairs are obtained from the
    rows x rows Gram matrix, avoiding a features x features covariance.
    """
    n, F = Z.shape
    denom = max(n - 1, 1)
    if F <= n:
        vals, vecs = np.linalg.eigh(Z.T @ Z / denom)
        order = np.argsort(vals)[::-1]
        vals = np.clip(vals[order], 0.0, None)
        return vals, _orient(vecs[:, order].T)
    vals, u = np.linalg.eigh(Z @ Z.T / denom)
    order = np.argsort(vals)[::-1]
    vals, u = vals[order], u[:, order]
    keep = vals > max(vals[0], 0.0) * 1e-12
    vals, u = vals[keep], u[:, keep]
    vecs = (Z.T @ u) / np.sqrt(vals * denom)
    # one Gram-Schmidt pass tightens orthonormality lost to rounding
    q, r = np.linalg.qr(vecs)
    vecs = q * np.sign(np.diag(r))
    return vals, _orient(vecs.T)


def fit_preprocessor(train, variance_to_retain=0.99, method="zscore", fingerprint=None):
    """Fit normalisation and PCA on training rows only.

    ``train`` is a :class:`~linkfault.dataset.Dataset` or a 2-D array. Keeps
    the fewest components whose cumulative explained variance reaches
    ``variance_to_retain``; 1.0 keeps all. Zero-spread columns get scale 1.
    """
    if not 0.0 < variance_to_retain <= 1.0:
        raise InvalidParams("variance_to_retain must lie in (0, 1]")
    X = getattr(train, "X", train)
    if fingerprint is None:
        fingerprint = getattr(train, "fingerprint", "")
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or len(X) == 0:
        raise InvalidParams("need a non-empty 2-D training matrix")
    center = X.mean(axis=0)
    if method == "zscore":
        scale = X.std(axis=0)
    elif method == "minmax":
        # range scaling; centring on the mean is what PCA needs anyway
        scale = X.max(axis=0) - X.min(axis=0)
    else:
        raise InvalidParams(f"unknown normalisation {method!r}")
    scale = np.where(scale > 0, scale, 1.0)
    Z = (X - center) / scale
    vals, vecs = principal_axes(Z)
    total = vals.sum()
    if variance_to_retain >= 1.0 or total <= 0:
        k = len(vals)
    else:
        ratio = np.cumsum(vals) / total
        k = int(np.searchsorted(ratio, variance_to_retain - 1e-12) + 1)
        k = min(k, len(vals))
    ratios = vals / total if total > 0 else np.zeros_like(vals)
    return Preprocessor(center, scale, vecs[:k].copy(), vals[:k].copy(), ratios[:k].copy(), method, fingerprint)


def apply_preprocessor(pre, rows):
    return pre.transform(rows)
