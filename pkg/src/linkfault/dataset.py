"""Labelled measurement datasets.

A dataset row is one feature vector ``[rates, delays, losses]`` for the
topology it was generated on; its label is an index into a
:class:`LabelSpace`, an ordered list of fault scenarios.

On disk a dataset is a CSV (``label,f0,f1,...``, 9 significant digits) plus
a ``.meta.json`` sidecar carrying the label space and topology fingerprint.
Feature values are rounded to 9 significant digits when generated, so the
CSV round trip is bit-exact.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _rng
from .errors import ClassTooSmall, DimensionMismatch, InvalidParams, ValidationError
from .flowsim import SimConfig, Simulator, feature_count, split_blocks
from .topology import FaultKind, FaultScenario, enumerate_scenarios


@dataclass(frozen=True)
class LabelSpace:
    classes: tuple

    def __post_init__(self):
        classes = tuple(self.classes)
        if len(set(classes)) != len(classes):
            raise ValidationError("label space contains duplicate scenarios")
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "_index", {c: i for i, c in enumerate(classes)})

    def __len__(self):
        return len(self.classes)

    def __iter__(self):
        return iter(self.classes)

    def encode(self, scenario):
        try:
            return self._index[scenario]
        except KeyError:
            raise ValidationError(f"{scenario} is not in the label space") from None

    def decode(self, class_id):
        return self.classes[int(class_id)]

    @classmethod
    def for_disconnections(cls, topology):
        """Class 0 is NoFault, then one class per removable link."""
        return cls(tuple(enumerate_scenarios(topology, [FaultKind.NO_FAULT, FaultKind.DISCONNECTION])))

    def to_list(self):
        return [c.to_dict() for c in self.classes]

    @classmethod
    def from_list(cls, items):
        return cls(tuple(FaultScenario.from_dict(d) for d in items))


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y: np.ndarray
    label_space: LabelSpace
    fingerprint: str
    n_nodes: int

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise DimensionMismatch(f"feature matrix {X.shape} does not match {y.shape[0]} labels")
        if X.shape[1] != feature_count(self.n_nodes):
            raise DimensionMismatch(f"expected {feature_count(self.n_nodes)} columns, got {X.shape[1]}")
        if len(y) and (y.min() < 0 or y.max() >= len(self.label_space)):
            raise ValidationError("label outside the label space")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return len(self.y)

    def subset(self, idx):
        idx = np.asarray(idx)
        return Dataset(self.X[idx], self.y[idx], self.label_space, self.fingerprint, self.n_nodes)

    def scenarios(self):
        return [self.label_space.decode(c) for c in self.y]

    def class_counts(self):
        return np.bincount(self.y, minlength=len(self.label_space))

    def blocks(self):
        """(rates, delays, losses) views of the feature matrix."""
        return split_blocks(self.X, self.n_nodes)

    def to_csv(self, path):
        path = Path(path)
        path.write_text(_csv_text(self.X, self.y), encoding="utf-8")
        meta = {
            "label_space": self.label_space.to_list(),
            "fingerprint": self.fingerprint,
            "n_nodes": self.n_nodes,
            "rows": len(self),
        }
        _meta_path(path).write_text(json.dumps(meta, indent=1) + "\n", encoding="utf-8")

    @classmethod
    def from_csv(cls, path):
        path = Path(path)
        meta = json.loads(_meta_path(path).read_text(encoding="utf-8"))
        with path.open(encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if not header or header[0] != "label":
                raise ValidationError(f"{path}: header must start with 'label'")
            rows = [r for r in reader if r]
        y = np.array([int(r[0]) for r in rows], dtype=np.int64)
        X = np.array([[float(v) for v in r[1:]] for r in rows], dtype=float).reshape(len(rows), len(header) - 1)
        return cls(X, y, LabelSpace.from_list(meta["label_space"]), meta["fingerprint"], meta["n_nodes"])


def _meta_path(path):
    return path.with_name(path.name + ".meta.json") if path.suffix != ".csv" else path.with_suffix(".meta.json")


def _fmt(a):
    return np.char.mod("%.9g", a)


_POW10 = np.array([float(10 ** i) for i in range(23)])  # all exact doubles


def quantize(a):
    """Round to 9 significant digits so that ``float("%.9g" % q) == q``.

    With an integer mantissa ``D`` and an exact power of ten, ``D * 10**k`` or
    ``D / 10**-k`` is a single correctly rounded operation, which is exactly
    the double a decimal parser returns for the printed value.
    """
    a = np.asarray(a, dtype=float)
    out = a.copy()
    flat = out.reshape(-1)
    # elementwise, so chunking only bounds the size of the temporaries
    for start in range(0, flat.size, _CHUNK):
        block = flat[start:start + _CHUNK]
        mask = np.isfinite(block) & (block != 0)
        block[mask] = _quantize_nonzero(block[mask])
    return out


_CHUNK = 1 << 20


def _quantize_nonzero(x):
    with np.errstate(divide="ignore"):
        k = np.floor(np.log10(np.abs(x))).astype(np.int64) - 8
    for _ in range(2):  # log10 may be one off near powers of ten
        scaled = np.where(k >= 0, x / _pow10(k), x * _pow10(-k))
        D = np.round(scaled)
        big = np.abs(D) >= 1e9
        if not big.any():
            break
        k = k + big
    q = np.where(k >= 0, D * _pow10(k), D / _pow10(-k))
    # outside the exact-power range the shortcut is not exact: format instead
    far = np.abs(k) > 22
    if far.any():
        q[far] = _fmt(x[far]).astype(float)
    return q


def _pow10(e):
    return _POW10[np.clip(e, 0, 22)]


def format_row(values):
    return ",".join(map("%.9g".__mod__, np.asarray(values, dtype=float).tolist()))


def _csv_text(X, y):
    buf = io.StringIO()
    buf.write(",".join(["label"] + [f"f{j}" for j in range(X.shape[1])]) + "\n")
    for label, row in zip(y, X):
        buf.write(f"{int(label)},{format_row(row)}\n")
    return buf.getvalue()


def generate_dataset(topology, scenarios, samples_per_class, demands, noise_seed, config=SimConfig(), label_space=None):
    """Simulate ``samples_per_class`` noisy measurements per scenario.

    ``demands`` is the V x V demand matrix shared by every scenario (see
    :func:`linkfault.flowsim.random_demands`). Sample ``j`` of scenario ``i``
    draws its noise from the stream ``(noise_seed, i, j)``.
    """
    if samples_per_class < 1:
        raise InvalidParams("samples_per_class must be >= 1")
    scenarios = list(scenarios)
    if label_space is None:
        label_space = LabelSpace(tuple(scenarios))
    sim = Simulator(topology, demands, config)
    F = feature_count(topology.n_nodes)
    X = np.empty((len(scenarios) * samples_per_class, F))
    y = np.empty(len(scenarios) * samples_per_class, dtype=np.int64)
    row = 0
    for i, sc in enumerate(scenarios):
        clean = sim.clean(sc)
        cid = label_space.encode(sc)
        for j in range(samples_per_class):
            rng = _rng.derive_rng(noise_seed, _rng.NOISE, i, j)
            X[row] = sim.noisy(clean, rng).values
            y[row] = cid
            row += 1
    return Dataset(quantize(X), y, label_space, topology.fingerprint, topology.n_nodes)


def split(dataset, test_fraction, seed):
    """Stratified train/test split; rows keep their original relative order."""
    if not 0.0 < test_fraction < 1.0:
        raise InvalidParams(f"test_fraction must lie in (0, 1), got {test_fraction}")
    rng = _rng.derive_rng(seed, _rng.SPLIT)
    classes = np.unique(dataset.y)
    members = [np.flatnonzero(dataset.y == c) for c in classes]
    for c, m in zip(classes, members):
        if len(m) < 2:
            raise ClassTooSmall(f"class {c} has {len(m)} row(s); need at least 2")
    # largest-remainder allocation: the overall test size is round(n * fraction)
    # and every class is within one row of its exact share
    want = np.array([len(m) * test_fraction for m in members])
    n_test = np.floor(want).astype(int)
    extra = int(np.floor(len(dataset) * test_fraction + 0.5)) - n_test.sum()
    order = sorted(range(len(classes)), key=lambda i: (-(want[i] - n_test[i]), i))
    for i in order[:max(extra, 0)]:
        n_test[i] += 1
    test_idx = []
    for m, k in zip(members, n_test):
        k = min(max(k, 1), len(m) - 1)
        test_idx.extend(rng.permutation(m)[:k].tolist())
    test_mask = np.zeros(len(dataset), dtype=bool)
    test_mask[test_idx] = True
    return dataset.subset(np.flatnonzero(~test_mask)), dataset.subset(np.flatnonzero(test_mask))


def link_onehots(links, n_nodes):
    """Two one-hot blocks (source, sink) of width V for each link."""
    links = np.asarray(links, dtype=np.intp).reshape(-1, 2)
    out = np.zeros((len(links), 2 * n_nodes))
    rows = np.arange(len(links))
    out[rows, links[:, 0]] = 1.0
    out[rows, n_nodes + links[:, 1]] = 1.0
    return out


def regression_inputs(rates, links, n_nodes):
    """Delay-regressor input: raw pair rates followed by the encoded link."""
    rates = np.atleast_2d(np.asarray(rates, dtype=float))
    return np.hstack([rates, link_onehots(links, n_nodes)])


def regression_arrays(dataset):
    """(inputs, delay targets) for the disconnection rows of ``dataset``."""
    scen = dataset.scenarios()
    keep = np.array([s.kind is FaultKind.DISCONNECTION for s in scen])
    if not keep.any():
        raise ValidationError("dataset has no disconnection rows")
    rates, delays, _ = dataset.blocks()
    links = [s.removed for s, k in zip(scen, keep) if k]
    return regression_inputs(rates[keep], links, dataset.n_nodes), delays[keep]
