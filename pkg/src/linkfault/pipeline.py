"""Three-stage link fault identification and localisation.

1. A disconnection classifier maps a measurement to NoFault or a tentative
   disconnected link ``L1``.
2. A delay regressor predicts all-pair delays assuming only ``L1`` failed;
   the relative RMS gap to the measured delays decides between a plain
   disconnection and a reconnection.
3. For reconnections, a pair classifier names the disconnected link ``L2``
   and the new link ``L3``.

Stage 2 and 3 only run when the preceding stage asks for them.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dataset import regression_inputs
from .errors import DimensionMismatch, FingerprintMismatch, InvalidParams
from .flowsim import feature_count, split_blocks
from .topology import FaultKind


class FaultType(str, Enum):
    NONE = "None"
    DISCONNECTION_ONLY = "DisconnectionOnly"
    RECONNECTION = "Reconnection"


@dataclass(frozen=True)
class Diagnosis:
    fault_detected: bool
    fault_type: FaultType = FaultType.NONE
    tentative_link: tuple | None = None
    disconnected_link: tuple | None = None
    reconnected_link: tuple | None = None
    delay_error: float | None = None
    inference_time: float = 0.0  # us

    def __post_init__(self):
        if not self.fault_detected:
            if self.fault_type is not FaultType.NONE or any(
                    x is not None for x in (self.tentative_link, self.disconnected_link, self.reconnected_link)):
                raise ValueError("a no-fault diagnosis cannot name links")
        elif self.fault_type is FaultType.DISCONNECTION_ONLY:
            if self.disconnected_link != self.tentative_link or self.reconnected_link is not None:
                raise ValueError("DisconnectionOnly requires L2 == L1 and no L3")
        elif self.fault_type is FaultType.RECONNECTION:
            if self.disconnected_link is None or self.reconnected_link is None:
                raise ValueError("Reconnection requires L2 and L3")
        else:
            raise ValueError("a detected fault needs a fault type")

    def to_dict(self):
        lk = lambda l: list(l) if l is not None else None  # noqa: E731
        return {
            "fault_detected": self.fault_detected,
            "tentative_link": lk(self.tentative_link),
            "fault_type": self.fault_type.value,
            "disconnected_link": lk(self.disconnected_link),
            "reconnected_link": lk(self.reconnected_link),
            "delay_error": self.delay_error,
            "inference_time": self.inference_time,
        }

    def to_json(self):
        return json.dumps(self.to_dict())


@dataclass
class PipelineConfig:
    stage1: object  # ModelArtifact over the disconnection label space
    stage2: object  # ModelArtifact wrapping the delay regressor
    stage3: object  # ModelArtifact over the reconnection label space
    n_nodes: int
    threshold: float = 0.10

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise InvalidParams("threshold must lie in (0, 1)")
        fps = {a.topology_fingerprint for a in (self.stage1, self.stage2, self.stage3)}
        if len(fps) != 1:
            raise FingerprintMismatch(f"stage models disagree on topology: {sorted(fps)}")

    @property
    def fingerprint(self):
        return self.stage1.topology_fingerprint


def _rows(values, n_nodes):
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[None, :]
    if values.shape[1] != feature_count(n_nodes):
        raise DimensionMismatch(f"expected {feature_count(n_nodes)} features, got {values.shape[1]}")
    return values


def relative_rmse(predicted, actual):
    """sqrt(mean((p - a)^2)) / sqrt(mean(a^2)) along the last axis."""
    predicted = np.asarray(predicted, dtype=float)
    actual = np.asarray(actual, dtype=float)
    num = np.sqrt(np.mean((predicted - actual) ** 2, axis=-1))
    den = np.sqrt(np.mean(actual ** 2, axis=-1))
    return num / den


def stage1_classify(values, stage1, n_nodes):
    """Tentative disconnected link per row, or None for NoFault."""
    rows = _rows(values, n_nodes)
    labels = stage1.predict(rows)
    out = []
    for c in labels:
        sc = stage1.label_space.decode(c)
        out.append(None if sc.kind is FaultKind.NO_FAULT else sc.removed)
    return out


def stage2_delay_error(rates, l1, actual_delays, stage2, n_nodes):
    """Relative RMS error between predicted and measured delays, per row."""
    rates = np.atleast_2d(rates)
    actual = np.atleast_2d(actual_delays)
    n_pairs = n_nodes * (n_nodes - 1)
    if rates.shape[1] != n_pairs or actual.shape[1] != n_pairs:
        raise DimensionMismatch(f"expected {n_pairs} pair rates and delays")
    links = np.atleast_2d(np.asarray(l1, dtype=np.intp))
    predicted = stage2.model.predict(regression_inputs(rates, links, n_nodes))
    return relative_rmse(predicted, actual)


def stage2_identify(rates, l1, actual_delays, stage2, threshold, n_nodes):
    """(FaultType, delay_error) for a single measurement."""
    err = float(stage2_delay_error(rates, l1, actual_delays, stage2, n_nodes)[0])
    kind = FaultType.DISCONNECTION_ONLY if err < threshold else FaultType.RECONNECTION
    return kind, err


def stage3_localize(values, stage3, n_nodes):
    """(L2, L3) per row from the reconnection classifier."""
    rows = _rows(values, n_nodes)
    out = []
    for c in stage3.predict(rows):
        sc = stage3.label_space.decode(c)
        out.append((sc.removed, sc.added))
    return out


def diagnose(values, config):
    """Run the stages on one feature vector and time the whole call."""
    t0 = time.perf_counter()
    n = config.n_nodes
    row = _rows(values, n)
    (l1,) = stage1_classify(row, config.stage1, n)
    if l1 is None:
        dt = (time.perf_counter() - t0) * 1e6
        return Diagnosis(False, inference_time=dt)
    rates, delays, _ = split_blocks(row, n)
    kind, err = stage2_identify(rates, l1, delays, config.stage2, config.threshold, n)
    if kind is FaultType.DISCONNECTION_ONLY:
        dt = (time.perf_counter() - t0) * 1e6
        return Diagnosis(True, kind, l1, l1, None, err, dt)
    ((l2, l3),) = stage3_localize(row, config.stage3, n)
    dt = (time.perf_counter() - t0) * 1e6
    return Diagnosis(True, kind, l1, l2, l3, err, dt)


@dataclass
class BatchTrace:
    """Intermediate stage outputs for many rows, reusable across thresholds."""

    l1: list
    delay_error: np.ndarray  # nan where Stage 1 said NoFault
    stage3: list  # (L2, L3) per row, None where Stage 1 said NoFault

    def diagnoses(self, threshold):
        out = []
        for l1, err, s3 in zip(self.l1, self.delay_error, self.stage3):
            if l1 is None:
                out.append(Diagnosis(False))
            elif err < threshold:
                out.append(Diagnosis(True, FaultType.DISCONNECTION_ONLY, l1, l1, None, float(err)))
            else:
                out.append(Diagnosis(True, FaultType.RECONNECTION, l1, s3[0], s3[1], float(err)))
        return out


def trace_batch(values, config):
    """Evaluate every stage on every faulty row at once (no timing).

    ``trace_batch(X, cfg).diagnoses(cfg.threshold)`` matches calling
    :func:`diagnose` row by row, apart from ``inference_time``.
    """
    n = config.n_nodes
    rows = _rows(values, n)
    l1 = stage1_classify(rows, config.stage1, n)
    faulty = np.array([l is not None for l in l1])
    err = np.full(len(rows), np.nan)
    s3 = [None] * len(rows)
    if faulty.any():
        rates, delays, _ = split_blocks(rows[faulty], n)
        err[faulty] = stage2_delay_error(rates, [l for l in l1 if l is not None], delays, config.stage2, n)
        loc = stage3_localize(rows[faulty], config.stage3, n)
        for i, pair in zip(np.flatnonzero(faulty), loc):
            s3[i] = pair
    return BatchTrace(l1, err, s3)
