"""End-to-end experiment plumbing shared by the CLI, the demos and the tests.

The flow is: resolve a topology, simulate the stage datasets, train the three
stage models, then score Stage 1 alone and the full pipeline on a mixed
disconnection + reconnection test set.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import baseline
from .config import ExperimentConfig
from .dataset import Dataset, LabelSpace, generate_dataset, regression_arrays, split
from .errors import InvalidParams
from .flowsim import feature_count, random_demands
from .learners import ModelArtifact, train_classifier, train_mlp_regressor
from .metrics import ConfusionMatrix, evaluate, fault_detection_accuracy, precision_recall_f1, r2_score, timing_summary
from .pipeline import FaultType, PipelineConfig, diagnose, stage1_classify, trace_batch
from .preprocess import fit_preprocessor
from .topology import (
    FaultKind,
    FaultScenario,
    apply_fault,
    enumerate_scenarios,
    generate_small_world,
    load_graphml,
    read_edge_list,
    reference_topology,
    REFERENCE_TOPOLOGIES,
)

STAGE_FILES = ("stage1_train", "stage1_test", "stage3_train", "stage3_test")


def resolve_topology(src):
    """Topology from a :class:`~linkfault.config.TopologySource`."""
    if src.source == "generate":
        return generate_small_world(src.nodes, src.k, src.p, src.seed)
    if src.source in REFERENCE_TOPOLOGIES:
        return reference_topology(src.source)
    path = Path(src.source)
    if not path.is_file():
        raise FileNotFoundError(f"topology file not found: {path}")
    if path.suffix.lower() == ".graphml":
        return load_graphml(path.read_text(encoding="utf-8"), name=path.stem)
    return read_edge_list(path)


def nodes_for_features(n_features):
    """Invert ``3 V (V - 1)``."""
    n = int(round((1 + np.sqrt(1 + 4 * n_features / 3)) / 2))
    if feature_count(n) != n_features:
        raise ValueError(f"{n_features} is not a valid feature count")
    return n


@dataclass
class StageData:
    topology: object
    demands: np.ndarray
    stage1_train: Dataset
    stage1_test: Dataset
    stage3_train: Dataset | None  # None when no reconnection exists
    stage3_test: Dataset | None

    def items(self):
        return [(name, getattr(self, name)) for name in STAGE_FILES if getattr(self, name) is not None]


def build_datasets(topology, cfg: ExperimentConfig):
    d = cfg.dataset
    demands = random_demands(topology.n_nodes, d.demand_seed)
    s1 = enumerate_scenarios(topology, (FaultKind.NO_FAULT, FaultKind.DISCONNECTION))
    stage1 = generate_dataset(topology, s1, d.samples_per_class, demands, d.noise_seed, cfg.sim,
                              LabelSpace.for_disconnections(topology))
    limit = d.reconnection_scenarios or None
    s3 = enumerate_scenarios(topology, (FaultKind.RECONNECTION,), seed=d.scenario_seed, limit=limit)
    tr1, te1 = split(stage1, d.test_fraction, d.split_seed)
    if not s3:
        return StageData(topology, demands, tr1, te1, None, None)
    # a different noise stream so reconnection rows never reuse disconnection draws
    stage3 = generate_dataset(topology, s3, d.reconnection_samples_per_class, demands, d.noise_seed + 1, cfg.sim)
    tr3, te3 = split(stage3, d.test_fraction, d.split_seed)
    return StageData(topology, demands, tr1, te1, tr3, te3)


def train_stage(train, algo, cfg: ExperimentConfig):
    """Preprocessor + classifier for one classification stage."""
    pre = fit_preprocessor(train, cfg.dataset.variance_to_retain, fingerprint=train.fingerprint)
    model = train_classifier(algo, pre.transform(train.X), train.y, cfg.train)
    return ModelArtifact(model, train.label_space, train.fingerprint, pre)


def train_regressor(train, cfg: ExperimentConfig):
    X, Y = regression_arrays(train)
    model = train_mlp_regressor(X, Y, layer_sizes=cfg.regressor.hidden_layers, config=cfg.regressor)
    return ModelArtifact(model, None, train.fingerprint, None)


def train_all(data: StageData, cfg: ExperimentConfig, algo=None):
    if data.stage3_train is None:
        raise InvalidParams("topology admits no reconnection, so Stage 3 cannot be trained")
    algo = algo or cfg.pipeline.algo
    return PipelineConfig(
        train_stage(data.stage1_train, algo, cfg),
        train_regressor(data.stage1_train, cfg),
        train_stage(data.stage3_train, algo, cfg),
        data.topology.n_nodes,
        cfg.pipeline.threshold,
    )


def mixed_test_set(stage1_test, stage3_test):
    """Rows and true scenarios of the disconnection + reconnection test set."""
    X = np.vstack([stage1_test.X, stage3_test.X])
    truth = stage1_test.scenarios() + stage3_test.scenarios()
    return X, truth


def diagnosis_scenario(diag):
    if not diag.fault_detected:
        return FaultScenario.no_fault()
    if diag.fault_type is FaultType.DISCONNECTION_ONLY:
        return FaultScenario.disconnection(diag.disconnected_link)
    return FaultScenario.reconnection(diag.disconnected_link, diag.reconnected_link)


def _link_label(scenario):
    return "NoFault" if scenario.kind is FaultKind.NO_FAULT else "%d-%d" % scenario.removed


def _type_label(scenario):
    return {FaultKind.NO_FAULT: FaultType.NONE, FaultKind.DISCONNECTION: FaultType.DISCONNECTION_ONLY,
            FaultKind.RECONNECTION: FaultType.RECONNECTION}[scenario.kind].value


@dataclass
class MixedEvaluation:
    stage1_alone: object  # EvaluationReport, full fault labels
    pipeline: object
    stage1_alone_link: object  # EvaluationReport, disconnected-link labels
    pipeline_link: object
    fault_type: object
    sweep: list  # (threshold, fault-type F1)


def evaluate_stage1(artifact, test, average="macro", name="stage1_disconnection"):
    """Stage-1 report on a disconnection-only test set, with detection accuracy."""
    pred = artifact.predict(test.X)
    truth = [s.kind is not FaultKind.NO_FAULT for s in test.scenarios()]
    detected = [artifact.label_space.decode(c).kind is not FaultKind.NO_FAULT for c in pred]
    labels = list(range(len(artifact.label_space)))
    return evaluate(name, test.y.tolist(), pred.tolist(), labels, average,
                    detection_accuracy=fault_detection_accuracy(detected, truth))


def evaluate_regressor(artifact, test):
    X, Y = regression_arrays(test)
    return r2_score(artifact.model.predict(X), Y)


def fault_type_f1(diagnoses, truth, average="macro"):
    cm = ConfusionMatrix.from_predictions([_type_label(s) for s in truth],
                                          [d.fault_type.value for d in diagnoses])
    return precision_recall_f1(cm, average).macro_f1


def evaluate_mixed(pcfg, X, truth, thresholds=(), average="macro"):
    """Score Stage 1 alone and the full pipeline on the same mixed rows.

    The primary comparison uses full fault labels (kind plus links), since
    that is what a diagnosis asserts. The ``*_link`` reports score only the
    disconnected link, where Stage 1 is not penalised for missing the new link.
    """
    trace = trace_batch(X, pcfg)
    diags = trace.diagnoses(pcfg.threshold)
    s1 = [FaultScenario.no_fault() if l is None else FaultScenario.disconnection(l) for l in trace.l1]
    pipe = [diagnosis_scenario(d) for d in diags]
    is_fault = [s.kind is not FaultKind.NO_FAULT for s in truth]
    det = fault_detection_accuracy([l is not None for l in trace.l1], is_fault)
    full = [str(s) for s in truth]
    links = [_link_label(s) for s in truth]
    reports = MixedEvaluation(
        evaluate("stage1_mixed", full, [str(s) for s in s1], average=average, detection_accuracy=det),
        evaluate("pipeline_mixed", full, [str(s) for s in pipe], average=average, detection_accuracy=det),
        evaluate("stage1_mixed_link", links, [_link_label(s) for s in s1], average=average),
        evaluate("pipeline_mixed_link", links, [_link_label(s) for s in pipe], average=average),
        evaluate("fault_type", [_type_label(s) for s in truth], [d.fault_type.value for d in diags],
                 average=average),
        [(float(t), fault_type_f1(trace.diagnoses(t), truth, average)) for t in thresholds],
    )
    return reports


def time_diagnose(pcfg, X, repeats=1):
    """Wall-clock diagnose() time per row in microseconds."""
    times = []
    for _ in range(repeats):
        for row in X:
            times.append(diagnose(row, pcfg).inference_time)
    return np.asarray(times)


# --- baseline comparison -------------------------------------------------------


@dataclass
class ComparisonRow:
    method: str
    topology: str
    accuracy: float
    time_us: float

    def cells(self):
        return [self.method, self.topology, f"{self.accuracy:.4f}", f"{self.time_us:.2f}"]


def compare_on_topology(topology, cfg: ExperimentConfig, timing_rows=50):
    """ML pipeline vs. ping baseline on single disconnections of ``topology``.

    Accuracy is disconnected-link accuracy; ML time is the mean diagnose()
    time, baseline time is simulated probing plus measured analysis.
    """
    data = build_datasets(topology, cfg)
    pcfg = train_all(data, cfg)
    test = data.stage1_test
    faulty = [i for i, s in enumerate(test.scenarios()) if s.kind is FaultKind.DISCONNECTION]
    l1 = stage1_classify(test.X[faulty], pcfg.stage1, topology.n_nodes)
    ml_acc = float(np.mean([p == test.label_space.decode(test.y[i]).removed for p, i in zip(l1, faulty)]))
    X, _ = mixed_test_set(test, data.stage3_test)
    sel = np.linspace(0, len(X) - 1, min(timing_rows, len(X))).astype(int)
    ml_times = time_diagnose(pcfg, X[sel])
    ml_time = float(ml_times.mean())

    # signatures are computed once; their cost is charged to every trial's analysis
    t0 = time.perf_counter()
    sigs = baseline.candidate_signatures(topology, cfg.sim, data.demands)
    sig_time = (time.perf_counter() - t0) * 1e6
    hits, totals, probes = [], [], []
    for i, link in enumerate(topology.removable_links()):
        faulted = apply_fault(topology, FaultScenario.disconnection(link))
        guess, report = baseline.probe_and_localize(faulted, topology, cfg.sim, data.demands,
                                                    seed=cfg.dataset.noise_seed, signatures=sigs, trial=i)
        hits.append(guess == link.endpoints)
        totals.append(report.total_time + sig_time)
        probes.append(report.probe_time)
    name = topology.name or topology.fingerprint
    rows = [
        ComparisonRow("ml-pipeline", name, ml_acc, ml_time),
        ComparisonRow("ping-baseline", name, float(np.mean(hits)), float(np.mean(totals))),
    ]
    return rows, {"probe_time_us": float(np.mean(probes)), "diagnose": timing_summary(ml_times.tolist())}


def run(cfg: ExperimentConfig, average="macro"):
    """Build, train and evaluate in one go; returns a dict of results."""
    t0 = time.perf_counter()
    topology = resolve_topology(cfg.topology)
    data = build_datasets(topology, cfg)
    pcfg = train_all(data, cfg)
    X, truth = mixed_test_set(data.stage1_test, data.stage3_test)
    return {
        "topology": topology,
        "data": data,
        "pipeline": pcfg,
        "stage1": evaluate_stage1(pcfg.stage1, data.stage1_test, average),
        "r2": evaluate_regressor(pcfg.stage2, data.stage1_test),
        "mixed": evaluate_mixed(pcfg, X, truth, cfg.pipeline.sweep, average),
        "seconds": time.perf_counter() - t0,
    }
