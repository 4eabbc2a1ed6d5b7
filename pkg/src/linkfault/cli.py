"""Command-line entry point: ``linkfault <subcommand> ...``.

Machine-readable results go to files or stdout; logs and errors go to stderr.
Exit status is 0 on success, 1 on a runtime error and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiment
from .config import CONFIG_ENV, ExperimentConfig, load_config, parse_assignments
from .dataset import Dataset, format_row, regression_arrays
from .errors import LinkFaultError
from .flowsim import FeatureVector, feature_count
from .learners import load_model, save_model, write_training_curve
from .metrics import ConfusionMatrix, precision_recall_f1, timing_summary
from .pipeline import PipelineConfig, diagnose
from .topology import DEFAULT_LENGTH, generate_small_world, load_edge_list, load_graphml, reference_topology

log = logging.getLogger("linkfault")

MANIFEST = "manifest.json"
STAGE_MODELS = ("stage1", "stage2", "stage3")


# --- helpers -------------------------------------------------------------------


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _out_dir(path):
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _read_manifest(path):
    p = Path(path)
    if p.is_dir():
        p = p / MANIFEST
    if not p.is_file():
        raise FileNotFoundError(f"manifest not found: {p}")
    return json.loads(p.read_text(encoding="utf-8"))


def _config(args, base=None):
    """Config from a manifest (if given), else file/env, then --set overrides."""
    if getattr(args, "manifest", None):
        cfg = ExperimentConfig.from_dict(_read_manifest(args.manifest)["config"])
    elif base is not None and not args.config:
        cfg = base
    else:
        cfg = load_config(args.config)
    return cfg.override(parse_assignments(args.set))


def _file_entry(path):
    return {"sha256": _sha256(path), "bytes": Path(path).stat().st_size}


# --- topology ------------------------------------------------------------------


def cmd_topology(args):
    if args.action == "gen":
        topo = generate_small_world(args.nodes, args.k, args.p, args.seed)
    elif args.action == "import":
        path = Path(args.graphml)
        if not path.is_file():
            raise FileNotFoundError(f"GraphML file not found: {path}")
        topo = load_graphml(path.read_text(encoding="utf-8"), default_length=args.default_length,
                            strict_geo=args.strict_geo, name=path.stem)
    else:
        topo = reference_topology(args.name)
    out = Path(args.output)
    out.write_text(topo.to_edge_list(), encoding="utf-8")
    summary = dict(topo.summary(), fingerprint=topo.fingerprint, removable_links=len(topo.removable_links()))
    _write_json(out.with_name(out.name + ".summary.json"), summary)
    print(json.dumps(summary, sort_keys=True))
    return 0


# --- dataset -------------------------------------------------------------------


def _write_regression(path, dataset):
    X, Y = regression_arrays(dataset)
    header = [f"x{j}" for j in range(X.shape[1])] + [f"y{j}" for j in range(Y.shape[1])]
    body = "".join(format_row(r) + "\n" for r in np.hstack([X, Y]))
    Path(path).write_text(",".join(header) + "\n" + body, encoding="utf-8")


def cmd_dataset(args):
    cfg = _config(args)
    out = _out_dir(args.output)
    topo = experiment.resolve_topology(cfg.topology)
    # keep a copy so the manifest never depends on files outside the directory
    (out / "topology.edges").write_text(topo.to_edge_list(), encoding="utf-8")
    data = experiment.build_datasets(topo, cfg)
    files, counts = {}, {}
    for name, ds in data.items():
        ds.to_csv(out / f"{name}.csv")
        counts[name] = {"rows": len(ds), "classes": int(np.count_nonzero(ds.class_counts()))}
    for name, ds in (("stage2_train", data.stage1_train), ("stage2_test", data.stage1_test)):
        _write_regression(out / f"{name}.csv", ds)
        counts[name] = {"rows": int(sum(s.kind.value == "Disconnection" for s in ds.scenarios()))}
    for p in sorted(out.iterdir()):
        if p.name != MANIFEST and p.is_file():
            files[p.name] = _file_entry(p)
    manifest = {
        "command": "dataset",
        "config": cfg.to_dict(),
        "topology": dict(topo.summary(), name=topo.name, fingerprint=topo.fingerprint),
        "stage1_classes": len(data.stage1_train.label_space),
        "stage1_rows": len(data.stage1_train) + len(data.stage1_test),
        "stage3_classes": len(data.stage3_train.label_space) if data.stage3_train is not None else 0,
        "counts": counts,
        "files": files,
    }
    _write_json(out / MANIFEST, manifest)
    log.info("wrote %d files to %s (Stage-1 classes: %d)", len(files), out, manifest["stage1_classes"])
    return 0


def _load_stage_data(data_dir):
    d = Path(data_dir)
    manifest = _read_manifest(d)
    sets = {name: Dataset.from_csv(d / f"{name}.csv") if (d / f"{name}.csv").is_file() else None
            for name in experiment.STAGE_FILES}
    if sets["stage1_train"] is None:
        raise FileNotFoundError(f"{d} holds no stage1_train.csv")
    topo = load_edge_list((d / "topology.edges").read_text(encoding="utf-8"), name=manifest["topology"].get("name", ""))
    return manifest, topo, sets


# --- train ---------------------------------------------------------------------


def _train_f1(artifact, ds):
    pred = artifact.predict(ds.X)
    return precision_recall_f1(ConfusionMatrix.from_predictions(ds.y.tolist(), pred.tolist())).macro_f1


def cmd_train(args):
    if args.manifest:
        prior = _read_manifest(args.manifest)
        args.data = args.data or prior["data"]
    if not args.data:
        raise LinkFaultError("train needs --data (or --manifest)")
    data_manifest, topo, sets = _load_stage_data(args.data)
    cfg = _config(args, ExperimentConfig.from_dict(data_manifest["config"]))
    if args.algo:
        cfg = cfg.override({"pipeline.algo": args.algo})
    out = _out_dir(args.output)
    algo = cfg.pipeline.algo

    artifacts = {}
    for stage, train in (("stage1", sets["stage1_train"]), ("stage3", sets["stage3_train"])):
        if train is None:
            log.warning("%s: no training data (topology admits no reconnection); skipped", stage)
            continue
        log.info("%s: training %s on %d rows x %d classes", stage, algo, len(train), len(train.label_space))
        art = experiment.train_stage(train, algo, cfg)
        log.info("%s: train macro-F1 = %.4f", stage, _train_f1(art, train))
        artifacts[stage] = art
    log.info("stage2: training delay regressor %s", "x".join(map(str, cfg.regressor.hidden_layers)))
    artifacts["stage2"] = experiment.train_regressor(sets["stage1_train"], cfg)

    for stage, art in artifacts.items():
        save_model(out / f"{stage}.json", art)
        history = getattr(art.model, "history", None)
        if history:
            write_training_curve(out / f"{stage}_curve.csv", history)
    manifest = {
        "command": "train",
        "data": str(Path(args.data)),
        "data_manifest_sha256": _sha256(Path(args.data) / MANIFEST),
        "config": cfg.to_dict(),
        "topology_fingerprint": topo.fingerprint,
        "files": {p.name: _file_entry(p) for p in sorted(out.iterdir()) if p.name != MANIFEST and p.is_file()},
    }
    _write_json(out / MANIFEST, manifest)
    reg = artifacts["stage2"].model
    log.info("stage2: train R2 = %.4f", reg.train_r2)
    log.info("stage2: validation R2 = %.4f", reg.val_r2 if reg.val_r2 is not None else float("nan"))
    return 0


# --- evaluate ------------------------------------------------------------------


def load_pipeline(model_dir, threshold=None):
    d = Path(model_dir)
    for stage in STAGE_MODELS:
        if not (d / f"{stage}.json").is_file():
            raise FileNotFoundError(f"{d} lacks {stage}.json; the pipeline needs all three stage models")
    arts = [load_model(d / f"{stage}.json") for stage in STAGE_MODELS]
    n = experiment.nodes_for_features(arts[0].preprocessor.n_features)
    if threshold is None:
        try:
            threshold = _read_manifest(d)["config"]["pipeline"]["threshold"]
        except FileNotFoundError:
            threshold = 0.10
    return PipelineConfig(*arts, n_nodes=n, threshold=threshold)


def _thresholds(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise LinkFaultError(f"bad threshold list {text!r}") from None


def cmd_evaluate(args):
    _, topo, sets = _load_stage_data(args.data)
    if sets["stage3_test"] is None:
        raise LinkFaultError("dataset has no reconnection rows; the mixed evaluation needs them")
    pcfg = load_pipeline(args.models, args.threshold)
    if pcfg.fingerprint != topo.fingerprint:
        raise LinkFaultError("models and dataset come from different topologies")
    out = _out_dir(args.output)
    sweep = _thresholds(args.sweep_threshold) if args.sweep_threshold else []

    stage1 = experiment.evaluate_stage1(pcfg.stage1, sets["stage1_test"], args.average)
    r2 = experiment.evaluate_regressor(pcfg.stage2, sets["stage1_test"])
    X, truth = experiment.mixed_test_set(sets["stage1_test"], sets["stage3_test"])
    mixed = experiment.evaluate_mixed(pcfg, X, truth, sweep, args.average)
    reports = [stage1, mixed.stage1_alone, mixed.pipeline, mixed.stage1_alone_link, mixed.pipeline_link,
               mixed.fault_type]
    stage1.r2 = r2
    for rep in reports:
        rep.write(out / rep.name)

    _write_csv(out / "prf_bars.csv", ["report", "precision", "recall", "f1"],
               [[r.name, repr(r.scores.macro_precision), repr(r.scores.macro_recall), repr(r.scores.macro_f1)]
                for r in reports])
    _write_csv(out / "detection_accuracy.csv", ["topology", "detection_accuracy"],
               [[topo.name or topo.fingerprint, repr(stage1.detection_accuracy)]])
    if sweep:
        _write_csv(out / "threshold_sweep.csv", ["threshold", "f1"], [[repr(t), repr(f)] for t, f in mixed.sweep])

    sel = np.linspace(0, len(X) - 1, min(args.timing_rows, len(X))).astype(int)
    _write_json(out / "timing.json", timing_summary(experiment.time_diagnose(pcfg, X[sel])))
    summary = {
        "stage1_f1": stage1.scores.macro_f1,
        "detection_accuracy": stage1.detection_accuracy,
        "r2": r2,
        "stage1_mixed_f1": mixed.stage1_alone.scores.macro_f1,
        "pipeline_mixed_f1": mixed.pipeline.scores.macro_f1,
        "fault_type_f1": mixed.fault_type.scores.macro_f1,
    }
    _write_json(out / "summary.json", summary)
    print(json.dumps(summary, sort_keys=True))
    return 0


# --- compare-baseline ----------------------------------------------------------


def cmd_compare_baseline(args):
    cfg = _config(args)
    rows = []
    for name in [t for t in args.topologies.split(",") if t]:
        topo_cfg = cfg.override({"topology.source": name})
        topo = experiment.resolve_topology(topo_cfg.topology)
        log.info("comparing on %s (V=%d, E=%d)", name, topo.V, topo.E)
        pair, extra = experiment.compare_on_topology(topo, topo_cfg)
        rows += pair
        log.info("%s: simulated probe time %.2f us", name, extra["probe_time_us"])
    out = Path(args.output)
    fresh = not (args.append and out.exists())
    with out.open("w" if fresh else "a", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if fresh:
            w.writerow(["method", "topology", "accuracy", "time_us"])
        w.writerows(r.cells() for r in rows)
    for r in rows:
        print(",".join(r.cells()))
    return 0


# --- diagnose ------------------------------------------------------------------


def _vector(obj, n):
    if isinstance(obj, list):
        return np.asarray(obj, dtype=float)
    if "values" in obj:
        return np.asarray(obj["values"], dtype=float)
    try:
        return FeatureVector(np.asarray(obj["rates"], float), np.asarray(obj["delays"], float),
                             np.asarray(obj["losses"], float), n_nodes=n).values
    except KeyError as exc:
        raise LinkFaultError(f"feature vector JSON lacks {exc}") from None


def _batch_rows(path, n):
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"input not found: {p}")
    if p.suffix == ".csv":
        return Dataset.from_csv(p).X if p.with_suffix(".meta.json").exists() else np.loadtxt(p, delimiter=",", ndmin=2)
    return [_vector(json.loads(line), n) for line in p.read_text(encoding="utf-8").splitlines() if line.strip()]


def cmd_diagnose(args):
    pcfg = load_pipeline(args.models, args.threshold)
    n = pcfg.n_nodes
    if args.batch:
        lines = [diagnose(row, pcfg).to_json() for row in _batch_rows(args.batch, n)]
        text = "".join(line + "\n" for line in lines)
    else:
        if not args.input:
            raise LinkFaultError("diagnose needs an input JSON file (or --batch)")
        src = sys.stdin if args.input == "-" else None
        raw = src.read() if src else Path(args.input).read_text(encoding="utf-8")
        values = _vector(json.loads(raw), n)
        if values.size != feature_count(n):
            raise LinkFaultError(f"expected {feature_count(n)} features, got {values.size}")
        text = diagnose(values, pcfg).to_json() + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


# --- parser --------------------------------------------------------------------


def _add_config_args(p, manifest=True):
    p.add_argument("--config", help=f"INI config file (default: ${CONFIG_ENV})")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override one config key; repeatable")
    if manifest:
        p.add_argument("--manifest", help="re-run with the config recorded in a manifest")


def build_parser():
    parser = argparse.ArgumentParser(prog="linkfault", description="Link fault identification and localisation.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="only log errors")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("topology", help="create or import a topology")
    tsub = p.add_subparsers(dest="action", required=True)
    g = tsub.add_parser("gen", help="small-world generator")
    g.add_argument("--nodes", type=int, required=True)
    g.add_argument("--k", type=int, default=4)
    g.add_argument("--p", type=float, default=0.1)
    g.add_argument("--seed", type=int, default=1)
    i = tsub.add_parser("import", help="convert a GraphML file")
    i.add_argument("--graphml", required=True)
    i.add_argument("--default-length", type=float, default=DEFAULT_LENGTH)
    i.add_argument("--strict-geo", action="store_true", help="fail when coordinates are missing")
    r = tsub.add_parser("reference", help="export a bundled reference topology")
    r.add_argument("name", choices=("desk10", "ref30", "ref60"))
    for q in (g, i, r):
        q.add_argument("-o", "--output", required=True, help="edge-list file to write")
    p.set_defaults(func=cmd_topology)

    p = sub.add_parser("dataset", help="simulate the stage datasets")
    _add_config_args(p)
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("train", help="train the three stage models")
    _add_config_args(p)
    p.add_argument("--data", help="dataset directory")
    p.add_argument("--algo", choices=("rf", "mlp", "svm"))
    p.add_argument("-o", "--output", required=True, help="model directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score Stage 1 and the pipeline")
    p.add_argument("--data", required=True)
    p.add_argument("--models", required=True)
    p.add_argument("--threshold", type=float)
    p.add_argument("--sweep-threshold", metavar="T1,T2,...")
    p.add_argument("--average", choices=("macro", "micro"), default="macro")
    p.add_argument("--timing-rows", type=int, default=100)
    p.add_argument("-o", "--output", required=True, help="report directory")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare-baseline", help="pipeline vs. ping baseline")
    _add_config_args(p, manifest=False)
    p.add_argument("--topologies", default="desk10,ref30,ref60")
    p.add_argument("--append", action="store_true", help="append to an existing CSV")
    p.add_argument("-o", "--output", required=True, help="comparison CSV")
    p.set_defaults(func=cmd_compare_baseline)

    p = sub.add_parser("diagnose", help="diagnose feature vectors")
    p.add_argument("input", nargs="?", help="feature-vector JSON file, or - for stdin")
    p.add_argument("--models", required=True)
    p.add_argument("--batch", help="JSON-lines or CSV file with one vector per row")
    p.add_argument("--threshold", type=float)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.ERROR if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(name)s: %(message)s", stream=sys.stderr, force=True)
    try:
        return args.func(args)
    except (LinkFaultError, OSError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"linkfault: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
