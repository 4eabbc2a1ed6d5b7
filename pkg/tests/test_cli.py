import csv
import json

import numpy as np
import pytest

from linkfault.cli import main
from linkfault.dataset import Dataset
from linkfault.topology import load_edge_list

from conftest import make_topology

SMALL_DESK = [
    "dataset.samples_per_class=30",
    "dataset.reconnection_samples_per_class=10",
    "dataset.reconnection_scenarios=5",
    "train.trees_count=20",
    "regressor.hidden_layers=64,64",
    "regressor.epochs=30",
]


def sets(items):
    return [a for item in items for a in ("--set", item)]


def synthetic_graphml(n, m, seed=0):
    """A connected n-node, m-edge GraphML document with coordinates."""
    rng = np.random.default_rng(seed)
    edges = [(i, i + 1) for i in range(n - 1)]
    seen = set(edges)
    while len(edges) < m:
        u, v = sorted(rng.choice(n, 2, replace=False).tolist())
        if (u, v) not in seen:
            seen.add((u, v))
            edges.append((u, v))
    nodes = "".join(f'<node id="n{i}"><data key="lat">{rng.uniform(40, 50):.4f}</data>'
                    f'<data key="lon">{rng.uniform(0, 10):.4f}</data></node>' for i in range(n))
    links = "".join(f'<edge source="n{u}" target="n{v}"/>' for u, v in edges)
    return ('<graphml xmlns="http://graphml.graphdrawing.org/xmlns">'
            '<key attr.name="Latitude" attr.type="double" for="node" id="lat"/>'
            '<key attr.name="Longitude" attr.type="double" for="node" id="lon"/>'
            f'<graph edgedefault="undirected">{nodes}{links}</graph></graphml>')


# --- topology ---------------------------------------------------------------------


def test_topology_gen_ring_lattice(tmp_path, capsys):
    out = tmp_path / "ring.edges"
    assert main(["topology", "gen", "--nodes", "10", "--k", "4", "--p", "0", "--seed", "1", "-o", str(out)]) == 0
    t = load_edge_list(out.read_text())
    want = {tuple(sorted((i, (i + j) % 10))) for i in range(10) for j in (1, 2)}
    assert {l.endpoints for l in t.links} == want
    assert json.loads(capsys.readouterr().out)["E"] == 20


def test_topology_import(tmp_path):
    src = tmp_path / "net.graphml"
    src.write_text(synthetic_graphml(100, 120))
    out = tmp_path / "net.edges"
    assert main(["topology", "import", "--graphml", str(src), "-o", str(out)]) == 0
    t = load_edge_list(out.read_text())
    assert (t.V, t.E) == (100, 120)
    assert json.loads((tmp_path / "net.edges.summary.json").read_text())["V"] == 100


def test_missing_file_is_a_runtime_error(tmp_path, capsys):
    assert main(["topology", "import", "--graphml", str(tmp_path / "nope.graphml"), "-o", str(tmp_path / "x")]) == 1
    assert "linkfault: error:" in capsys.readouterr().err


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["train", "--algo", "knn", "-o", "x"])
    assert exc.value.code == 2


def test_reference_export(tmp_path):
    out = tmp_path / "desk.edges"
    assert main(["-q", "topology", "reference", "desk10", "-o", str(out)]) == 0
    assert load_edge_list(out.read_text()).E == 13


# --- dataset and train on a triangle -------------------------------------------------


@pytest.fixture
def triangle_file(tmp_path):
    p = tmp_path / "tri.edges"
    p.write_text(make_topology([(0, 1), (1, 2), (0, 2)]).to_edge_list())
    return p


def test_triangle_dataset_and_train(tmp_path, triangle_file, capsys):
    data = tmp_path / "data"
    over = sets([f"topology.source={triangle_file}", "dataset.samples_per_class=10", "regressor.epochs=20"])
    assert main(["dataset", *over, "-o", str(data)]) == 0
    manifest = json.loads((data / "manifest.json").read_text())
    assert manifest["stage1_classes"] == 4 and manifest["stage1_rows"] == 40
    train, test = Dataset.from_csv(data / "stage1_train.csv"), Dataset.from_csv(data / "stage1_test.csv")
    assert (len(train), len(test)) == (32, 8) and train.X.shape[1] == 18
    assert not (data / "stage3_train.csv").exists()

    capsys.readouterr()
    assert main(["train", "--data", str(data), "-o", str(tmp_path / "m")]) == 0
    messages = capsys.readouterr().err.splitlines()
    assert "linkfault: stage1: train macro-F1 = 1.0000" in messages
    assert messages[-1].startswith("linkfault: stage2: validation R2 = ")
    for algo in ("svm", "mlp"):
        assert main(["-q", "train", "--data", str(data), "--algo", algo, "-o", str(tmp_path / algo)]) == 0
        assert json.loads((tmp_path / algo / "manifest.json").read_text())["config"]["pipeline"]["algo"] == algo


def test_manifest_rerun_is_byte_identical(tmp_path, triangle_file):
    over = sets([f"topology.source={triangle_file}", "dataset.samples_per_class=6"])
    assert main(["-q", "dataset", *over, "-o", str(tmp_path / "a")]) == 0
    assert main(["-q", "dataset", "--manifest", str(tmp_path / "a"), "-o", str(tmp_path / "b")]) == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files == sorted(p.name for p in (tmp_path / "b").iterdir())
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


# --- full flow on a reduced desk experiment ----------------------------------------


@pytest.fixture(scope="module")
def desk_models(tmp_path_factory):
    root = tmp_path_factory.mktemp("desk")
    assert main(["-q", "dataset", *sets(SMALL_DESK), "-o", str(root / "data")]) == 0
    assert main(["-q", "train", "--data", str(root / "data"), "-o", str(root / "models")]) == 0
    return root


def test_desk_dataset_has_fourteen_stage1_classes(desk_models):
    manifest = json.loads((desk_models / "data" / "manifest.json").read_text())
    assert manifest["stage1_classes"] == 14 and manifest["stage3_classes"] == 5
    for name, entry in manifest["files"].items():
        assert (desk_models / "data" / name).stat().st_size == entry["bytes"]


def test_evaluate_with_sweep(desk_models, tmp_path, capsys):
    rc = main(["-q", "evaluate", "--data", str(desk_models / "data"), "--models", str(desk_models / "models"),
               "--sweep-threshold", "0.02,0.05,0.10,0.20,0.40", "--timing-rows", "5", "-o", str(tmp_path)])
    assert rc == 0
    rows = list(csv.reader((tmp_path / "threshold_sweep.csv").open()))
    assert rows[0] == ["threshold", "f1"] and len(rows) == 6
    assert [float(r[0]) for r in rows[1:]] == [0.02, 0.05, 0.10, 0.20, 0.40]
    summary = json.loads(capsys.readouterr().out)
    assert summary == json.loads((tmp_path / "summary.json").read_text())
    assert 0 <= summary["pipeline_mixed_f1"] <= 1 and summary["stage1_f1"] > 0.8


def test_diagnose_single_and_batch(desk_models, tmp_path, capsys):
    test = Dataset.from_csv(desk_models / "data" / "stage1_test.csv")
    models = str(desk_models / "models")
    vec = tmp_path / "v.json"
    vec.write_text(json.dumps({"values": test.X[0].tolist()}))
    assert main(["-q", "diagnose", str(vec), "--models", models]) == 0
    single = json.loads(capsys.readouterr().out)
    assert set(single) >= {"fault_detected", "fault_type", "disconnected_link", "inference_time"}

    out = tmp_path / "out.jsonl"
    batch = desk_models / "data" / "stage1_test.csv"
    assert main(["-q", "diagnose", "--batch", str(batch), "--models", models, "-o", str(out)]) == 0
    lines = [json.loads(x) for x in out.read_text().splitlines()]
    assert len(lines) == len(test)
    strip = lambda d: {k: v for k, v in d.items() if k != "inference_time"}
    assert strip(lines[0]) == strip(single)

    vec.write_text(json.dumps([1.0, 2.0]))
    assert main(["-q", "diagnose", str(vec), "--models", models]) == 1


def test_compare_baseline_rows(tmp_path, capsys):
    out = tmp_path / "cmp.csv"
    args = ["-q", "compare-baseline", "--topologies", "desk10", *sets(SMALL_DESK), "-o", str(out)]
    assert main(args) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["method", "topology", "accuracy", "time_us"]
    assert [r[0] for r in rows[1:]] == ["ml-pipeline", "ping-baseline"]
    for r in rows[1:]:
        assert len(r[3].split(".")[1]) == 2 and float(r[3]) > 0 and 0 <= float(r[2]) <= 1
    assert capsys.readouterr().out.splitlines() == [",".join(r) for r in rows[1:]]
    assert main(args[:-2] + ["--append", "-o", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 5
