import pytest

from linkfault.config import CONFIG_ENV, ExperimentConfig, load_config, parse_assignments, parse_ini
from linkfault.errors import InvalidParams


def test_defaults():
    cfg = ExperimentConfig()
    assert cfg.topology.source == "desk10"
    assert cfg.dataset.samples_per_class == 200 and cfg.dataset.test_fraction == 0.2
    assert cfg.pipeline.threshold == 0.10 and cfg.pipeline.algo == "rf"
    assert cfg.regressor.hidden_layers == (400, 400, 400)


def test_overrides_are_coerced():
    cfg = ExperimentConfig().override({
        "dataset.samples_per_class": "12",
        "sim.noise_std_fraction": "0.2",
        "pipeline.sweep": "0.1, 0.3",
        "regressor.hidden_layers": "32,16",
    })
    assert cfg.dataset.samples_per_class == 12
    assert cfg.sim.noise_std_fraction == 0.2
    assert cfg.pipeline.sweep == (0.1, 0.3)
    assert cfg.regressor.hidden_layers == (32, 16)


@pytest.mark.parametrize("bad", [{"nosuch.key": 1}, {"dataset.nosuch": 1}, {"dataset.samples_per_class": "x"},
                                 {"pipeline.algo": "knn"}, {"dataset.samples_per_class": 1}])
def test_bad_overrides(bad):
    with pytest.raises(InvalidParams):
        ExperimentConfig().override(bad)


def test_parse_ini_and_assignments():
    text = "[pipeline]\nalgo = svm   ; inline comment\n[dataset]\nsamples_per_class = 7\n"
    assert parse_ini(text) == {"pipeline.algo": "svm", "dataset.samples_per_class": "7"}
    with pytest.raises(InvalidParams):
        parse_ini("no section header")
    assert parse_assignments(["a.b = 3"]) == {"a.b": "3"}
    with pytest.raises(InvalidParams):
        parse_assignments(["novalue"])


def test_load_order_file_then_overrides(tmp_path, monkeypatch):
    ini = tmp_path / "exp.ini"
    ini.write_text("[pipeline]\nalgo = svm\n[train]\ntrees_count = 9\n")
    monkeypatch.setenv(CONFIG_ENV, str(ini))
    cfg = load_config(overrides=["train.trees_count=4"])
    assert cfg.pipeline.algo == "svm" and cfg.train.trees_count == 4
    monkeypatch.delenv(CONFIG_ENV)
    assert load_config().pipeline.algo == "rf"
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "missing.ini")


def test_ini_and_dict_round_trip(tmp_path):
    cfg = ExperimentConfig().override({"dataset.samples_per_class": "33", "pipeline.sweep": "0.5"})
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
    ini = tmp_path / "c.ini"
    ini.write_text(cfg.to_ini())
    assert load_config(ini) == cfg
