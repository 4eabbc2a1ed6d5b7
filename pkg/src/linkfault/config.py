"""Experiment configuration: INI files with sections, plus command-line overrides.

Example::

    [topology]
    source = desk10        ; reference name, .edges / .graphml path, or "generate"

    [dataset]
    samples_per_class = 200

    [train]
    trees_count = 100

    [pipeline]
    algo = rf

Every key can be overridden with ``section.key=value`` strings (the CLI's
``--set`` flag). Unknown sections or keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .errors import InvalidParams
from .flowsim import SimConfig
from .learners.config import REGRESSOR_CONFIG, REGRESSOR_LAYERS, TrainConfig

CONFIG_ENV = "LINKFAULT_CONFIG"


@dataclass(frozen=True)
class TopologySource:
    source: str = "desk10"
    nodes: int = 10
    k: int = 4
    p: float = 0.1
    seed: int = 1


@dataclass(frozen=True)
class DatasetConfig:
    demand_seed: int = 1
    noise_seed: int = 11
    split_seed: int = 5
    scenario_seed: int = 3
    samples_per_class: int = 200
    reconnection_samples_per_class: int = 100
    reconnection_scenarios: int = 20  # 0 keeps every reconnection
    test_fraction: float = 0.2
    variance_to_retain: float = 0.99

    def __post_init__(self):
        if self.samples_per_class < 2 or self.reconnection_samples_per_class < 2:
            raise InvalidParams("need at least 2 samples per class to split")
        if self.reconnection_scenarios < 0:
            raise InvalidParams("reconnection_scenarios must be >= 0")
        if not 0 < self.variance_to_retain <= 1:
            raise InvalidParams("variance_to_retain must lie in (0, 1]")


@dataclass(frozen=True)
class PipelineSettings:
    algo: str = "rf"
    threshold: float = 0.10
    sweep: tuple = (0.02, 0.05, 0.10, 0.20, 0.40)

    def __post_init__(self):
        if self.algo not in ("rf", "mlp", "svm"):
            raise InvalidParams(f"algo must be rf, mlp or svm, not {self.algo!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    topology: TopologySource = field(default_factory=TopologySource)
    sim: SimConfig = field(default_factory=SimConfig)
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    regressor: TrainConfig = field(default_factory=lambda: REGRESSOR_CONFIG.with_(hidden_layers=REGRESSOR_LAYERS))
    pipeline: PipelineSettings = field(default_factory=PipelineSettings)

    SECTIONS = ("topology", "sim", "dataset", "train", "regressor", "pipeline")

    def to_dict(self):
        out = {}
        for name in self.SECTIONS:
            section = getattr(self, name)
            out[name] = {f.name: _plain(getattr(section, f.name)) for f in fields(section)}
        return out

    @classmethod
    def from_dict(cls, d):
        cfg = cls()
        return cfg.override({f"{s}.{k}": v for s, items in d.items() for k, v in items.items()})

    def override(self, assignments):
        """Apply ``{"section.key": value}`` updates; string values are parsed."""
        grouped = {}
        for dotted, value in assignments.items():
            section, _, key = dotted.partition(".")
            if section not in self.SECTIONS:
                raise InvalidParams(f"unknown config section {section!r}")
            grouped.setdefault(section, {})[key] = value
        cfg = self
        for section, items in grouped.items():
            current = getattr(cfg, section)
            kinds = {f.name: getattr(current, f.name) for f in fields(current)}
            changes = {}
            for key, value in items.items():
                if key not in kinds:
                    raise InvalidParams(f"unknown key {section}.{key}")
                changes[key] = _coerce(value, kinds[key], f"{section}.{key}")
            cfg = replace(cfg, **{section: replace(current, **changes)})
        return cfg

    def to_ini(self):
        lines = []
        for section, items in self.to_dict().items():
            lines.append(f"[{section}]")
            for k, v in items.items():
                v = ",".join(str(x) for x in v) if isinstance(v, list) else v
                lines.append(f"{k} = {v}")
            lines.append("")
        return "\n".join(lines)


def _plain(v):
    return list(v) if isinstance(v, tuple) else v


def _coerce(value, like, where):
    try:
        if isinstance(like, tuple):
            if isinstance(value, str):
                value = [x for x in value.replace(" ", "").split(",") if x]
            kind = type(like[0]) if like else float
            return tuple(kind(x) for x in value)
        if isinstance(like, bool):
            if isinstance(value, str):
                return value.strip().lower() in ("1", "true", "yes", "on")
            return bool(value)
        if isinstance(like, int):
            return int(value)
        if isinstance(like, float):
            return float(value)
        return str(value).strip()
    except (TypeError, ValueError):
        raise InvalidParams(f"{where}: cannot parse {value!r}") from None


def parse_ini(text):
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise InvalidParams(f"bad config file: {exc}") from None
    return {f"{s}.{k}": v for s in parser.sections() for k, v in parser.items(s)}


def parse_assignments(items):
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or "." not in key:
            raise InvalidParams(f"override {item!r} must look like section.key=value")
        out[key.strip()] = value.strip()
    return out


def load_config(path=None, overrides=()):
    """Defaults, then the INI file (``path`` or ``$LINKFAULT_CONFIG``), then overrides."""
    cfg = ExperimentConfig()
    path = path or os.environ.get(CONFIG_ENV)
    if path:
        p = Path(path)
        if not p.is_file():
            raise FileNotFoundError(f"config file not found: {p}")
        cfg = cfg.override(parse_ini(p.read_text(encoding="utf-8")))
    return cfg.override(parse_assignments(overrides))
