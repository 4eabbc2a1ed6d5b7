"""Passive link fault identification and localisation.

Submodules: ``topology`` (graphs, fault scenarios), ``flowsim`` (flow-level
measurements), ``dataset`` and ``preprocess`` (labelled data, PCA),
``learners`` (RF / MLP / SVM), ``pipeline`` (three-stage diagnosis),
``baseline`` (ping-based localisation), ``metrics`` and ``experiment``.
"""

from .flowsim import FeatureVector, SimConfig, measure, random_demands, shortest_paths
from .pipeline import Diagnosis, FaultType, PipelineConfig, diagnose
from .topology import (
    FaultKind,
    FaultScenario,
    Link,
    Topology,
    apply_fault,
    enumerate_scenarios,
    generate_small_world,
    load_edge_list,
    load_graphml,
    reference_topology,
)

__version__ = "0.1.0"

__all__ = [
    "Diagnosis", "FaultKind", "FaultScenario", "FaultType", "FeatureVector", "Link", "PipelineConfig",
    "SimConfig", "Topology", "apply_fault", "diagnose", "enumerate_scenarios", "generate_small_world",
    "load_edge_list", "load_graphml", "measure", "random_demands", "reference_topology", "shortest_paths",
]
