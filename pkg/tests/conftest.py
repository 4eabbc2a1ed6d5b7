import numpy as np
import pytest

from linkfault.config import ExperimentConfig
from linkfault.topology import Link, Topology, reference_topology

ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(str(k).rstrip("ab")), str(k))):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def record():
    """Store one criterion's verdict for the end-of-run summary."""

    def _record(number, ok, detail):
        ACCEPTANCE[number] = (bool(ok), detail)
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")

    return _record


def make_topology(edges, n=None, capacity=300.0, length=50.0):
    n = n if n is not None else max(max(e) for e in edges) + 1
    return Topology(n, tuple(Link(u, v, capacity, length) for u, v in edges))


@pytest.fixture
def triangle():
    return make_topology([(0, 1), (1, 2), (0, 2)])


@pytest.fixture
def path3():
    return make_topology([(0, 1), (1, 2)])


@pytest.fixture(scope="session")
def desk():
    return reference_topology("desk10")


@pytest.fixture(scope="session")
def ref30():
    return reference_topology("ref30")


@pytest.fixture(scope="session")
def desk_run():
    """The default desk experiment, shared by the slow tests."""
    from linkfault.experiment import run

    return run(ExperimentConfig())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def desk_small(desk):
    """Stage-1 style desk dataset, 20 rows per class."""
    from linkfault.dataset import LabelSpace, generate_dataset
    from linkfault.flowsim import random_demands
    from linkfault.topology import FaultKind, enumerate_scenarios

    scen = enumerate_scenarios(desk, [FaultKind.NO_FAULT, FaultKind.DISCONNECTION])
    return generate_dataset(desk, scen, 20, random_demands(desk.V, 1), 11, label_space=LabelSpace.for_disconnections(desk))
