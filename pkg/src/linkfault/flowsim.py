"""Steady-state flow-level network model.

All ordered node pairs exchange an aggregate demand routed on a single
hop-count shortest path. From the resulting link loads we derive, per pair,

* the round-trip delay: per-link propagation plus an M/M/1-shaped queueing
  term ``q / (1 - min(util, cap))`` summed over the forward and reverse path;
* the loss ratio: steady congestion loss ``max(0, load - capacity) / load``
  per link, composed multiplicatively along the path, plus a transient
  reroute loss for pairs whose pre-fault path crossed the failed link.

Pairs are always enumerated in lexicographic ``(s, d)`` order with ``s != d``
and a feature vector is ``[rates..., delays..., losses...]``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import _rng
from .errors import DimensionMismatch, InvalidParams, Unreachable
from .topology import FaultKind, FaultScenario, Topology, apply_fault, canonical

RATE_RANGE = (1.0, 300.0)  # Mbps
MIN_DELAY = 1e-6  # us, floor applied after noise


@dataclass(frozen=True)
class SimConfig:
    queueing_base_delay: float = 10.0  # us per hop at zero load
    max_utilization_cap: float = 0.95
    reconvergence_time: float = 50.0  # ms
    measurement_interval: float = 1000.0  # ms
    noise_std_fraction: float = 0.02
    probe_overhead: float = 1.0  # us per ping

    def __post_init__(self):
        if not 0.0 < self.max_utilization_cap < 1.0:
            raise InvalidParams("max_utilization_cap must lie in (0, 1)")
        if self.reconvergence_time < 0 or self.measurement_interval <= 0:
            raise InvalidParams("reconvergence_time must be >= 0 and measurement_interval > 0")
        # zero is allowed for these so that pure-propagation cases can be expressed
        if self.queueing_base_delay < 0 or self.noise_std_fraction < 0 or self.probe_overhead < 0:
            raise InvalidParams("delays, overheads and noise must be non-negative")

    @property
    def transient_loss(self):
        return min(1.0, max(0.0, self.reconvergence_time / self.measurement_interval))

    def with_(self, **changes):
        return replace(self, **changes)


@lru_cache(maxsize=None)
def pair_list(n_nodes):
    """Canonical ordered pairs ``(s, d)``, ``s != d``, lexicographic."""
    return tuple((s, d) for s in range(n_nodes) for d in range(n_nodes) if s != d)


def pair_index(n_nodes, s, d):
    if s == d:
        raise ValueError("no pair index for s == d")
    return s * (n_nodes - 1) + (d if d < s else d - 1)


@lru_cache(maxsize=None)
def _reverse_index(n_nodes):
    return np.array([pair_index(n_nodes, d, s) for s, d in pair_list(n_nodes)], dtype=np.intp)


def feature_count(n_nodes):
    return 3 * n_nodes * (n_nodes - 1)


def random_demands(n_nodes, seed, rate_range=RATE_RANGE):
    """Uniform aggregate rates in ``rate_range`` Mbps for every ordered pair."""
    rng = _rng.derive_rng(seed, _rng.DEMANDS)
    rates = rng.uniform(*rate_range, size=(n_nodes, n_nodes))
    np.fill_diagonal(rates, 0.0)
    return rates


def _check_demands(demands, n_nodes):
    demands = np.asarray(demands, dtype=float)
    if demands.shape != (n_nodes, n_nodes):
        raise DimensionMismatch(f"demand matrix must be {n_nodes}x{n_nodes}, got {demands.shape}")
    if np.any(demands < 0) or np.any(np.diag(demands) != 0):
        raise InvalidParams("demands must be non-negative with a zero diagonal")
    return demands


def demand_vector(demands):
    """Flatten a V x V demand matrix into canonical pair order."""
    demands = np.asarray(demands, dtype=float)
    n = demands.shape[0]
    mask = ~np.eye(n, dtype=bool)
    return demands[mask]


@dataclass(frozen=True)
class PathTable:
    topology: Topology
    paths: tuple  # node sequences, canonical pair order
    incidence: np.ndarray = field(repr=False)  # (pairs, links) 0/1

    @property
    def n_nodes(self):
        return self.topology.n_nodes

    def path(self, s, d):
        return list(self.paths[pair_index(self.n_nodes, s, d)])

    def path_links(self, s, d):
        p = self.paths[pair_index(self.n_nodes, s, d)]
        return [canonical(a, b) for a, b in zip(p, p[1:])]

    @property
    def hops(self):
        return self.incidence.sum(axis=1)

    def pairs_using(self, link):
        """Boolean mask of pairs whose path crosses ``link`` (endpoint pair)."""
        key = canonical(*link)
        idx = self.topology.link_index.get(key)
        if idx is None:
            return np.zeros(len(self.paths), dtype=bool)
        return self.incidence[:, idx] > 0


def hop_distances(topology):
    """All-pairs hop counts by breadth-first search from every node."""
    n = topology.n_nodes
    nbrs = topology.neighbors
    dist = np.full((n, n), -1, dtype=np.int64)
    for src in range(n):
        row = dist[src]
        row[src] = 0
        queue = deque([src])
        while queue:
            x = queue.popleft()
            for w in nbrs[x]:
                if row[w] < 0:
                    row[w] = row[x] + 1
                    queue.append(w)
    return dist


def shortest_paths(topology):
    """Hop-minimal path for every ordered pair.

    Among equal-length paths the lexicographically smallest node sequence
    wins: walk from the source, always stepping to the smallest neighbour
    that is one hop closer to the destination.
    """
    n = topology.n_nodes
    dist = hop_distances(topology)
    if np.any(dist < 0):
        raise Unreachable("topology is not connected")
    # nxt[u, d]: smallest neighbour of u one hop closer to d
    nxt = np.full((n, n), -1, dtype=np.int64)
    for u, nb in enumerate(topology.neighbors):
        for w in nb:
            free = (nxt[u] < 0) & (dist[w] == dist[u] - 1)
            nxt[u, free] = w
    lidx = topology.link_index
    pairs = pair_list(n)
    inc = np.zeros((len(pairs), topology.E), dtype=float)
    seqs = {}
    # the greedy rule makes path(s, d) = s + path(nxt[s, d], d), so build by distance
    for s, d in sorted(pairs, key=lambda p: dist[p[0], p[1]]):
        i = pair_index(n, s, d)
        w = int(nxt[s, d])
        if w == d:
            seqs[s, d] = (s, d)
        else:
            seqs[s, d] = (s,) + seqs[w, d]
            inc[i] = inc[pair_index(n, w, d)]
        inc[i, lidx[canonical(s, w)]] = 1.0
    inc.setflags(write=False)
    return PathTable(topology, tuple(seqs[p] for p in pairs), inc)


def link_loads(paths, demands):
    """Per-link load in Mbps (sum over both directions).

    ``demands`` is a V x V matrix, a canonical-order rate vector, or a
    (samples, pairs) batch of rate vectors.
    """
    demands = np.asarray(demands, dtype=float)
    n = paths.n_nodes
    if demands.shape == (n, n):
        demands = demand_vector(_check_demands(demands, n))
    if demands.shape[-1] != len(paths.paths):
        raise DimensionMismatch(f"expected {len(paths.paths)} pair rates, got {demands.shape[-1]}")
    return demands @ paths.incidence


def _link_arrays(topology):
    cap = np.array([l.capacity for l in topology.links])
    prop = np.array([l.prop_delay for l in topology.links])
    return cap, prop


def link_delays(loads, topology, config):
    """One-way delay per link in microseconds."""
    cap, prop = _link_arrays(topology)
    util = np.minimum(np.asarray(loads, dtype=float) / cap, config.max_utilization_cap)
    return prop + config.queueing_base_delay / (1.0 - util)


def pair_delay(paths, loads, topology, config):
    """Round-trip delay per pair: forward path plus reverse path."""
    oneway = link_delays(loads, topology, config) @ paths.incidence.T
    return oneway + oneway[..., _reverse_index(paths.n_nodes)]


def pair_loss(paths, loads, topology, scenario, config, pre_fault_paths=None):
    """Loss ratio per pair.

    ``paths``/``loads`` describe the network after the fault; ``topology`` is
    the pre-fault network, used to find pairs that were crossing the removed
    link when it went down.
    """
    cap, _ = _link_arrays(paths.topology)
    loads = np.asarray(loads, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        link_loss = np.where(loads > cap, (loads - cap) / np.where(loads > 0, loads, 1.0), 0.0)
    survive = np.exp(np.log1p(-link_loss) @ paths.incidence.T)
    if scenario.kind is not FaultKind.NO_FAULT:
        if pre_fault_paths is None:
            pre_fault_paths = shortest_paths(topology)
        hit = pre_fault_paths.pairs_using(scenario.removed)
        survive = survive * np.where(hit, 1.0 - config.transient_loss, 1.0)
    return np.clip(1.0 - survive, 0.0, 1.0)


@dataclass(frozen=True)
class FeatureVector:
    rates: np.ndarray
    delays: np.ndarray
    losses: np.ndarray
    label: FaultScenario
    n_nodes: int

    @property
    def feature_count(self):
        return 3 * len(self.rates)

    @property
    def values(self):
        return np.concatenate([self.rates, self.delays, self.losses])

    @classmethod
    def from_values(cls, values, n_nodes, label=None):
        values = np.asarray(values, dtype=float)
        n = n_nodes * (n_nodes - 1)
        if values.shape != (3 * n,):
            raise DimensionMismatch(f"expected {3 * n} features for V={n_nodes}, got {values.shape}")
        return cls(values[:n], values[n:2 * n], values[2 * n:], label, n_nodes)


def split_blocks(values, n_nodes):
    """Split feature rows (..., 3N) into rate, delay and loss blocks."""
    values = np.asarray(values)
    n = n_nodes * (n_nodes - 1)
    if values.shape[-1] != 3 * n:
        raise DimensionMismatch(f"expected {3 * n} features for V={n_nodes}, got {values.shape[-1]}")
    return values[..., :n], values[..., n:2 * n], values[..., 2 * n:]


class Simulator:
    """Caches pre-fault routing for repeated measurements of one topology."""

    def __init__(self, topology, demands, config=SimConfig()):
        self.topology = topology
        self.demands = _check_demands(demands, topology.n_nodes)
        self.rates = demand_vector(self.demands)
        self.config = config
        self.base_paths = shortest_paths(topology)

    def clean(self, scenario):
        """Noiseless feature vector for ``scenario``."""
        faulted = apply_fault(self.topology, scenario)
        paths = self.base_paths if scenario.kind is FaultKind.NO_FAULT else shortest_paths(faulted)
        loads = link_loads(paths, self.rates)
        delays = pair_delay(paths, loads, faulted, self.config)
        losses = pair_loss(paths, loads, self.topology, scenario, self.config, pre_fault_paths=self.base_paths)
        return FeatureVector(self.rates.copy(), delays, losses, scenario, self.topology.n_nodes)

    def noisy(self, clean, rng):
        return add_noise(clean, self.config.noise_std_fraction, rng)


def add_noise(clean, sigma, rng):
    """Multiplicative Gaussian measurement noise, clamped to valid ranges."""
    if sigma == 0:
        return clean
    n = len(clean.rates)
    eps = rng.standard_normal(3 * n)
    v = clean.values * (1.0 + sigma * eps)
    rates = np.maximum(v[:n], 0.0)
    delays = np.maximum(v[n:2 * n], MIN_DELAY)
    losses = np.clip(v[2 * n:], 0.0, 1.0)
    return FeatureVector(rates, delays, losses, clean.label, clean.n_nodes)


def measure(topology, demands, scenario, config=SimConfig(), seed=0):
    """One measured data point for ``scenario`` with seeded noise."""
    sim = Simulator(topology, demands, config)
    return sim.noisy(sim.clean(scenario), _rng.derive_rng(seed, _rng.NOISE))


def probe_rtts(topology, config=SimConfig(), demands=None, monitor=0, paths=None):
    """RTT from ``monitor`` to every node (0 for the monitor itself).

    A ping's RTT is twice the one-way delay of the monitor->node path at the
    current link loads (zero load when ``demands`` is None).
    """
    n = topology.n_nodes
    if paths is None:
        paths = shortest_paths(topology)
    if demands is None:
        loads = np.zeros(topology.E)
    else:
        loads = link_loads(paths, demands)
    oneway = link_delays(loads, topology, config) @ paths.incidence.T
    rtt = np.zeros(n)
    for d in range(n):
        if d != monitor:
            rtt[d] = 2.0 * oneway[pair_index(n, monitor, d)]
    return rtt


def simulate_probe_sweep(topology, config=SimConfig(), demands=None, monitor=0):
    """Wall time (us) for ``monitor`` to ping every other node in turn."""
    rtt = probe_rtts(topology, config, demands, monitor)
    return float(rtt.sum() + config.probe_overhead * (topology.n_nodes - 1))
