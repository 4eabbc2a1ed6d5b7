"""Network topologies and single-link fault mutations.

A :class:`Topology` is an immutable, connected, simple undirected graph on
nodes ``0..V-1``. Links carry a capacity (Mbps) and a physical length (m);
the one-way propagation delay follows from a fixed propagation speed.

Fault scenarios are values too: :func:`apply_fault` returns a new topology
and never touches its input.
"""

from __future__ import annotations

import hashlib
import math
import xml.etree.ElementTree as ET
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Sequence

from . import _rng
from .errors import (
    ConnectivityFailure,
    DisconnectsGraph,
    DuplicateLink,
    InvalidParams,
    MissingCoordinates,
    ParseError,
    UnknownLink,
    ValidationError,
)

PROPAGATION_SPEED = 2.0e8  # m/s
DEFAULT_CAPACITY = 10_000.0  # Mbps
DEFAULT_LENGTH = 60.0  # m
LENGTH_RANGE = (20.0, 100.0)  # m, gives prop delays in [0.1, 0.5] us
EARTH_RADIUS = 6_371_000.0  # m


def canonical(u, v):
    """Order an endpoint pair as ``(min, max)``."""
    u, v = int(u), int(v)
    return (u, v) if u <= v else (v, u)


@dataclass(frozen=True, order=True)
class Link:
    u: int
    v: int
    capacity: float = DEFAULT_CAPACITY
    length: float = DEFAULT_LENGTH

    def __post_init__(self):
        u, v = canonical(self.u, self.v)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "capacity", float(self.capacity))
        object.__setattr__(self, "length", float(self.length))
        if u == v:
            raise ValidationError(f"self-loop on node {u}")
        if u < 0:
            raise ValidationError(f"negative node id {u}")
        if not (self.capacity > 0 and math.isfinite(self.capacity)):
            raise ValidationError(f"link {u}-{v}: capacity must be positive, got {self.capacity}")
        if not (self.length > 0 and math.isfinite(self.length)):
            raise ValidationError(f"link {u}-{v}: length must be positive, got {self.length}")

    @property
    def endpoints(self):
        return (self.u, self.v)

    @property
    def prop_delay(self):
        """One-way propagation delay in microseconds."""
        return self.length / PROPAGATION_SPEED * 1e6

    def __str__(self):
        return f"{self.u}-{self.v}"


class FaultKind(str, Enum):
    NO_FAULT = "NoFault"
    DISCONNECTION = "Disconnection"
    RECONNECTION = "Reconnection"


@dataclass(frozen=True)
class FaultScenario:
    """Ground truth for one network state.

    ``removed`` and ``added`` are canonical endpoint pairs. A reconnection
    replaces ``removed`` by ``added``; the two share exactly one node, the
    *source* of the reconnection.
    """

    kind: FaultKind
    removed: tuple | None = None
    added: tuple | None = None

    def __post_init__(self):
        kind = FaultKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if self.removed is not None:
            object.__setattr__(self, "removed", canonical(*self.removed))
        if self.added is not None:
            object.__setattr__(self, "added", canonical(*self.added))
        if kind is FaultKind.NO_FAULT:
            if self.removed is not None or self.added is not None:
                raise ValidationError("NoFault scenario cannot name links")
        elif kind is FaultKind.DISCONNECTION:
            if self.removed is None or self.added is not None:
                raise ValidationError("Disconnection needs exactly a removed link")
        else:
            if self.removed is None or self.added is None:
                raise ValidationError("Reconnection needs a removed and an added link")
            if self.removed == self.added:
                raise ValidationError("Reconnection must add a different link")
            if len(set(self.removed) & set(self.added)) != 1:
                raise ValidationError(
                    f"Reconnection links {self.removed} and {self.added} must share one node"
                )

    @classmethod
    def no_fault(cls):
        return cls(FaultKind.NO_FAULT)

    @classmethod
    def disconnection(cls, link):
        return cls(FaultKind.DISCONNECTION, removed=_pair(link))

    @classmethod
    def reconnection(cls, removed, added):
        return cls(FaultKind.RECONNECTION, removed=_pair(removed), added=_pair(added))

    @property
    def source(self):
        if self.kind is not FaultKind.RECONNECTION:
            return None
        (s,) = set(self.removed) & set(self.added)
        return s

    def inverse(self):
        """Reconnection that undoes this one (swap removed and added)."""
        if self.kind is not FaultKind.RECONNECTION:
            raise ValidationError("only reconnections have a scenario inverse")
        return FaultScenario.reconnection(self.added, self.removed)

    def to_dict(self):
        return {
            "kind": self.kind.value,
            "removed": list(self.removed) if self.removed else None,
            "added": list(self.added) if self.added else None,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            FaultKind(d["kind"]),
            removed=tuple(d["removed"]) if d.get("removed") else None,
            added=tuple(d["added"]) if d.get("added") else None,
        )

    def __str__(self):
        if self.kind is FaultKind.NO_FAULT:
            return "NoFault"
        if self.kind is FaultKind.DISCONNECTION:
            return "Disconnection(%d-%d)" % self.removed
        return "Reconnection(%d-%d -> %d-%d)" % (self.removed + self.added)


def _pair(link):
    if isinstance(link, Link):
        return link.endpoints
    u, v = link
    return canonical(u, v)


@dataclass(frozen=True)
class Topology:
    n_nodes: int
    links: tuple
    name: str = field(default="", compare=False)

    def __post_init__(self):
        links = tuple(sorted(self.links, key=lambda l: l.endpoints))
        object.__setattr__(self, "links", links)
        if self.n_nodes < 2:
            raise ValidationError("a topology needs at least 2 nodes")
        seen = set()
        for link in links:
            if link.endpoints in seen:
                raise ValidationError(f"duplicate link {link}")
            seen.add(link.endpoints)
            if link.v >= self.n_nodes:
                raise ValidationError(f"link {link} references node outside 0..{self.n_nodes - 1}")
        if not _connected(self.n_nodes, [l.endpoints for l in links]):
            raise ValidationError("topology is not connected")

    @property
    def V(self):
        return self.n_nodes

    @property
    def E(self):
        return len(self.links)

    @cached_property
    def link_index(self):
        return {l.endpoints: i for i, l in enumerate(self.links)}

    @cached_property
    def neighbors(self):
        """Sorted neighbour tuples per node."""
        adj = [[] for _ in range(self.n_nodes)]
        for l in self.links:
            adj[l.u].append(l.v)
            adj[l.v].append(l.u)
        return tuple(tuple(sorted(a)) for a in adj)

    def has_link(self, u, v):
        return canonical(u, v) in self.link_index

    def link(self, u, v=None):
        key = _pair(u) if v is None else canonical(u, v)
        try:
            return self.links[self.link_index[key]]
        except KeyError:
            raise UnknownLink(f"no link {key[0]}-{key[1]}") from None

    def degrees(self):
        return [len(a) for a in self.neighbors]

    def bridges(self):
        """Endpoint pairs whose removal disconnects the graph (Tarjan low-link)."""
        n = self.n_nodes
        disc = [-1] * n
        low = [0] * n
        out = []
        timer = 0
        # iterative DFS; each stack frame is (node, parent, neighbour iterator)
        for root in range(n):
            if disc[root] != -1:
                continue
            disc[root] = low[root] = timer
            timer += 1
            stack = [(root, -1, iter(self.neighbors[root]))]
            while stack:
                node, parent, it = stack[-1]
                advanced = False
                for w in it:
                    if w == parent:
                        continue
                    if disc[w] == -1:
                        disc[w] = low[w] = timer
                        timer += 1
                        stack.append((w, node, iter(self.neighbors[w])))
                        advanced = True
                        break
                    low[node] = min(low[node], disc[w])
                if not advanced:
                    stack.pop()
                    if parent != -1:
                        low[parent] = min(low[parent], low[node])
                        if low[node] > disc[parent]:
                            out.append(canonical(parent, node))
        return sorted(out)

    def removable_links(self):
        """Links whose removal keeps the topology connected, in link order."""
        br = set(self.bridges())
        return [l for l in self.links if l.endpoints not in br]

    def without_link(self, u, v=None):
        key = _pair(u) if v is None else canonical(u, v)
        if key not in self.link_index:
            raise UnknownLink(f"no link {key[0]}-{key[1]}")
        rest = [l for l in self.links if l.endpoints != key]
        if not _connected(self.n_nodes, [l.endpoints for l in rest]):
            raise DisconnectsGraph(f"removing {key[0]}-{key[1]} disconnects the graph")
        return Topology(self.n_nodes, tuple(rest), name=self.name)

    def with_link(self, link):
        if link.endpoints in self.link_index:
            raise DuplicateLink(f"link {link} already present")
        if link.v >= self.n_nodes:
            raise ValidationError(f"link {link} references unknown node")
        return Topology(self.n_nodes, self.links + (link,), name=self.name)

    def to_edge_list(self):
        lines = [f"# {self.name or 'topology'}: V={self.V} E={self.E}"]
        lines += [f"{l.u} {l.v} {_num(l.capacity)} {_num(l.length)}" for l in self.links]
        return "\n".join(lines) + "\n"

    @cached_property
    def fingerprint(self):
        """Short hash of the canonical edge list (names and comments excluded)."""
        body = "\n".join(f"{l.u} {l.v} {l.capacity!r} {l.length!r}" for l in self.links)
        return hashlib.sha256(f"{self.n_nodes}\n{body}".encode()).hexdigest()[:16]

    def summary(self):
        hist = {}
        for d in self.degrees():
            hist[d] = hist.get(d, 0) + 1
        return {"V": self.V, "E": self.E, "degree_histogram": dict(sorted(hist.items()))}


def _num(x):
    # shortest repr that round-trips exactly
    return repr(float(x)).removesuffix(".0")


def _connected(n, edges):
    adj = [[] for _ in range(n)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    seen = [False] * n
    seen[0] = True
    queue = deque([0])
    count = 1
    while queue:
        x = queue.popleft()
        for w in adj[x]:
            if not seen[w]:
                seen[w] = True
                count += 1
                queue.append(w)
    return count == n


def generate_small_world(n, k, p, seed, capacity=DEFAULT_CAPACITY, length_range=LENGTH_RANGE, max_tries=32):
    """Ring lattice plus random shortcuts (Newman-Watts style).

    Each node links to its ``k`` nearest ring neighbours, then independently
    with probability ``p`` gains one extra edge to a uniformly chosen node it
    is not yet adjacent to. Link lengths are uniform in ``length_range``.
    """
    if not (isinstance(k, int) and k >= 2 and k % 2 == 0 and n > k):
        raise InvalidParams(f"need n > k >= 2 with k even, got n={n}, k={k}")
    if not 0.0 <= p <= 1.0:
        raise InvalidParams(f"p must lie in [0, 1], got {p}")

    for attempt in range(max_tries):
        rng = _rng.derive_rng(seed, _rng.SMALL_WORLD, attempt)
        adj = [set() for _ in range(n)]
        for i in range(n):
            for j in range(1, k // 2 + 1):
                w = (i + j) % n
                adj[i].add(w)
                adj[w].add(i)
        for i in range(n):
            if rng.random() < p:
                candidates = [w for w in range(n) if w != i and w not in adj[i]]
                if candidates:
                    w = candidates[int(rng.integers(len(candidates)))]
                    adj[i].add(w)
                    adj[w].add(i)
        edges = sorted({canonical(i, w) for i in range(n) for w in adj[i]})
        if not _connected(n, edges):
            continue
        lengths = rng.uniform(*length_range, size=len(edges))
        links = tuple(Link(u, v, capacity, float(ln)) for (u, v), ln in zip(edges, lengths))
        return Topology(n, links, name=f"smallworld-n{n}-k{k}-p{p:g}-s{seed}")
    raise ConnectivityFailure(f"no connected graph after {max_tries} attempts")


def load_edge_list(text, name=""):
    """Parse ``<u> <v> <capacity_mbps> <length_m>`` lines (``#`` comments)."""
    links = []
    seen = {}
    max_id = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ParseError(f"expected 4 fields, got {len(parts)}", line=lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
            cap, length = float(parts[2]), float(parts[3])
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
        if u == v:
            raise ValidationError(f"line {lineno}: self-loop on node {u}")
        key = canonical(u, v)
        if key in seen:
            raise ValidationError(f"line {lineno}: duplicate link {key[0]}-{key[1]} (first on line {seen[key]})")
        seen[key] = lineno
        try:
            links.append(Link(u, v, cap, length))
        except ValidationError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
        max_id = max(max_id, u, v)
    if not links:
        raise ParseError("no links found")
    used = {x for key in seen for x in key}
    missing = sorted(set(range(max_id + 1)) - used)
    if missing:
        raise ValidationError(f"node ids must be contiguous from 0; missing {missing[:5]}")
    return Topology(max_id + 1, tuple(links), name=name)


def read_edge_list(path):
    from pathlib import Path

    path = Path(path)
    return load_edge_list(path.read_text(encoding="utf-8"), name=path.stem)


def _haversine(lat1, lon1, lat2, lon2):
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dphi = phi2 - phi1
    dlmb = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS * math.asin(min(1.0, math.sqrt(a)))


def load_graphml(text, default_length=DEFAULT_LENGTH, default_capacity=DEFAULT_CAPACITY, strict_geo=False, name=""):
    """Read a GraphML document (e.g. an Internet Topology Zoo file).

    Nodes are numbered in document order. Link length is the great-circle
    distance between endpoints when both carry Latitude/Longitude data,
    otherwise ``default_length``. Parallel edges collapse to one link and
    self-loops are dropped, since the model is a simple graph.
    """
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise ParseError(f"malformed GraphML: {exc}") from None

    def local(tag):
        return tag.rsplit("}", 1)[-1]

    keys = {}
    for el in root.iter():
        if local(el.tag) == "key":
            attr = (el.get("attr.name") or "").lower()
            keys[el.get("id")] = attr
    graph = next((el for el in root.iter() if local(el.tag) == "graph"), None)
    if graph is None:
        raise ParseError("no <graph> element")

    index = {}
    coords = []
    for el in graph:
        if local(el.tag) != "node":
            continue
        nid = el.get("id")
        if nid is None or nid in index:
            raise ParseError(f"missing or repeated node id {nid!r}")
        index[nid] = len(index)
        data = {keys.get(d.get("key"), d.get("key")).lower(): (d.text or "").strip()
                for d in el if local(d.tag) == "data"}
        try:
            lat, lon = float(data["latitude"]), float(data["longitude"])
        except (KeyError, ValueError):
            lat = lon = None
        coords.append((lat, lon))
    if len(index) < 2:
        raise ParseError("GraphML needs at least two nodes")
    if strict_geo:
        bad = [nid for nid, i in index.items() if coords[i][0] is None]
        if bad:
            raise MissingCoordinates(f"nodes without coordinates: {bad[:5]}")

    links = {}
    for el in graph:
        if local(el.tag) != "edge":
            continue
        try:
            u, v = index[el.get("source")], index[el.get("target")]
        except KeyError:
            raise ParseError(f"edge references unknown node: {el.get('source')}->{el.get('target')}") from None
        if u == v:
            continue
        key = canonical(u, v)
        if key in links:
            continue
        data = {keys.get(d.get("key"), d.get("key")).lower(): (d.text or "").strip()
                for d in el if local(d.tag) == "data"}
        capacity = default_capacity
        if data.get("linkspeedraw"):
            try:
                capacity = float(data["linkspeedraw"]) / 1e6
            except ValueError:
                pass
        (la1, lo1), (la2, lo2) = coords[u], coords[v]
        if la1 is not None and la2 is not None:
            length = max(_haversine(la1, lo1, la2, lo2), 1.0)
        else:
            length = default_length
        links[key] = Link(u, v, capacity, length)
    return Topology(len(index), tuple(links.values()), name=name)


def apply_fault(topology, scenario):
    """Return ``topology`` with ``scenario`` applied.

    A reconnection's new link inherits capacity and length from the link it
    replaces.
    """
    if scenario.kind is FaultKind.NO_FAULT:
        return topology
    old = topology.link(scenario.removed)
    if scenario.kind is FaultKind.DISCONNECTION:
        return topology.without_link(old.endpoints)
    if topology.has_link(*scenario.added):
        raise DuplicateLink(f"link {scenario.added[0]}-{scenario.added[1]} already present")
    new = Link(*scenario.added, capacity=old.capacity, length=old.length)
    if new.v >= topology.n_nodes:
        raise UnknownLink(f"link {new} references unknown node")
    rest = [l for l in topology.links if l.endpoints != old.endpoints] + [new]
    if not _connected(topology.n_nodes, [l.endpoints for l in rest]):
        raise DisconnectsGraph(f"{scenario} disconnects the graph")
    return Topology(topology.n_nodes, tuple(rest), name=topology.name)


def _kinds(kinds):
    return [FaultKind(k) for k in kinds]


def enumerate_scenarios(topology, kinds: Iterable = tuple(FaultKind), seed=0, limit=None) -> list:
    """All applicable single-fault scenarios, in a fixed order.

    Order: NoFault, then disconnections by link order, then reconnections by
    (removed link, source endpoint, new neighbour). With ``limit`` the
    reconnections are thinned to a seeded random subset of that size, order
    preserved.
    """
    kinds = _kinds(kinds)
    out = []
    removable = topology.removable_links()
    if FaultKind.NO_FAULT in kinds:
        out.append(FaultScenario.no_fault())
    if FaultKind.DISCONNECTION in kinds:
        out += [FaultScenario.disconnection(l) for l in removable]
    if FaultKind.RECONNECTION in kinds:
        recs = []
        for l in removable:
            for src in l.endpoints:
                for w in range(topology.n_nodes):
                    if w == src or w in l.endpoints or topology.has_link(src, w):
                        continue
                    recs.append(FaultScenario.reconnection(l.endpoints, (src, w)))
        if limit is not None and limit < len(recs):
            rng = _rng.derive_rng(seed, _rng.SCENARIO_SUBSET)
            pick = sorted(rng.choice(len(recs), size=limit, replace=False).tolist())
            recs = [recs[i] for i in pick]
        out += recs
    return out


def reference_topology(name):
    """Load a checked-in reference topology: ``desk10``, ``ref30`` or ``ref60``."""
    from importlib import resources

    text = resources.files("linkfault").joinpath("data").joinpath(f"{name}.edges").read_text(encoding="utf-8")
    return load_edge_list(text, name=name)


REFERENCE_TOPOLOGIES: Sequence[str] = ("desk10", "ref30", "ref60")
