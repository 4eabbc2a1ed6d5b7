"""Regenerate the checked-in reference edge lists under src/linkfault/data/.

desk10  hand-drawn 10-node network; disconnecting 1-2 pushes the flows from
        node 1 to nodes 3 and 4 onto 1-8, replacing 1-2 by 1-9 moves them
        onto 9.
ref30   30 nodes / 36 links: ring of 21, 9 pendant nodes, 6 shortcuts.
ref60   60 nodes / 68 links: ring of 44, 16 pendant nodes, 8 shortcuts.

Capacities are uniform per topology, sized so that the busiest link sits
near 50% utilisation under the mean demand (150.5 Mbps per pair).

    python scripts/make_reference_topologies.py
"""

import math
from pathlib import Path

import numpy as np

from linkfault import _rng
from linkfault.flowsim import link_loads, shortest_paths
from linkfault.topology import LENGTH_RANGE, Link, Topology, canonical

OUT = Path(__file__).resolve().parents[1] / "src" / "linkfault" / "data"
SEED = 20190322

DESK_EDGES = [(0, 7), (0, 8), (1, 2), (1, 8), (2, 3), (3, 4), (3, 5), (4, 5),
              (5, 6), (5, 9), (6, 7), (6, 9), (7, 8)]


def ring_with_pendants(n_ring, n_pendant, n_chords, rng):
    edges = {canonical(i, (i + 1) % n_ring) for i in range(n_ring)}
    while len(edges) < n_ring + n_chords:
        u, v = (int(x) for x in rng.choice(n_ring, size=2, replace=False))
        if min((u - v) % n_ring, (v - u) % n_ring) > 2:
            edges.add(canonical(u, v))
    hosts = rng.choice(n_ring, size=n_pendant, replace=False)
    for i, h in enumerate(sorted(int(h) for h in hosts)):
        edges.add(canonical(h, n_ring + i))
    return sorted(edges)


def build(name, n, edges, rng):
    lengths = rng.uniform(*LENGTH_RANGE, size=len(edges))
    # round to the centimetre so the text file is exact
    lengths = np.round(lengths, 2)
    probe = Topology(n, tuple(Link(u, v, 1.0, float(ln)) for (u, v), ln in zip(edges, lengths)))
    mean_demand = np.full(n * (n - 1), 150.5)
    peak = link_loads(shortest_paths(probe), mean_demand).max()
    capacity = 1000.0 * math.ceil(peak / 0.5 / 1000.0)
    topo = Topology(n, tuple(Link(u, v, capacity, float(ln)) for (u, v), ln in zip(edges, lengths)), name=name)
    (OUT / f"{name}.edges").write_text(topo.to_edge_list(), encoding="utf-8")
    print(name, topo.summary(), "capacity", capacity, "bridges", len(topo.bridges()))


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    build("desk10", 10, DESK_EDGES, _rng.derive_rng(SEED, 10))
    build("ref30", 30, ring_with_pendants(21, 9, 6, _rng.derive_rng(SEED, 30)), _rng.derive_rng(SEED, 31))
    build("ref60", 60, ring_with_pendants(44, 16, 8, _rng.derive_rng(SEED, 60)), _rng.derive_rng(SEED, 61))


if __name__ == "__main__":
    main()
