"""How long does it take to find a broken link by pinging everything?

The baseline sends one ping from a monitor node to each other node in turn,
then matches the round-trip times against the signature every candidate
failure would produce. Its cost grows with the network because there are
more nodes to ping and longer paths to wait on.

    python demos/03_ping_baseline.py
"""

from linkfault import FaultScenario, SimConfig, apply_fault, random_demands, reference_topology
from linkfault.baseline import candidate_signatures, probe_and_localize

for name in ("desk10", "ref30", "ref60"):
    topo = reference_topology(name)
    demands = random_demands(topo.V, 1)
    signatures = candidate_signatures(topo, SimConfig(), demands)
    links = topo.removable_links()
    hits, probe, analysis = 0, 0.0, 0.0
    for trial, link in enumerate(links):
        broken = apply_fault(topo, FaultScenario.disconnection(link))
        guess, report = probe_and_localize(broken, topo, SimConfig(), demands, seed=7,
                                           signatures=signatures, trial=trial)
        hits += guess == link.endpoints
        probe += report.probe_time
        analysis += report.analysis_time
    n = len(links)
    print(f"{name:<7} V={topo.V:<3} candidates={n:<3} accuracy={hits / n:.3f} "
          f"mean probe time={probe / n:9.1f} us  mean analysis time={analysis / n:9.1f} us")
