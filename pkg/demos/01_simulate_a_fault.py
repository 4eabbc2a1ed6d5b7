"""Walk through what a single link failure does to passive measurements.

We take the bundled 10-node desk network, cut link 1-2, and watch which
node pairs get rerouted, how their delays change and where packet loss
appears. Then we replace the cut link by 1-9 (a reconnection) and see that
the same flows settle on a different detour.

    python demos/01_simulate_a_fault.py
"""

import numpy as np

from linkfault import FaultScenario, SimConfig, apply_fault, measure, random_demands, reference_topology
from linkfault.flowsim import pair_index, shortest_paths

desk = reference_topology("desk10")
print(f"desk10: {desk.V} nodes, {desk.E} links, fingerprint {desk.fingerprint}")
print("links that can fail without splitting the network:", len(desk.removable_links()))

# Every ordered pair sends a fixed amount of traffic; the seed pins it down.
demands = random_demands(desk.V, seed=1)
quiet = SimConfig(noise_std_fraction=0.0)

cut = FaultScenario.disconnection((1, 2))
swap = FaultScenario.reconnection((1, 2), (1, 9))

before = measure(desk, demands, FaultScenario.no_fault(), quiet)
after_cut = measure(desk, demands, cut, quiet)
after_swap = measure(desk, demands, swap, quiet)

print("\nRoutes from node 1 before and after the cut:")
for name, topo in (("intact", desk), ("1-2 cut", apply_fault(desk, cut)), ("1-2 -> 1-9", apply_fault(desk, swap))):
    paths = shortest_paths(topo)
    print(f"  {name:<11} 1->3 {paths.path(1, 3)}   1->4 {paths.path(1, 4)}")

print("\nRound-trip delay (us) and loss for a few pairs:")
print(f"  {'pair':<7}{'intact':>10}{'cut':>10}{'swap':>10}{'loss(cut)':>12}")
for s, d in [(1, 3), (1, 4), (1, 8), (0, 5)]:
    i = pair_index(desk.V, s, d)
    print(f"  {s}->{d:<4}{before.delays[i]:>10.2f}{after_cut.delays[i]:>10.2f}"
          f"{after_swap.delays[i]:>10.2f}{after_cut.losses[i]:>12.3f}")

# Flows that had to move lose packets while routing reconverges; the rest do not.
hit = np.flatnonzero(after_cut.losses > 0)
print(f"\n{len(hit)} of {len(after_cut.losses)} ordered pairs see loss after the cut")

# Real measurements are noisy. Each seed gives a different, reproducible draw.
noisy = [measure(desk, demands, cut, SimConfig(), seed=s).delays[pair_index(desk.V, 1, 3)] for s in range(5)]
print("five noisy readings of the 1->3 delay:", np.round(noisy, 2))
