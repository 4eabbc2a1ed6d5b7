"""Counter-based seed derivation.

Every random draw in the package goes through :func:`derive_rng` so that a
stream is addressed by ``(seed, stream, index...)`` rather than by how many
draws happened before it. Scenario ``i`` can therefore be regenerated without
replaying scenarios ``0..i-1``.
"""

import numpy as np

# stream identifiers; values are part of the on-disk reproducibility contract
SMALL_WORLD = 1
DEMANDS = 2
NOISE = 3
BOOTSTRAP = 4
TRAINING = 5
SPLIT = 6
SCENARIO_SUBSET = 7
PROBE = 8


def derive_rng(seed, *keys):
    """Return a Generator for the sub-stream ``keys`` of ``seed``."""
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in keys))
    return np.random.default_rng(ss)
