"""Seeded random streams.

All randomness in the package comes from Philox, a 64-bit counter-based bit
generator, keyed by ``numpy.random.SeedSequence``.  Independent streams are
split off by a spawn key (for example ``(group, sample_index)``), so results do
not depend on the order in which samples are drawn or on parallel scheduling.
"""

import numpy as np


def make_rng(seed, *key):
    """Return a Philox generator for ``seed`` and the sub-stream ``key``."""
    if isinstance(seed, np.random.Generator):
        if key:
            raise TypeError("a Generator cannot be re-keyed")
        return seed
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
