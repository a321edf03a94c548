"""Seeded, splittable random streams.

A stream is identified by ``(seed, domain, *ids)``; distinct keys give
statistically independent ``numpy`` generators (PCG64 seeded through
``SeedSequence`` spawn keys), so a tile's draws never depend on how many
workers produced the other tiles. Normal variates come from numpy's
ziggurat sampler, which is pinned by the generator's bit stream.
"""

import numpy as np

MOSAIC = 1
PROTOTYPES = 2
TRIALS = 3


def stream(seed, domain, *ids):
    """Independent generator for ``(seed, domain, *ids)``."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    key = (int(domain),) + tuple(int(i) for i in ids)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=key)))
