"""Deterministic child-seed derivation.

Every stochastic unit of work (bootstrap replicate, CV shuffle, probe
permutation) gets its own SeedSequence keyed by integer tags, so results
are a pure function of (seed, tags) and never depend on execution order
or worker count.
"""

import numpy as np

# Namespace tags for independent random streams.
TAG_SYNTH = 1
TAG_FOLDS = 2
TAG_ENSEMBLE = 3
TAG_PROBES = 4
TAG_SELECTOR_CV = 5
TAG_RIDGE = 6
TAG_INDIVIDUAL = 7


def child_rng(seed: int, *tags: int) -> np.random.Generator:
    """Generator for the stream identified by (seed, *tags)."""
    return np.random.default_rng(np.random.SeedSequence((int(seed),) + tuple(int(t) for t in tags)))
