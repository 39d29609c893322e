"""Deterministic RNG spawning.

Every stochastic stage derives its generator from one root seed and a fixed
integer key path, so results are reproducible bit-for-bit no matter in which
order (or on how many workers) replicates are evaluated.
"""

from __future__ import annotations

import numpy as np

# Stage keys.  These are part of the on-disk reproducibility contract
# (critical-value files record the root seed); never renumber.
STAGE_MOMENTS = 1
STAGE_SUPS = 2
STAGE_DGP = 3
STAGE_STUDY = 4
STAGE_DEMO = 9


def spawn_rng(root_seed: int, *key: int) -> np.random.Generator:
    """Return a generator keyed by ``(root_seed, *key)``.

    Replicate ``b`` of stage ``s`` uses ``spawn_rng(seed, s, b)``; its stream
    depends only on those integers.
    """
    if root_seed < 0:
        raise ValueError("root seed must be a nonnegative integer")
    return np.random.default_rng(np.random.SeedSequence(root_seed, spawn_key=key))
