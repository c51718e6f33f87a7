"""Counter-based random streams.

Every random choice in the package is drawn from a Philox generator keyed by
``(seed, *keys)``, so a run is replayable from its seed and independent
sub-tasks get independent streams.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed) & MASK64, *(int(k) & MASK64 for k in keys)])
    return np.random.Generator(np.random.Philox(ss))


def child_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**63 - 1))
