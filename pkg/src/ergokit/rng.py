"""Counter-based random streams.

Every realization draws from its own Philox stream keyed by (seed, stream),
so ensemble members can be generated in any order or in parallel without
changing the numbers they receive.
"""
from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    key = np.array([int(seed) & _MASK, int(stream) & _MASK], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
