"""Seedable, splittable random number generation.

All stochastic operations in the package take an explicit integer seed and
derive independent streams through :func:`rng_for`.  Streams are keyed by a
root seed plus a path of integers, so parallel workers get reproducible,
non-overlapping generators regardless of execution order.  Philox is used
because it is counter-based and cheap to split.
"""

from __future__ import annotations

import numpy as np

__all__ = ["rng_for", "spawn_seeds"]


def rng_for(seed: int, *path: int) -> np.random.Generator:
    """Return a Generator for the stream identified by ``(seed, *path)``."""
    ss = np.random.SeedSequence((int(seed),) + tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def spawn_seeds(seed: int, n: int, *path: int) -> list[int]:
    """Derive ``n`` child seeds from ``(seed, *path)``, for worker streams."""
    ss = np.random.SeedSequence((int(seed),) + tuple(int(p) for p in path))
    return [int(s.generate_state(1)[0]) for s in ss.spawn(n)]
