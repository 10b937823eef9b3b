"""
Seed handling

Every stochastic operation in eclab takes an explicit seed. These helpers turn
the accepted seed forms into numpy generators and derive independent,
counter-based child streams for parallel work.
"""

from typing import List, Sequence, Union

import numpy as np

SeedLike = Union[int, Sequence[int], np.random.SeedSequence, np.random.Generator]


def make_rng(seed: SeedLike) -> np.random.Generator:
    """
    Build a generator from a seed.

    Args:
        seed: Integer, integer sequence, SeedSequence or an existing Generator
            (returned unchanged)

    Returns:
        numpy Generator (PCG64)
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        raise ValueError("an explicit seed is required")
    return np.random.default_rng(seed)


def spawn_seeds(seed: SeedLike, count: int) -> List[np.random.SeedSequence]:
    """Derive `count` independent child seed sequences from `seed`."""
    if count < 0:
        raise ValueError(f"count must be non-negative, got {count}")
    if seed is None:
        raise ValueError("an explicit seed is required")
    if isinstance(seed, np.random.Generator):
        seed = int(seed.integers(2 ** 63))
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return root.spawn(count)


def keyed_seed(seed: int, *key: int) -> np.random.SeedSequence:
    """Seed for one grid point, independent of how grid points are scheduled."""
    return np.random.SeedSequence([int(seed), *[int(k) for k in key]])
