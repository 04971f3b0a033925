"""Seed handling. Every random draw in the package starts from an explicit integer seed."""

import numpy as np

SeedLike = int | np.random.SeedSequence


def make_rng(seed, *keys: int) -> np.random.Generator:
    """Return an independent Philox stream for ``seed`` and an optional key path."""
    return np.random.Generator(np.random.Philox(_sequence(seed, keys)))


def derive_seed(seed, *keys: int) -> int:
    """Derive a child 64-bit integer seed from ``seed`` and a key path.

    Derivation is stateless: the same (seed, keys) always gives the same child.
    """
    return int(_sequence(seed, keys).generate_state(1, np.uint64)[0])


def _sequence(seed, keys) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        entropy = seed.entropy
        keys = tuple(seed.spawn_key) + tuple(keys)
    else:
        entropy = int(seed)
    if entropy < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    return np.random.SeedSequence(entropy, spawn_key=tuple(int(k) for k in keys))
