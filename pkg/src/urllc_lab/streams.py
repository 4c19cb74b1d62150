"""Reproducible counter-based random streams.

Every Monte Carlo routine in this package derives its randomness from
``substream(master_seed, *path)``, where ``path`` is a tuple of integers
identifying the consumer (trial batch, grid point, trace index, ...).
Streams for distinct paths are independent Philox counter-based generators,
so ensemble computations can be scheduled in any order, or in parallel,
without changing results.
"""

import hashlib

import numpy as np


def derive_key(master_seed: int, *path: int) -> np.ndarray:
    """Map (seed, path...) to a 128-bit Philox key, stable across runs."""
    raw = np.asarray([master_seed & 0xFFFFFFFFFFFFFFFF, *path], dtype=np.uint64)
    digest = hashlib.blake2b(raw.tobytes(), digest_size=16).digest()
    return np.frombuffer(digest, dtype=np.uint64)


def substream(master_seed: int, *path: int) -> np.random.Generator:
    """Independent generator for the given (seed, path...) coordinates."""
    return np.random.Generator(np.random.Philox(key=derive_key(master_seed, *path)))
