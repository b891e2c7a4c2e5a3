"""Named, independent random streams derived from one root seed.

A run fans a single seed out into streams keyed by purpose (initial duels,
oracle draws, policy randomness) and replicate index, so that e.g. all
policies see the same initial duels for a given replicate while keeping
their selection randomness independent.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key_to_int(key) -> int:
    if isinstance(key, (int, np.integer)):
        return int(key)
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    raise TypeError(f"stream key must be int or str, got {type(key).__name__}")


def substream(seed: int, *keys) -> np.random.Generator:
    """Generator for the stream identified by (seed, *keys).

    Deterministic across processes and runs; distinct key tuples give
    statistically independent streams.
    """
    spawn_key = tuple(_key_to_int(k) for k in keys)
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=spawn_key))
