"""Deterministic RNG substreams derived from one master seed.

Every random decision in the toolkit draws from a stream obtained via
`substream(master, name, *indices)`. Streams depend only on the master
seed and the (name, indices) key, never on execution order or thread
count, so results are reproducible under any parallelism degree.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["substream", "spawn_seed"]


def _key_entropy(name: str, indices: tuple[int, ...]) -> list[int]:
    # crc32 keeps the key stable across processes (unlike hash())
    return [zlib.crc32(name.encode("utf-8")), *indices]


def spawn_seed(master: int, name: str, *indices: int) -> np.random.SeedSequence:
    """SeedSequence for the (name, indices) substream of `master`."""
    return np.random.SeedSequence([int(master), *_key_entropy(name, indices)])


def substream(master: int, name: str, *indices: int) -> np.random.Generator:
    """Independent Generator for the (name, indices) substream of `master`."""
    return np.random.Generator(np.random.PCG64(spawn_seed(master, name, *indices)))
