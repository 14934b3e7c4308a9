"""Named random streams derived from one root seed.

Each stream is keyed by a stage name plus integer indices, so any stage (or a
single optimiser run inside a stage) can be reproduced on its own.
"""

from __future__ import annotations

import zlib

import numpy as np


def _key(name: str, indices) -> tuple[int, ...]:
    return (zlib.crc32(name.encode("utf-8")),) + tuple(int(i) for i in indices)


def seed_sequence(root: int, name: str, *indices: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(root), spawn_key=_key(name, indices))


def stream(root: int, name: str, *indices: int) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(root, name, *indices))


def derive_seed(root: int, name: str, *indices: int) -> int:
    """A 63-bit integer seed for APIs that take plain integers."""
    state = seed_sequence(root, name, *indices).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 31) ^ int(state[1])
