"""Derive independent sub-seeds from one top-level seed.

``derive_seed(seed, "smote")`` runs one SplitMix64 step on
``seed XOR crc32(name)``.  The output depends only on the seed and the stream
name, so adding a new stream never shifts the others.
"""
from __future__ import annotations

import zlib

_MASK = (1 << 64) - 1


def splitmix64(state: int) -> int:
    z = (state + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(seed: int, stream: str) -> int:
    return splitmix64((int(seed) & _MASK) ^ zlib.crc32(stream.encode()))
