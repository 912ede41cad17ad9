"""Stable 64-bit hashing used for substructure identifiers.

Identifiers must be identical across runs, platforms and Python versions,
because Sort&Slice vocabularies are persisted to disk as lists of them.
Python's builtin ``hash`` is salted per process, so it is not usable here.

The function is FNV-1a (64-bit) over the little-endian two's-complement
encoding of each integer word (8 bytes per word), followed by the MurmurHash3
``fmix64`` finalizer. The finalizer matters: raw FNV-1a leaves the low bits of
the output depending only on the low bits of the input bytes, which would make
``id mod 2**k`` folding far more collision-prone than a uniform hash.
"""

from __future__ import annotations

import struct
from typing import Iterable, Sequence

MASK64 = (1 << 64) - 1

FNV_OFFSET_BASIS = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET_BASIS
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & MASK64
    return h


def fmix64(h: int) -> int:
    """MurmurHash3 64-bit avalanche finalizer."""
    h ^= h >> 33
    h = (h * 0xFF51AFD7ED558CCD) & MASK64
    h ^= h >> 33
    h = (h * 0xC4CEB9FE1A85EC53) & MASK64
    h ^= h >> 33
    return h


def hash_words(words: Sequence[int] | Iterable[int]) -> int:
    """Hash a sequence of integers to an unsigned 64-bit identifier.

    Negative values are encoded as 64-bit two's complement, so ``-1`` and
    ``2**64 - 1`` hash identically.
    """
    ws = [w & MASK64 for w in words]
    data = struct.pack(f"<{len(ws)}Q", *ws)
    return fmix64(fnv1a64(data))
