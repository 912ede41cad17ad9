"""Portable seeded random numbers.

Everything that samples indices (training subsets, BO initial designs,
molecule pairs) goes through :class:`SplitMix64` so sampled index sets depend
only on the seed, never on the numpy version or platform.

Algorithm (reference for other implementations):

* state is an unsigned 64-bit integer initialised to ``seed mod 2**64``;
* ``next_u64``: ``state += 0x9E3779B97F4A7C15``; ``z = state``;
  ``z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9``;
  ``z = (z ^ (z >> 27)) * 0x94D049BB133111EB``; return ``z ^ (z >> 31)``
  (all arithmetic mod 2**64);
* ``below(n)``: rejection sampling. ``limit = 2**64 - (2**64 mod n)``; draw
  ``x = next_u64()`` until ``x < limit``; return ``x mod n``;
* ``sample(population, k)``: partial Fisher-Yates. For ``i`` in ``0..k-1``:
  ``j = i + below(len - i)``; swap positions ``i`` and ``j``; the output is
  the first ``k`` entries in that order.
"""

from __future__ import annotations

from typing import Sequence, TypeVar

T = TypeVar("T")

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, seed: int) -> None:
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)``."""
        if n <= 0:
            raise ValueError(f"upper bound must be positive, got {n}")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def sample(self, population: Sequence[T], k: int) -> list[T]:
        """``k`` items without replacement, in draw order."""
        pool = list(population)
        if not 0 <= k <= len(pool):
            raise ValueError(f"cannot sample {k} items from {len(pool)}")
        for i in range(k):
            j = i + self.below(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]


def derive_seeds(master_seed: int, count: int) -> list[int]:
    """Per-trial seeds: the first ``count`` outputs of SplitMix64(master).

    Trial ``k`` always receives the same seed regardless of how many trials
    are requested.
    """
    gen = SplitMix64(master_seed)
    return [gen.next_u64() for _ in range(count)]
