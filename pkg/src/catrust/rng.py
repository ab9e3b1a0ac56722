"""Seeded random stream shared by the Python and compiled simulation backends.

Both backends must consume exactly the same draws in the same order, so the
generator is a hand-rolled SplitMix64 rather than :mod:`random` or numpy:
the compiled core carries a bit-identical copy of every method below.
"""
from __future__ import annotations

import math

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB
_INV_2_53 = 1.0 / 9007199254740992.0
TWO_PI = 2.0 * math.pi


class SplitMix64:
    """Minimal 64-bit generator with the handful of draws the simulator needs."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * _MUL1) & _MASK
        z = ((z ^ (z >> 27)) * _MUL2) & _MASK
        return z ^ (z >> 31)

    def random(self) -> float:
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * _INV_2_53

    def uniform(self, a: float, b: float) -> float:
        return a + (b - a) * self.random()

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n); n must be positive."""
        k = int(self.random() * n)
        return k if k < n else n - 1

    def normal(self, mu: float, sigma: float) -> float:
        # Box-Muller, cosine branch only.
        u1 = 1.0 - self.random()
        u2 = self.random()
        z = math.sqrt(-2.0 * math.log(u1)) * math.cos(TWO_PI * u2)
        return mu + sigma * z

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample(self, items: list, k: int) -> list:
        """k distinct elements by partial Fisher-Yates; ``items`` is not modified."""
        pool = list(items)
        n = len(pool)
        for i in range(k):
            j = i + self.randbelow(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]
