"""Seeded, platform-independent pseudorandom streams.

Every random choice in the sampler and the counter goes through
:class:`SplitMix64` so that a run replays bit-for-bit from its seed on any
platform and Python/numpy version. The generator is Steele, Lea and Flood's
SplitMix64; bounded draws use rejection to avoid modulo bias.

Changing anything here changes every sampled output, so bump
``RNG_VERSION`` when you do.
"""
from __future__ import annotations

RNG_VERSION = "splitmix64-v1"

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def _finalize(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix(value: int) -> int:
    """First SplitMix64 output for state ``value``; nonzero-safe for value 0."""
    return _finalize((value + GOLDEN) & MASK64)


def derive_seed(seed: int, index: int) -> int:
    """Sub-seed for the ``index``-th independent run: ``seed XOR mix(index)``."""
    return (seed & MASK64) ^ mix(index)


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, seed: int = 0):
        self.state = seed & MASK64

    def next64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        return _finalize(self.state)

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)``."""
        if n <= 0:
            raise ValueError("n must be positive")
        if n == 1:
            return 0
        threshold = (1 << 64) % n
        while True:
            r = self.next64()
            if r >= threshold:
                return r % n

    def random(self) -> float:
        """Uniform float in ``[0, 1)`` with 53 random bits."""
        return (self.next64() >> 11) * (1.0 / (1 << 53))

    def choose(self, items, j: int) -> list:
        """``j`` distinct items, uniformly without replacement (partial Fisher-Yates).

        Returned in selection order; ``items`` itself is not modified.
        """
        pool = list(items)
        n = len(pool)
        if j > n:
            raise ValueError("cannot choose more items than available")
        for t in range(j):
            r = t + self.below(n - t)
            pool[t], pool[r] = pool[r], pool[t]
        return pool[:j]
