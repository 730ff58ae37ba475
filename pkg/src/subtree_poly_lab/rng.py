"""Counter-based random streams.

Every stochastic operation in the package draws from a Philox generator
keyed by (seed, stream index): seed occupies the low 64 bits of the key,
the stream index the high 64 bits. Independent logical streams (one per
Monte Carlo sample, one per generated graph) therefore never share state,
and results do not depend on how samples are distributed over workers.

Bounded draws use mask rejection on raw 64-bit words, so ``randint`` is
exactly uniform, not approximately so via floats.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_BLOCK = 128


class RandomStream:
    """Buffered uniform draws from a single bit generator."""

    __slots__ = ("_gen", "_buf", "_pos")

    def __init__(self, generator: np.random.Generator):
        self._gen = generator
        self._buf: list[int] = []
        self._pos = 0

    def next_u64(self) -> int:
        if self._pos >= len(self._buf):
            self._buf = self._gen.integers(
                0, 1 << 64, size=_BLOCK, dtype=np.uint64
            ).tolist()
            self._pos = 0
        value = self._buf[self._pos]
        self._pos += 1
        return value

    def randint(self, n: int) -> int:
        """Exactly uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("randint bound must be positive")
        mask = (1 << (n - 1).bit_length()) - 1
        while True:
            r = self.next_u64() & mask
            if r < n:
                return r

    def uniform(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (2.0 ** -53)


# Domain tags keep operation families on disjoint streams even when the
# user reuses one seed for graph generation and Monte Carlo sampling.
DOMAIN_GRAPH = 0
DOMAIN_SAMPLE = 1


def stream(seed: int, index: int = 0, domain: int = DOMAIN_GRAPH) -> RandomStream:
    """Stream `index` of the family keyed by (seed, domain)."""
    if not 0 <= index < 1 << 56:
        raise ValueError("stream index out of range")
    high = (domain << 56) | index
    key = (seed & _MASK64) | ((high & _MASK64) << 64)
    return RandomStream(np.random.Generator(np.random.Philox(key=key)))
