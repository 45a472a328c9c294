"""Seeded random streams.

Every stream derives from a root seed through ``numpy.random.SeedSequence``.
Repetition ``k`` of an experiment uses the child sequence with spawn key
``(k,)``, so reruns with the same root seed reproduce every repetition.
"""

from __future__ import annotations

import numpy as np

CHUNK = 1 << 15


def make_rng(seed: int, *spawn_key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in spawn_key))
    return np.random.Generator(np.random.PCG64(ss))


class DrawStream:
    """Chunked draws for the chain: particle index, direction and q.

    Draws are produced in fixed-size chunks, so the sequence does not depend
    on how callers slice it.
    """

    def __init__(self, rng: np.random.Generator, n: int, chunk: int = CHUNK):
        self.rng = rng
        self.n = n
        self.chunk = chunk
        self._refill()

    def _refill(self) -> None:
        self.idx = self.rng.integers(0, self.n, size=self.chunk, dtype=np.int64)
        self.dirs = self.rng.integers(0, 6, size=self.chunk, dtype=np.int64)
        self.qs = self.rng.random(self.chunk)
        self.pos = 0

    def next(self):
        if self.pos == self.chunk:
            self._refill()
        k = self.pos
        self.pos += 1
        return int(self.idx[k]), int(self.dirs[k]), float(self.qs[k])

    def take(self, count: int):
        """Up to ``count`` draws from the current chunk, as array views."""
        if self.pos == self.chunk:
            self._refill()
        k = self.pos
        m = min(count, self.chunk - k)
        self.pos += m
        return self.idx[k:k + m], self.dirs[k:k + m], self.qs[k:k + m]
