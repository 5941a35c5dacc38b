"""Deterministic, splittable random streams.

Backed by numpy's Philox counter-based bit generator. A child stream is
identified by its path of integer ids from the root seed, so
``Rng(7).split(3).split(1)`` is the same stream in every process.
"""
from __future__ import annotations

import numpy as np


class Rng:
    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        if seed < 0 or seed >= 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.path = tuple(int(p) for p in path)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.path)
        self._gen = np.random.Generator(np.random.Philox(ss))

    def split(self, child_id: int) -> "Rng":
        return Rng(self.seed, self.path + (child_id,))

    def uniform(self, low=0.0, high=1.0, size=None) -> np.ndarray:
        return self._gen.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None) -> np.ndarray:
        return self._gen.normal(loc, scale, size)

    def integers(self, low, high=None, size=None) -> np.ndarray:
        return self._gen.integers(low, high, size)

    def __repr__(self):
        return f"Rng(seed={self.seed}, path={self.path})"
