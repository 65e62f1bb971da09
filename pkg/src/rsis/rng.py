"""Splittable, reproducible random streams.

A stream is identified by a 64-bit seed.  Child streams are derived by
hashing ``(parent_seed, labels...)`` with BLAKE2b, so the same labels
always yield the same child regardless of how much the parent stream has
been consumed.  That property is what makes replay substreams
independent of the main sampling path.

Scalar draws go through :mod:`random` (Mersenne Twister, stable across
platforms); vectorized work can grab a NumPy generator seeded with the
same 64-bit seed via :meth:`RngStream.generator`.
"""

from __future__ import annotations

import hashlib
import random

import numpy as np

__all__ = ["RngStream"]

_MASK64 = (1 << 64) - 1


def _child_seed(seed: int, labels: tuple) -> int:
    h = hashlib.blake2b(digest_size=8)
    h.update(str(seed).encode())
    for lab in labels:
        h.update(b"/")
        h.update(str(lab).encode())
    return int.from_bytes(h.digest(), "little") & _MASK64


class RngStream:
    """Single-owner random stream with deterministic splitting."""

    __slots__ = ("seed", "_rand", "_np_gen")

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._rand = random.Random(self.seed)
        self._np_gen = None

    def split(self, *labels) -> "RngStream":
        """Derive an independent child stream keyed by ``labels``.

        Splitting depends only on (seed, labels), never on how many
        draws the parent has produced.
        """
        return RngStream(_child_seed(self.seed, labels))

    def random(self) -> float:
        """Uniform draw in [0, 1)."""
        return self._rand.random()

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self._rand.random()

    def normal(self, mean: float, std: float) -> float:
        return self._rand.gauss(mean, std)

    @property
    def generator(self) -> np.random.Generator:
        """NumPy generator seeded from this stream's seed (created lazily).

        Draws from it do not interleave with the scalar draws; use one or
        the other for a given stream.
        """
        if self._np_gen is None:
            self._np_gen = np.random.Generator(np.random.PCG64(self.seed))
        return self._np_gen

    def __repr__(self):
        return f"RngStream(seed={self.seed})"
