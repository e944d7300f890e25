"""Seeded random streams with labelled substreams.

Every stream is derived from a 64-bit seed plus a path of labels through
SHA-256, so ``Rng(7).fork("review-3").fork("run-1")`` is the same stream on
every platform and independent of how many other streams were created.
Integer draws use rejection sampling on ``getrandbits`` so the draw
algorithm is pinned here rather than inherited from :mod:`random`.
"""
from __future__ import annotations

import hashlib
import random
from typing import MutableSequence, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

MAX_SEED = 2**64 - 1


def _digest(seed: int, path: tuple[str, ...]) -> bytes:
    material = str(seed) + "".join("/" + p for p in path)
    return hashlib.sha256(material.encode("utf-8")).digest()


class Rng:
    def __init__(self, seed: int, _path: tuple[str, ...] = ()):
        if not 0 <= int(seed) <= MAX_SEED:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self.path = _path
        self._random = random.Random(int.from_bytes(_digest(self.seed, _path), "big"))

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, path={'/'.join(self.path) or '-'})"

    def fork(self, label) -> "Rng":
        return Rng(self.seed, self.path + (str(label),))

    def random(self) -> float:
        """Uniform in [0, 1) with 53 bits of precision."""
        return self._random.getrandbits(53) / 9007199254740992.0

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randbelow needs n >= 1")
        bits = n.bit_length()
        while True:
            r = self._random.getrandbits(bits)
            if r < n:
                return r

    def choice(self, seq: Sequence[T]) -> T:
        if not seq:
            raise IndexError("choice from empty sequence")
        return seq[self.randbelow(len(seq))]

    def sample(self, seq: Sequence[T], k: int) -> list[T]:
        """``k`` distinct elements, uniformly without replacement, in draw order."""
        pool = list(seq)
        if not 0 <= k <= len(pool):
            raise ValueError("sample size out of range")
        for i in range(k):
            j = i + self.randbelow(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def shuffle(self, seq: MutableSequence) -> None:
        for i in range(len(seq) - 1, 0, -1):
            j = self.randbelow(i + 1)
            seq[i], seq[j] = seq[j], seq[i]

    def numpy(self) -> np.random.Generator:
        """A numpy generator seeded from this stream's identity (not its state)."""
        words = np.frombuffer(_digest(self.seed, self.path + ("numpy",)), dtype="<u4")
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(words.tolist())))
