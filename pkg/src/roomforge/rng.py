"""Seedable random stream shared by the generator, sampler and constraint engine."""

from __future__ import annotations

import bisect
import math
from typing import Sequence

import numpy as np


class Rng:
    """Thin wrapper over :class:`numpy.random.Generator`.

    Streams are addressed by ``(seed, *stream)`` so independent workers can
    derive non-overlapping sequences without sharing state.
    """

    __slots__ = ("_gen", "seed", "stream")

    def __init__(self, seed: int, *stream: int) -> None:
        self.seed = int(seed)
        self.stream = tuple(int(s) for s in stream)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.stream)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def child(self, *stream: int) -> "Rng":
        return Rng(self.seed, *self.stream, *stream)

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def random(self) -> float:
        return float(self._gen.random())

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * float(self._gen.random())

    def normal(self, mean: float, sd: float) -> float:
        return float(self._gen.normal(mean, sd)) if sd > 0 else float(mean)

    def poisson(self, lam: float) -> int:
        return int(self._gen.poisson(lam))

    def integer(self, n: int) -> int:
        """Uniform integer in ``[0, n)``."""
        return int(self._gen.integers(n))

    def categorical(self, cdf: Sequence[float]) -> int:
        """Index drawn from a cumulative distribution (last entry ~ 1)."""
        u = float(self._gen.random()) * cdf[-1]
        i = bisect.bisect_right(cdf, u)
        return min(i, len(cdf) - 1)

    def choice(self, items: Sequence, probs: Sequence[float]):
        return items[self.categorical(cumulative(probs))]


def cumulative(probs: Sequence[float]) -> list[float]:
    out = []
    s = 0.0
    for p in probs:
        s += p
        out.append(s)
    return out


def stable_seed(*parts: object) -> int:
    """Deterministic 63-bit seed from arbitrary printable parts."""
    import hashlib

    h = hashlib.sha256("\x1f".join(map(str, parts)).encode()).digest()
    return int.from_bytes(h[:8], "big") & ((1 << 63) - 1)


def tv_distance(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def is_finite(x: float) -> bool:
    return not (math.isnan(x) or math.isinf(x))
