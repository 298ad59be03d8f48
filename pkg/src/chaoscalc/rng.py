"""Seeded random streams and chunked Monte Carlo reductions.

Every draw comes from a Philox (counter-based) bit generator keyed by
``(seed, call counter, chunk index)``. Chunk boundaries are fixed, so results
do not depend on how many worker threads are used.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, NamedTuple

import numpy as np

CHUNK = 1 << 16


def worker_count() -> int:
    """Worker cap from ``CHAOSCALC_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get("CHAOSCALC_THREADS", "0").strip() or "0"
    n = int(raw)
    if n <= 0:
        n = os.cpu_count() or 1
    return max(1, n)


class Rng:
    """Deterministic source of independent substreams.

    Each call to :meth:`generator` or :meth:`chunks` advances an internal
    counter, so consecutive operations see independent streams while a fresh
    ``Rng(seed)`` replays the same sequence.
    """

    def __init__(self, seed: int = 0):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.counter = 0

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, counter={self.counter})"

    def _next(self) -> int:
        c = self.counter
        self.counter += 1
        return c

    def _gen(self, call: int, chunk: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(call, chunk))
        return np.random.Generator(np.random.Philox(ss))

    def generator(self) -> np.random.Generator:
        return self._gen(self._next(), 0)

    def spawn(self) -> "Rng":
        """Child Rng whose seed is drawn from this stream."""
        return Rng(int(self.generator().integers(0, 2**63 - 1)))

    def gaussian(self, m: int, n: int) -> np.ndarray:
        """An (m, n) block of i.i.d. standard normals."""
        out = np.empty((m, n))
        for start, size, gen in self.chunks(m):
            out[start:start + size] = gen.standard_normal((size, n))
        return out

    def chunks(self, m: int, chunk: int = CHUNK) -> Iterator[tuple[int, int, np.random.Generator]]:
        call = self._next()
        for i, start in enumerate(range(0, m, chunk)):
            yield start, min(chunk, m - start), self._gen(call, i)


class MCEstimate(NamedTuple):
    mean: float
    stderr: float
    count: int

    def __float__(self) -> float:
        return self.mean

    def within(self, target: float, nsigma: float = 3.0) -> bool:
        # the small absolute floor covers quantities that are exactly constant
        return abs(self.mean - target) <= nsigma * self.stderr + 1e-9 * (1.0 + abs(target))


@dataclass
class Moments:
    """Running count/mean/M2 with an associative merge (Chan et al.)."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def of(cls, x: np.ndarray) -> "Moments":
        x = np.asarray(x, dtype=float).ravel()
        if x.size == 0:
            return cls()
        mu = float(x.mean())
        return cls(x.size, mu, float(((x - mu) ** 2).sum()))

    def merge(self, other: "Moments") -> "Moments":
        if other.count == 0:
            return Moments(self.count, self.mean, self.m2)
        if self.count == 0:
            return Moments(other.count, other.mean, other.m2)
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / n
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / n
        return Moments(n, mean, m2)

    def estimate(self) -> MCEstimate:
        if self.count < 2:
            return MCEstimate(self.mean, float("inf"), self.count)
        var = self.m2 / (self.count - 1)
        return MCEstimate(self.mean, float(np.sqrt(var / self.count)), self.count)


def mc_reduce(
    fn: Callable[[np.ndarray], np.ndarray],
    n: int,
    m: int,
    rng: Rng,
    chunk: int = CHUNK,
) -> MCEstimate:
    """Monte Carlo mean and standard error of ``fn`` over N(0, I_n) draws.

    ``fn`` maps an (size, n) block of samples to ``size`` values. Chunks are
    evaluated on up to :func:`worker_count` threads and merged in order.
    """
    if m < 1:
        raise ValueError("sample count must be >= 1")
    tasks = list(rng.chunks(m, chunk))

    def run(task):
        _, size, gen = task
        return Moments.of(fn(gen.standard_normal((size, n))))

    workers = min(worker_count(), len(tasks))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, tasks))
    else:
        parts = [run(t) for t in tasks]
    total = Moments()
    for p in parts:
        total = total.merge(p)
    return total.estimate()
