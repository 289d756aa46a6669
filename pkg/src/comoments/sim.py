"""Deterministic, splittable random numbers and mergeable estimators.

Uniform draws are addressed by ``(seed, stream_id, index)``.  The
underlying generator is counter-based (Philox4x64), so jumping to any
index costs O(1) and a sample of ``n`` draws is the same whatever the
number of worker threads that produced it.

Monte Carlo work is cut into shards of :data:`SHARD_SIZE` draws.  Shard
boundaries depend only on ``n``, and shard results are always combined in
shard order, which makes every estimate bit-identical across thread counts.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, TypeVar

import numpy as np

from .errors import DomainError, OrderMismatch

__all__ = [
    "SHARD_SIZE",
    "RngStream",
    "uniforms",
    "uniform_block",
    "shards",
    "map_shards",
    "default_threads",
    "StreamingMoments",
    "compensated_sum",
    "merge_moments",
    "merge_all",
    "Estimate",
    "RiskEstimate",
]

SHARD_SIZE = 1 << 16

_MASK64 = (1 << 64) - 1
_TWO_M53 = 2.0**-53
_RAWS_PER_BLOCK = 4

T = TypeVar("T")


@dataclass(frozen=True)
class RngStream:
    """An independent, indexable stream of uniforms."""

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if int(value) != value or not 0 <= value <= _MASK64:
                raise DomainError(f"{name} must be an unsigned 64-bit integer, got {value}")
            object.__setattr__(self, name, int(value))

    @property
    def key(self) -> int:
        return self.seed | (self.stream_id << 64)

    def substream(self, offset: int) -> RngStream:
        """Stream with a distinct id, for callers needing a fresh family."""
        return RngStream(self.seed, (self.stream_id + offset) & _MASK64)


def _raw(stream: RngStream, n: int, start: int) -> np.ndarray:
    block, skip = divmod(start, _RAWS_PER_BLOCK)
    bitgen = np.random.Philox(key=stream.key, counter=block)
    if skip:
        bitgen.random_raw(skip)
    return bitgen.random_raw(n)


def uniforms(stream: RngStream, n: int, start: int = 0) -> np.ndarray:
    """Draws ``start .. start+n-1`` of the stream, each in the open interval (0, 1).

    The 53 high bits of each 64-bit word are mapped to the midpoints
    ``(k + 1/2) 2^-53``, which never hit 0 or 1, so no rejection step is
    needed and draw ``i`` is a fixed function of the ``i``-th word.
    """
    if n < 0 or start < 0:
        raise DomainError("uniforms needs n >= 0 and start >= 0")
    raw = _raw(stream, int(n), int(start))
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53


def uniform_block(stream: RngStream, n: int, width: int, start: int = 0) -> np.ndarray:
    """``n`` rows of ``width`` interleaved uniforms, beginning at row ``start``."""
    return uniforms(stream, n * width, start * width).reshape(n, width)


def shards(n: int, size: int = SHARD_SIZE) -> list[tuple[int, int]]:
    """Fixed ``(start, count)`` partition of ``range(n)``."""
    if n < 0:
        raise DomainError("sample size must be nonnegative")
    return [(s, min(size, n - s)) for s in range(0, n, size)]


def default_threads() -> int:
    return max(1, os.cpu_count() or 1)


def map_shards(fn: Callable[[int, int], T], n: int, threads: int | None = None,
               size: int = SHARD_SIZE) -> list[T]:
    """Apply ``fn(start, count)`` to every shard; results come back in shard order."""
    parts = shards(n, size)
    threads = default_threads() if threads is None else int(threads)
    if threads < 1:
        raise DomainError("threads must be at least 1")
    if threads == 1 or len(parts) <= 1:
        return [fn(s, c) for s, c in parts]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda sc: fn(*sc), parts))


def compensated_sum(values) -> float:
    """Pairwise sum that carries every rounding error (TwoSum) to the end.

    The result is as accurate as summing in twice the working precision,
    and the operation order depends only on the length of the input.
    """
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        return 0.0
    errors = []
    while x.size > 1:
        if x.size % 2:
            x = np.append(x, 0.0)
        a, b = x[0::2], x[1::2]
        s = a + b
        bv = s - a
        errors.append((a - (s - bv)) + (b - bv))
        x = s
    if not errors:
        return float(x[0])
    return float(x[0] + np.sum(np.concatenate(errors)))


def _exact_sum(values: np.ndarray) -> Fraction:
    return Fraction(compensated_sum(values))


@dataclass(frozen=True)
class StreamingMoments:
    """Count and power sums ``sum x**k`` for ``k = 1..order``.

    Sums are held as exact rationals.  Each update adds the compensated
    shard sum (:func:`compensated_sum`), so merging is exactly associative
    and commutative and the derived statistics do not depend on how the
    data were split, only on the shard layout used when ingesting.
    """

    order: int
    count: int = 0
    sums: tuple[Fraction, ...] = field(default=())

    def __post_init__(self):
        if self.order < 1:
            raise DomainError("moment order must be at least 1")
        if not self.sums:
            object.__setattr__(self, "sums", (Fraction(0),) * self.order)
        elif len(self.sums) != self.order:
            raise OrderMismatch("power sums do not match the declared order")

    @classmethod
    def from_array(cls, x, order: int = 2) -> StreamingMoments:
        x = np.asarray(x, dtype=float).ravel()
        sums = []
        p = np.ones_like(x)
        for _ in range(order):
            p = p * x
            sums.append(_exact_sum(p))
        return cls(order, int(x.size), tuple(sums))

    def update(self, x) -> StreamingMoments:
        return merge_moments(self, StreamingMoments.from_array(x, self.order))

    def _mean_fraction(self) -> Fraction:
        if self.count == 0:
            raise DomainError("no observations")
        return self.sums[0] / self.count

    @property
    def mean(self) -> float:
        return float(self._mean_fraction())

    def central_moment(self, k: int) -> float:
        """Population central moment ``mean((x - xbar)**k)``."""
        if not 1 <= k <= self.order:
            raise OrderMismatch(f"central moment {k} needs order >= {k}")
        m = self._mean_fraction()
        n = self.count
        total = Fraction(0)
        for j in range(k + 1):
            raw = Fraction(n) if j == 0 else self.sums[j - 1]
            total += math.comb(k, j) * raw * (-m) ** (k - j)
        return float(total / n)

    @property
    def variance(self) -> float:
        """Unbiased sample variance."""
        if self.count < 2:
            return math.nan
        return self.central_moment(2) * self.count / (self.count - 1)

    @property
    def stderr(self) -> float:
        """Standard error of the sample mean."""
        if self.count < 2:
            return math.nan
        return math.sqrt(max(self.variance, 0.0) / self.count)


def merge_moments(a: StreamingMoments, b: StreamingMoments) -> StreamingMoments:
    if a.order != b.order:
        raise OrderMismatch(f"cannot merge orders {a.order} and {b.order}")
    return StreamingMoments(a.order, a.count + b.count,
                            tuple(x + y for x, y in zip(a.sums, b.sums)))


def merge_all(parts: Iterable[StreamingMoments], order: int) -> StreamingMoments:
    out = StreamingMoments(order)
    for part in parts:
        out = merge_moments(out, part)
    return out


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo point estimate with its standard error and provenance."""

    value: float
    stderr: float
    n: int
    seed: int | None = None
    p: float | None = None

    def __post_init__(self):
        if self.stderr < 0:
            raise DomainError("stderr must be nonnegative")
        if self.p is not None and not 0 < self.p < 1:
            raise DomainError("prudence level p must lie in (0, 1)")

    def as_dict(self) -> dict:
        out = {"value": self.value, "stderr": self.stderr, "n": self.n, "seed": self.seed}
        if self.p is not None:
            out["p"] = self.p
        return out


RiskEstimate = Estimate
