"""Standardised rank coefficients and centered mixed-moment estimators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .couplings import Coupling
from .errors import DegenerateSample, DomainError
from .sim import Estimate, RngStream, StreamingMoments, map_shards, merge_all, uniform_block

__all__ = [
    "PairedSample",
    "rank_constant",
    "rank_coefficient",
    "rank_coefficient_model",
    "centered_moment",
]


@dataclass(frozen=True, eq=False)
class PairedSample:
    """Two equally long columns of finite observations."""

    x1: np.ndarray
    x2: np.ndarray

    def __post_init__(self):
        x1 = np.asarray(self.x1, dtype=float).ravel()
        x2 = np.asarray(self.x2, dtype=float).ravel()
        if x1.shape != x2.shape:
            raise DomainError("paired columns differ in length")
        if x1.size < 2:
            raise DomainError("a paired sample needs at least 2 rows")
        if not (np.all(np.isfinite(x1)) and np.all(np.isfinite(x2))):
            raise DomainError("paired sample contains non-finite values")
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "x2", x2)

    @classmethod
    def from_rows(cls, rows) -> PairedSample:
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != 2:
            raise DomainError("expected an (n, 2) array of rows")
        return cls(rows[:, 0], rows[:, 1])

    @property
    def n(self) -> int:
        return int(self.x1.size)


def rank_constant(d: int) -> float:
    """Normalising constant that maps the extremal value of the rank moment to 1."""
    if int(d) != d or d < 1:
        raise DomainError(f"d must be a positive integer, got {d}")
    d = int(d)
    if d % 2 == 0:
        return 2.0 ** (d + 1) * (d + 1) * (d + 2) / d
    return 2.0 ** (d + 1) * (d + 2)


def rank_coefficient(sample: PairedSample, d: int) -> float:
    """Plug-in estimate of RS_d using mid-ranks scaled by ``1/(n+1)``.

    For ``d = 1`` on tie-free data this equals Spearman's rho times
    ``(n-1)/(n+1)``; the factor is the finite-sample rank bias and tends to 1.
    """
    c = rank_constant(d)
    for col in (sample.x1, sample.x2):
        if np.all(col == col[0]):
            raise DegenerateSample("rank coefficient of a constant column is undefined")
    n = sample.n
    g1 = rankdata(sample.x1) / (n + 1) - 0.5
    g2 = rankdata(sample.x2) / (n + 1) - 0.5
    return float(c * np.mean(g1 * g2**d))


def rank_coefficient_model(coupling: Coupling, d: int, n: int, seed: int,
                           threads: int | None = None) -> Estimate:
    """Monte Carlo RS_d of a coupling, using its exact uniforms instead of ranks."""
    c = rank_constant(d)
    if n < 2:
        raise DomainError("need n >= 2")
    stream = RngStream(seed, coupling.stream_id)

    def shard(start, count):
        u1, u2 = coupling.map_uniforms(uniform_block(stream, count, coupling.width, start))
        return StreamingMoments.from_array(c * (u1 - 0.5) * (u2 - 0.5) ** d, 2)

    m = merge_all(map_shards(shard, n, threads), 2)
    return Estimate(m.mean, m.stderr, n, seed)


def centered_moment(sample: PairedSample, d: int) -> float:
    """``mean(z1 * z2**d)`` with columns standardised by sample mean and population std."""
    if int(d) != d or d < 1:
        raise DomainError(f"d must be a positive integer, got {d}")
    if sample.n < 3:
        raise DomainError("centered moments need at least 3 rows")
    z = []
    for col in (sample.x1, sample.x2):
        centered = col - col.mean()
        sd = np.sqrt(np.mean(centered * centered))
        if not sd > 0:
            raise DegenerateSample("centered moment of a constant column is undefined")
        z.append(centered / sd)
    return float(np.mean(z[0] * z[1] ** int(d)))
