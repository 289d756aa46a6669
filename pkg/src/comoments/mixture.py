"""Mixture copula between the minimising and maximising arrangements.

With probability ``mix`` the first coordinate is comonotone with ``U`` and
otherwise antimonotone.  The second coordinate is ``U`` itself (odd powers)
or the even-power extremal map of a standardised exponential.  Because both
extremal arrangements share ``U2``, every standardised mixed moment of the
resulting exponential pair is linear in ``mix``.

Each draw consumes three uniforms ``(W, U, V)``, with ``B = 1{W < mix}``.
The ``(U, V)`` sequence therefore does not depend on ``mix``, which gives
common random numbers across a sweep over ``mix``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .bounds import Method, centered_bounds
from .couplings import CouplingSpec, Direction
from .dependence import rank_constant
from .errors import DomainError, OutOfRange
from .marginals import Exponential
from .sim import Estimate, RngStream, compensated_sum, map_shards, uniform_block

__all__ = [
    "Parity",
    "MixtureParams",
    "MIXTURE_STREAM",
    "sample_mixture",
    "exponential_bounds",
    "moment_of_lambda",
    "lambda_for_moment",
    "subfactorial",
    "mixed_moment_sweep",
]

MIXTURE_STREAM = 2

# Maximising coupling for a standardised exponential second coordinate.
_EVEN_SPEC = CouplingSpec(Exponential(1.0, -1.0), 2, Direction.MAX)


class Parity(enum.Enum):
    EVEN = "even"
    ODD = "odd"

    @classmethod
    def of(cls, d: int) -> Parity:
        return cls.EVEN if d % 2 == 0 else cls.ODD


@dataclass(frozen=True)
class MixtureParams:
    rate1: float = 1.0
    rate2: float = 1.0
    mix: float = 0.5
    parity: Parity = Parity.EVEN

    width = 3
    stream_id = MIXTURE_STREAM

    def __post_init__(self):
        for name in ("rate1", "rate2"):
            r = getattr(self, name)
            if not (r > 0 and math.isfinite(r)):
                raise DomainError(f"{name} must be positive, got {r}")
        if not 0.0 <= self.mix <= 1.0:
            raise DomainError(f"mixing weight must lie in [0, 1], got {self.mix}")
        if isinstance(self.parity, str):
            object.__setattr__(self, "parity", Parity(self.parity.lower()))

    def with_mix(self, mix: float) -> MixtureParams:
        return MixtureParams(self.rate1, self.rate2, mix, self.parity)

    def map_uniforms(self, block: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        w, u, v = block[:, 0], block[:, 1], block[:, 2]
        u1 = np.where(w < self.mix, u, 1.0 - u)
        u2 = second_coordinate(u, v, self.parity)
        return u1, u2


def second_coordinate(u: np.ndarray, v: np.ndarray, parity: Parity) -> np.ndarray:
    if parity is Parity.ODD:
        return np.array(u, dtype=float, copy=True)
    return _EVEN_SPEC._u2(np.asarray(u, dtype=float), np.asarray(v, dtype=float))


def sample_mixture(params: MixtureParams, n: int, seed: int, threads: int | None = None) -> np.ndarray:
    """``(n, 4)`` array with columns ``u1, u2, l1, l2``."""
    if n < 1:
        raise DomainError("sample size must be at least 1")
    stream = RngStream(seed, MIXTURE_STREAM)

    def shard(start, count):
        u1, u2 = params.map_uniforms(uniform_block(stream, count, 3, start))
        l1 = -np.log1p(-u1) / params.rate1
        l2 = -np.log1p(-u2) / params.rate2
        return np.column_stack([u1, u2, l1, l2])

    return np.concatenate(map_shards(shard, n, threads))


@lru_cache(maxsize=None)
def exponential_bounds(d: int) -> tuple[float, float]:
    """``(lower, upper)`` standardised bounds for two exponential marginals."""
    r = centered_bounds(Exponential(1.0), Exponential(1.0), d, Method.QUAD)
    return r.lower, r.upper


def _check_parity(params: MixtureParams, d: int) -> int:
    if int(d) != d or d < 1:
        raise DomainError(f"d must be a positive integer, got {d}")
    if Parity.of(int(d)) is not params.parity:
        raise DomainError(f"d={d} does not match parity {params.parity.value}")
    return int(d)


def moment_of_lambda(params: MixtureParams, d: int) -> float:
    """Standardised mixed moment of order ``d`` under the mixture."""
    d = _check_parity(params, d)
    lo, hi = exponential_bounds(d)
    return lo + params.mix * (hi - lo)


def lambda_for_moment(params: MixtureParams, d: int, target: float) -> float:
    """Mixing weight at which the mixed moment of order ``d`` equals ``target``."""
    d = _check_parity(params, d)
    lo, hi = exponential_bounds(d)
    if not lo <= target <= hi:
        raise OutOfRange(f"target {target} outside the attainable range [{lo:.6g}, {hi:.6g}]")
    return (target - lo) / (hi - lo)


def subfactorial(k: int) -> int:
    """Number of derangements of ``k`` items; equals ``E[(E - 1)^k]`` for ``E ~ Expon(1)``."""
    out = 1
    for j in range(1, k + 1):
        out = j * out + (-1) ** j
    return out


def _h(u: np.ndarray) -> np.ndarray:
    return -np.log1p(-u) - 1.0


def mixed_moment_sweep(ds, lambdas, n: int, seed: int, threads: int | None = None,
                       kind: str = "moment") -> dict[int, list[Estimate]]:
    """Estimates of the mixed moment (``kind='moment'``) or of RS_d (``kind='rank'``)
    for every ``d`` in ``ds`` and every mixing weight, from one batch of draws.

    The Bernoulli selector is integrated out: with ``a`` the antimonotone and
    ``b`` the comonotone per-draw term, each draw contributes
    ``(1 - mix) a + mix b``.  For the moment the comonotone term uses the
    control variate ``h(U2)^(d+1)`` whose mean is known exactly.  Because the
    per-draw value is affine in ``mix``, one pass over the draws yields every
    weight and its standard error.
    """
    ds = [int(d) for d in ds]
    lambdas = [float(x) for x in lambdas]
    for lam in lambdas:
        if not 0.0 <= lam <= 1.0:
            raise DomainError(f"mixing weight must lie in [0, 1], got {lam}")
    if kind not in ("moment", "rank"):
        raise DomainError(f"unknown sweep kind {kind!r}")
    if n < 2:
        raise DomainError("need n >= 2")
    stream = RngStream(seed, MIXTURE_STREAM)

    def shard(start, count):
        block = uniform_block(stream, count, 3, start)
        u, v = block[:, 1], block[:, 2]
        u2 = {p: second_coordinate(u, v, p) for p in {Parity.of(d) for d in ds}}
        out = {}
        for d in ds:
            w = u2[Parity.of(d)]
            if kind == "moment":
                hw = _h(w) ** d
                a = _h(1.0 - u) * hw
                b = _h(u) * hw - (_h(w) * hw - subfactorial(d + 1))
            else:
                c = rank_constant(d)
                ww = (w - 0.5) ** d
                a = c * (0.5 - u) * ww
                b = c * (u - 0.5) * ww
            out[d] = tuple(Fraction(compensated_sum(x)) for x in (a, b, a * a, b * b, a * b))
        return out

    parts = map_shards(shard, n, threads)
    result: dict[int, list[Estimate]] = {}
    for d in ds:
        sa, sb, saa, sbb, sab = (sum((p[d][k] for p in parts), Fraction(0)) for k in range(5))
        ests = []
        for lam in lambdas:
            lf = Fraction(lam)
            s1 = (1 - lf) * sa + lf * sb
            s2 = (1 - lf) ** 2 * saa + lf**2 * sbb + 2 * lf * (1 - lf) * sab
            mean = s1 / n
            var = (s2 - n * mean * mean) / (n - 1)
            ests.append(Estimate(float(mean), math.sqrt(max(float(var), 0.0) / n), n, seed))
        result[d] = ests
    return result
