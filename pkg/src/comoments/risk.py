"""Value-at-risk, expected shortfall and marginal expected shortfall.

ES and MES are estimated from a simulated mixture sample as averages over
the ``k = floor(n (1 - p))`` draws with the largest aggregate loss
``S = L1 + L2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InsufficientSample
from .mixture import MixtureParams, sample_mixture
from .sim import Estimate, compensated_sum

__all__ = [
    "var_empirical",
    "tail_count",
    "TailRisk",
    "tail_risk",
    "es_mixture",
    "mes_mixture",
    "risk_sweep",
    "MIN_TAIL",
]

#: Smallest tail sample accepted by the mixture estimators.
MIN_TAIL = 1000


def _check_p(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise DomainError(f"prudence level must lie in (0, 1), got {p}")
    return float(p)


def var_empirical(losses, p: float) -> float:
    """The ``ceil(n p)``-th smallest loss, i.e. the empirical generalised inverse at ``p``."""
    p = _check_p(p)
    x = np.asarray(losses, dtype=float).ravel()
    n = x.size
    if n == 0 or n * (1.0 - p) < 1.0 - 1e-9:
        raise InsufficientSample(f"VaR at p={p} needs at least {math.ceil(1 / (1 - p))} losses, got {n}")
    k = max(1, math.ceil(n * p - 1e-9))
    return float(np.partition(x, k - 1)[k - 1])


def tail_count(n: int, p: float) -> int:
    return int(math.floor(n * (1.0 - p) + 1e-9))


def _tail_mean(x: np.ndarray) -> tuple[float, float]:
    k = x.size
    mean = compensated_sum(x) / k
    var = compensated_sum((x - mean) ** 2) / (k - 1) if k > 1 else 0.0
    return mean, math.sqrt(var / k)


@dataclass(frozen=True)
class TailRisk:
    es: Estimate
    mes: Estimate
    mes_other: Estimate
    var: float


def tail_risk(l1: np.ndarray, l2: np.ndarray, p: float, seed: int | None = None,
              min_tail: int = 1) -> TailRisk:
    """ES of ``l1 + l2`` and the contributions of both components to it."""
    p = _check_p(p)
    s = np.asarray(l1, dtype=float) + np.asarray(l2, dtype=float)
    n = s.size
    k = tail_count(n, p)
    if k < max(1, min_tail):
        raise InsufficientSample(f"tail sample of {k} draws is below the minimum {min_tail}; increase n")
    idx = np.argpartition(s, n - k)[n - k:]
    idx.sort()
    es = _tail_mean(s[idx])
    m1 = _tail_mean(np.asarray(l1, dtype=float)[idx])
    m2 = _tail_mean(np.asarray(l2, dtype=float)[idx])
    var = float(np.min(s[idx]))
    return TailRisk(Estimate(*es, n, seed, p), Estimate(*m1, n, seed, p),
                    Estimate(*m2, n, seed, p), var)


def _mixture_tail(params: MixtureParams, p: float, n: int, seed: int, threads: int | None) -> TailRisk:
    p = _check_p(p)
    if tail_count(n, p) < MIN_TAIL:
        raise InsufficientSample(f"n (1 - p) must be at least {MIN_TAIL}; got n={n}, p={p}")
    x = sample_mixture(params, n, seed, threads)
    return tail_risk(x[:, 2], x[:, 3], p, seed, MIN_TAIL)


def es_mixture(params: MixtureParams, p: float, n: int, seed: int, threads: int | None = None) -> Estimate:
    """Expected shortfall of ``L1 + L2`` under the mixture."""
    return _mixture_tail(params, p, n, seed, threads).es


def mes_mixture(params: MixtureParams, p: float, n: int, seed: int, threads: int | None = None) -> Estimate:
    """Marginal expected shortfall of ``L1`` within ``S = L1 + L2``."""
    return _mixture_tail(params, p, n, seed, threads).mes


def risk_sweep(params: MixtureParams, p: float, lambdas, n: int, seed: int,
               threads: int | None = None) -> list[TailRisk]:
    """Tail risk at each mixing weight, all from the same ``(U, V)`` draws."""
    return [_mixture_tail(params.with_mix(float(lam)), p, n, seed, threads) for lam in lambdas]
