"""Joint-life and last-survivor annuities for two exponential lifetimes.

The lifetimes ``T_x = -ln(1 - U1) / rate_x`` and ``T_y = -ln(1 - U2) / rate_y``
are coupled by the even-power mixture copula.  The Bernoulli selector is
integrated out draw by draw, so each ``(U, V)`` draw contributes

    (1 - mix) 1{U < e^{-rate_x t}, U2 > 1 - e^{-rate_y t}}
        + mix 1{U > 1 - e^{-rate_x t}, U2 > 1 - e^{-rate_y t}}

to the joint survival probability at time ``t``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError
from .mixture import MIXTURE_STREAM, Parity, second_coordinate
from .sim import Estimate, RngStream, StreamingMoments, map_shards, merge_all, uniform_block

__all__ = [
    "Status",
    "AnnuitySpec",
    "DEFAULT_INTEREST",
    "joint_survival",
    "survival",
    "annuity_pv",
    "annuity_sweep",
    "annuity_terms",
    "independent_joint_limit",
    "calibrate_rates",
]

DEFAULT_INTEREST = 0.045


class Status(enum.Enum):
    JOINT = "joint"
    LAST = "last"
    JOINT_INDEP = "joint-indep"
    LAST_INDEP = "last-indep"

    @property
    def independent(self) -> bool:
        return self in (Status.JOINT_INDEP, Status.LAST_INDEP)

    @property
    def joint(self) -> bool:
        return self in (Status.JOINT, Status.JOINT_INDEP)


@dataclass(frozen=True)
class AnnuitySpec:
    rate_x: float
    rate_y: float
    interest: float = DEFAULT_INTEREST
    term: int = 30
    mix: float = 0.5
    status: Status = Status.JOINT

    def __post_init__(self):
        for name in ("rate_x", "rate_y"):
            r = getattr(self, name)
            if not (r > 0 and math.isfinite(r)):
                raise DomainError(f"{name} must be positive, got {r}")
        if not self.interest > -1.0:
            raise DomainError(f"interest must exceed -1, got {self.interest}")
        if int(self.term) != self.term or self.term < 1:
            raise DomainError(f"term must be a positive integer, got {self.term}")
        object.__setattr__(self, "term", int(self.term))
        if not 0.0 <= self.mix <= 1.0:
            raise DomainError(f"mixing weight must lie in [0, 1], got {self.mix}")
        if isinstance(self.status, str):
            object.__setattr__(self, "status", Status(self.status.lower()))

    @property
    def discount(self) -> float:
        return 1.0 / (1.0 + self.interest)


def _joint_terms(spec: AnnuitySpec, u: np.ndarray, u2: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Per-draw joint survival, one column per time in ``t``."""
    sx = np.exp(-spec.rate_x * t)
    qy = -np.expm1(-spec.rate_y * t)
    uc, u2c = u[:, None], u2[:, None]
    alive_y = u2c > qy
    anti = (uc < sx) & alive_y
    como = (uc > 1.0 - sx) & alive_y
    return (1.0 - spec.mix) * anti + spec.mix * como


def _survival_terms(spec: AnnuitySpec, u, u2, t) -> np.ndarray:
    joint = _joint_terms(spec, u, u2, t)
    if spec.status.joint:
        return joint
    return np.exp(-spec.rate_x * t) + np.exp(-spec.rate_y * t) - joint


def _independent_survival(spec: AnnuitySpec, t):
    t = np.asarray(t, dtype=float)
    sx, sy = np.exp(-spec.rate_x * t), np.exp(-spec.rate_y * t)
    return sx * sy if spec.status.joint else sx + sy - sx * sy


def _check_n(n: int) -> int:
    if int(n) != n or n < 2:
        raise DomainError(f"Monte Carlo sample size must be at least 2, got {n}")
    return int(n)


def _mc_means(spec: AnnuitySpec, weights: np.ndarray, t: np.ndarray, n: int, seed: int,
              threads: int | None) -> list[Estimate]:
    """Means of ``survival(t) @ weights`` per column of the ``(len(t), m)`` weight matrix."""
    stream = RngStream(seed, MIXTURE_STREAM)

    def shard(start, count):
        block = uniform_block(stream, count, 3, start)
        u = block[:, 1]
        u2 = second_coordinate(u, block[:, 2], Parity.EVEN)
        values = _survival_terms(spec, u, u2, t) @ weights
        return [StreamingMoments.from_array(values[:, j], 2) for j in range(values.shape[1])]

    parts = map_shards(shard, n, threads)
    out = []
    for j in range(weights.shape[1]):
        m = merge_all((p[j] for p in parts), 2)
        out.append(Estimate(m.mean, m.stderr, n, seed))
    return out


def _mc_mean(spec, weights, t, n, seed, threads) -> Estimate:
    return _mc_means(spec, weights[:, None], t, n, seed, threads)[0]


def survival(spec: AnnuitySpec, t: float, n_mc: int = 1_000_000, seed: int = 42,
             threads: int | None = None) -> Estimate:
    """Survival probability of the status in ``spec`` at time ``t``."""
    if not t > 0:
        raise DomainError(f"time must be positive, got {t}")
    tt = np.array([float(t)])
    if spec.status.independent:
        return Estimate(float(_independent_survival(spec, tt)[0]), 0.0, 0, None)
    return _mc_mean(spec, np.ones(1), tt, _check_n(n_mc), seed, threads)


def joint_survival(spec: AnnuitySpec, t: float, n_mc: int = 1_000_000, seed: int = 42,
                   threads: int | None = None) -> Estimate:
    """Joint-life survival probability at time ``t`` (status of ``spec`` is ignored)."""
    status = Status.JOINT_INDEP if spec.status.independent else Status.JOINT
    return survival(replace(spec, status=status), t, n_mc, seed, threads)


def annuity_pv(spec: AnnuitySpec, n_mc: int = 1_000_000, seed: int = 42,
               threads: int | None = None) -> Estimate:
    """Present value of 1 paid at the end of each year ``1..term`` while the status survives."""
    k = np.arange(1, spec.term + 1, dtype=float)
    weights = spec.discount**k
    if spec.status.independent:
        return Estimate(math.fsum(weights * _independent_survival(spec, k)), 0.0, 0, None)
    return _mc_mean(spec, weights, k, _check_n(n_mc), seed, threads)


def annuity_terms(spec: AnnuitySpec, max_term: int, n_mc: int = 1_000_000, seed: int = 42,
                  threads: int | None = None) -> list[Estimate]:
    """PVs for every term ``1..max_term``, all from one batch of draws."""
    if int(max_term) != max_term or max_term < 1:
        raise DomainError(f"max_term must be a positive integer, got {max_term}")
    k = np.arange(1, int(max_term) + 1, dtype=float)
    disc = spec.discount**k
    if spec.status.independent:
        cum = np.cumsum(disc * _independent_survival(spec, k))
        return [Estimate(float(v), 0.0, 0, None) for v in cum]
    weights = np.triu(np.ones((k.size, k.size))) * disc[:, None]
    return _mc_means(spec, weights, k, _check_n(n_mc), seed, threads)


def annuity_sweep(spec: AnnuitySpec, lambdas, n_mc: int = 1_000_000, seed: int = 42,
                  threads: int | None = None) -> list[Estimate]:
    """PVs at several mixing weights on common draws."""
    return [annuity_pv(replace(spec, mix=float(lam)), n_mc, seed, threads) for lam in lambdas]


def independent_joint_limit(rate_x: float, rate_y: float, interest: float = DEFAULT_INTEREST) -> float:
    """Perpetual joint-life annuity for independent lives: ``r / (1 - r)``, ``r = v e^{-rate_x - rate_y}``."""
    r = math.exp(-rate_x - rate_y) / (1.0 + interest)
    if not r < 1.0:
        raise DomainError("the perpetual annuity diverges for this discount and mortality")
    return r / (1.0 - r)


def calibrate_rates(remaining_life_x: float, remaining_life_y: float) -> tuple[float, float]:
    """Constant forces of mortality matching the expected remaining lifetimes."""
    for v in (remaining_life_x, remaining_life_y):
        if not (v > 0 and math.isfinite(v)):
            raise DomainError(f"expected remaining lifetime must be positive, got {v}")
    return 1.0 / remaining_life_x, 1.0 / remaining_life_y
