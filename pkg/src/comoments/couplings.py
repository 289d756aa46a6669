"""Extremal dependence structures for the mixed moment E(X1 * X2**d).

Given the law of ``X2`` and the power ``d``, the coupling that maximises
(minimises) the mixed moment pairs ``X1`` comonotonically (antimonotonically)
with ``X2**d``.  For odd ``d``, or when ``X2`` keeps one sign, this is a plain
comonotone or antimonotone pair.  For even ``d`` with ``X2`` taking both signs,
``X2**d`` is not monotone in ``X2``, and ``U2 = F2(X2)`` has to be recovered
from ``U = G2(X2**d)`` by picking one of two inverse branches at random.

With ``g(x) = x - F2(-F2^{-1}(x))`` and ``f = -g``, a level ``u`` below the
threshold has two preimages, ``g^{-1}(u)`` (positive ``X2``) and
``f^{-1}(u)`` (negative ``X2``).  The negative branch is picked with
probability

    p(u) = |g'(g^{-1}(u))| / (|g'(f^{-1}(u))| + |g'(g^{-1}(u))|),

which is the density ratio that keeps ``U2`` uniform.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Protocol

import numpy as np

from .errors import DomainError, UnsupportedCase
from .marginals import Marginal
from .sim import RngStream, map_shards, uniform_block

__all__ = [
    "Direction",
    "SupportCase",
    "UnitPair",
    "BranchFunctions",
    "CouplingSpec",
    "Coupling",
    "support_case",
    "branch_functions",
    "sample_pair",
    "sample_unit_pairs",
    "sample_xy",
    "COUPLING_STREAM",
]

COUPLING_STREAM = 1

_BISECT_STEPS = 60
_FD_STEP = 1e-6

Func = Callable[[np.ndarray], np.ndarray]


class Direction(enum.Enum):
    MAX = "max"
    MIN = "min"


class SupportCase(enum.Enum):
    NON_NEGATIVE = "non-negative"
    NON_POSITIVE = "non-positive"
    STRADDLE_SMALL_LEFT = "straddle-small-left"
    STRADDLE_LARGE_LEFT = "straddle-large-left"


@dataclass(frozen=True)
class UnitPair:
    u1: float
    u2: float

    def __post_init__(self):
        if not (0.0 <= self.u1 <= 1.0 and 0.0 <= self.u2 <= 1.0):
            raise DomainError(f"unit pair outside [0,1]^2: ({self.u1}, {self.u2})")


class Coupling(Protocol):
    """Anything that turns rows of i.i.d. uniforms into pairs ``(u1, u2)``."""

    #: Number of uniforms consumed per draw.
    width: int
    #: Stream id under which the uniforms are drawn.
    stream_id: int

    def map_uniforms(self, block: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...


def support_case(marginal: Marginal) -> SupportCase:
    lo, hi = marginal.support
    if lo >= 0:
        return SupportCase.NON_NEGATIVE
    if hi <= 0:
        return SupportCase.NON_POSITIVE
    if -lo <= hi:
        return SupportCase.STRADDLE_SMALL_LEFT
    return SupportCase.STRADDLE_LARGE_LEFT


@dataclass(frozen=True)
class BranchFunctions:
    """The two inverse branches for an even power and a sign-changing ``X2``.

    ``threshold`` is the level of ``U`` above which no branch choice is
    needed; there ``U2 = U`` (small left tail) or ``U2 = 1 - U`` (large
    left tail, ``reflect_above`` set).
    """

    g: Func
    f: Func
    g_inv: Func
    f_inv: Func
    p: Func
    threshold: float
    reflect_above: bool
    g_domain: tuple[float, float]
    f_domain: tuple[float, float]
    closed_form: bool


def _bisect_increasing(fn: Func, target: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Solve ``fn(x) = target`` for increasing ``fn`` on ``(lo, hi)``.

    Only interior points are evaluated, so infinite quantiles at the ends
    of ``[0, 1]`` are never touched.
    """
    a = np.full_like(target, lo)
    b = np.full_like(target, hi)
    inner = np.nextafter(lo, hi), np.nextafter(hi, lo)
    for _ in range(_BISECT_STEPS):
        # Rounding can push the midpoint onto an end once the bracket is one ulp wide.
        mid = np.clip(0.5 * (a + b), *inner)
        below = fn(mid) < target
        a = np.where(below, mid, a)
        b = np.where(below, b, mid)
    return 0.5 * (a + b)


def _central_difference(fn: Func, x: np.ndarray, lo: float, hi: float) -> np.ndarray:
    eps = 1e-300
    left = np.clip(x - _FD_STEP, max(lo, eps), None)
    right = np.clip(x + _FD_STEP, None, min(hi, 1.0 - 1e-16))
    span = right - left
    with np.errstate(invalid="ignore", divide="ignore"):
        return (fn(right) - fn(left)) / span


def _as_float(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


def branch_functions(marginal2: Marginal, power: int) -> BranchFunctions:
    """Inverse branches and branch probability for ``X2 ~ marginal2``, even ``power``."""
    if power % 2:
        raise UnsupportedCase("branch functions exist only for even powers")
    case = support_case(marginal2)
    if case not in (SupportCase.STRADDLE_SMALL_LEFT, SupportCase.STRADDLE_LARGE_LEFT):
        raise UnsupportedCase("branch functions need a support containing both signs")
    if not marginal2.continuous:
        raise UnsupportedCase("even powers of a sign-changing discrete marginal are not supported: "
                              "g is not invertible across atoms")

    lo, hi = marginal2.support
    F = marginal2.cdf
    Q = marginal2.quantile
    f0 = float(F(0.0))

    def g(x):
        x = _as_float(x)
        return x - _as_float(F(-_as_float(Q(x))))

    def f(x):
        return -g(x)

    if case is SupportCase.STRADDLE_SMALL_LEFT:
        threshold = float(F(-lo))
        reflect = False
        g_dom = (f0, threshold)
        f_dom = (0.0, f0)
    else:
        threshold = 1.0 - float(F(-hi))
        reflect = True
        g_dom = (f0, 1.0)
        f_dom = (float(F(-hi)), f0)

    closed = _closed_form(marginal2, g, f, threshold, reflect, g_dom, f_dom)
    if closed is not None:
        return closed

    def g_inv(u):
        return _bisect_increasing(g, _as_float(u), *g_dom)

    def f_inv(u):
        # f decreases in its argument, so bisect on -f.
        return _bisect_increasing(lambda x: -f(x), -_as_float(u), *f_dom)

    def p(u):
        u = _as_float(u)
        dg_g = np.abs(_central_difference(g, g_inv(u), *g_dom))
        dg_f = np.abs(_central_difference(g, f_inv(u), *f_dom))
        with np.errstate(invalid="ignore", divide="ignore"):
            out = dg_g / (dg_f + dg_g)
        return np.where(np.isfinite(out), out, 0.5)

    return BranchFunctions(g, f, g_inv, f_inv, p, threshold, reflect, g_dom, f_dom, False)


def _closed_form(m: Marginal, g, f, threshold, reflect, g_dom, f_dom) -> BranchFunctions | None:
    center = m.symmetry_center
    ub = m.uniform_bounds()
    ex = m.shifted_exponential()

    def half(u):
        return np.full_like(_as_float(u), 0.5)

    if ub is not None:
        a, b = ub
        off = -a / (b - a)
        return BranchFunctions(
            g, f,
            lambda u: 0.5 * _as_float(u) + off,
            lambda u: -0.5 * _as_float(u) + off,
            half, threshold, reflect, g_dom, f_dom, True)
    if center is not None and abs(center) <= 1e-14 * max(1.0, m.std()):
        return BranchFunctions(
            g, f,
            lambda u: 0.5 * (1.0 + _as_float(u)),
            lambda u: 0.5 * (1.0 - _as_float(u)),
            half, threshold, reflect, g_dom, f_dom, True)
    if ex is not None:
        rate, shift = ex
        c = math.exp(2.0 * shift * rate)

        def plus(u):
            u = _as_float(u)
            return u + np.sqrt(u * u + 4.0 * c)

        def g_inv(u):
            return 1.0 - 2.0 * c / plus(u)

        def f_inv(u):
            return 1.0 - 0.5 * plus(u)

        def p(u):
            w = plus(u) ** 2
            dg_g = 1.0 + w / (4.0 * c)
            dg_f = 1.0 + 4.0 * c / w
            return dg_g / (dg_f + dg_g)

        return BranchFunctions(g, f, g_inv, f_inv, p, threshold, reflect, g_dom, f_dom, True)
    return None


@dataclass(frozen=True, eq=False)
class CouplingSpec:
    """The extremal coupling for ``E(X1 * X2**power)`` in one direction.

    Only the law of ``X2`` matters; ``X1`` enters through its quantile.
    """

    marginal2: Marginal
    power: int
    direction: Direction = Direction.MAX

    width = 2
    stream_id = COUPLING_STREAM

    def __post_init__(self):
        if int(self.power) != self.power or self.power < 1:
            raise DomainError(f"power must be a positive integer, got {self.power}")
        object.__setattr__(self, "power", int(self.power))
        if isinstance(self.direction, str):
            object.__setattr__(self, "direction", Direction(self.direction.lower()))
        if self.needs_branches and not self.marginal2.continuous:
            raise UnsupportedCase("even powers of a sign-changing discrete marginal are not supported")

    @property
    def case(self) -> SupportCase:
        return support_case(self.marginal2)

    @property
    def even(self) -> bool:
        return self.power % 2 == 0

    @property
    def needs_branches(self) -> bool:
        return self.even and self.case in (SupportCase.STRADDLE_SMALL_LEFT,
                                           SupportCase.STRADDLE_LARGE_LEFT)

    @cached_property
    def branches(self) -> BranchFunctions:
        return branch_functions(self.marginal2, self.power)

    def _u2(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        if not self.needs_branches:
            return u.copy()
        br = self.branches
        high = u > br.threshold
        out = np.where(high, 1.0 - u, u) if br.reflect_above else u.copy()
        low = ~high
        if np.any(low):
            ul, vl = u[low], v[low]
            take_g = vl > br.p(ul)
            branch = np.empty_like(ul)
            if np.any(take_g):
                branch[take_g] = br.g_inv(ul[take_g])
            if np.any(~take_g):
                branch[~take_g] = br.f_inv(ul[~take_g])
            out[low] = branch
        return out

    def _flip_u1(self) -> bool:
        """True when ``u1 = 1 - u`` rather than ``u1 = u``."""
        flip = self.direction is Direction.MIN
        if self.even and self.case is SupportCase.NON_POSITIVE:
            flip = not flip
        return flip

    def map_uniforms(self, block: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Map rows ``(u, v)`` to ``(u1, u2)``."""
        block = np.asarray(block, dtype=float)
        u, v = block[:, 0], block[:, 1]
        u2 = self._u2(u, v)
        u1 = 1.0 - u if self._flip_u1() else u.copy()
        return u1, u2


def sample_pair(spec: CouplingSpec, u: float, v: float) -> UnitPair:
    """Deterministic image of one ``(u, v)`` draw under the coupling."""
    if not (0.0 < u < 1.0 and 0.0 < v < 1.0):
        raise DomainError(f"u and v must lie strictly inside (0, 1), got ({u}, {v})")
    u1, u2 = spec.map_uniforms(np.array([[u, v]], dtype=float))
    return UnitPair(float(u1[0]), float(u2[0]))


def sample_unit_pairs(coupling: Coupling, n: int, seed: int, threads: int | None = None) -> np.ndarray:
    """``(n, 2)`` array of ``(u1, u2)`` draws, identical for any thread count."""
    if n < 1:
        raise DomainError("sample size must be at least 1")
    stream = RngStream(seed, coupling.stream_id)

    def shard(start: int, count: int) -> np.ndarray:
        u1, u2 = coupling.map_uniforms(uniform_block(stream, count, coupling.width, start))
        return np.column_stack([u1, u2])

    return np.concatenate(map_shards(shard, n, threads))


def sample_xy(spec: CouplingSpec, marginal1: Marginal, n: int, seed: int,
              threads: int | None = None, with_uniforms: bool = False) -> np.ndarray:
    """``n`` draws of ``(x1, x2)``; with ``with_uniforms`` rows are ``(u1, u2, x1, x2)``."""
    pairs = sample_unit_pairs(spec, n, seed, threads)
    x1 = _as_float(marginal1.quantile(pairs[:, 0]))
    x2 = _as_float(spec.marginal2.quantile(pairs[:, 1]))
    if with_uniforms:
        return np.column_stack([pairs, x1, x2])
    return np.column_stack([x1, x2])
