"""Sharp bounds on E(X1 * X2**d) and on standardised centered mixed moments.

The upper bound pairs ``X1`` comonotonically with ``X2**d`` and the lower
bound antimonotonically, so with ``G2`` the law of ``X2**d``

    M = int_0^1 F1^{-1}(u) G2^{-1}(u) du,
    m = int_0^1 F1^{-1}(1-u) G2^{-1}(u) du.

``G2^{-1}`` is evaluated through the inverse branches of the extremal
coupling rather than by inverting the CDF of ``X2**d``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate, special

from .couplings import SupportCase, branch_functions, support_case
from .errors import DegenerateMarginal, DivergentMoment, DomainError, QuadratureFailure, UnsupportedCase
from .marginals import Empirical, Marginal, StandardizedMarginal
from .sim import RngStream, StreamingMoments, map_shards, merge_all, uniforms

__all__ = [
    "Method",
    "BoundResult",
    "power_quantile",
    "raw_bounds",
    "centered_bounds",
    "table1_coskewness",
    "uniform_centered_bound",
    "BOUNDS_STREAM",
]

BOUNDS_STREAM = 3

# Largest and smallest doubles strictly inside (0, 1).
_TOP = 1.0 - 2.0**-53
_BOTTOM = 2.0**-1074
EPSABS = 1e-9
EPSREL = 1e-8
QUAD_LIMIT = 500
PREFLIGHT_POINTS = 10_000


class Method(enum.Enum):
    CLOSED = "closed"
    QUAD = "quad"
    MC = "mc"


@dataclass(frozen=True)
class BoundResult:
    lower: float
    upper: float
    method: Method
    stderr_lower: float | None = None
    stderr_upper: float | None = None
    n: int | None = None
    seed: int | None = None

    def as_dict(self) -> dict:
        return {
            "lower": self.lower,
            "upper": self.upper,
            "method": self.method.value,
            "stderr_lower": self.stderr_lower,
            "stderr_upper": self.stderr_upper,
            "n": self.n,
            "seed": self.seed,
        }


def power_quantile(marginal2: Marginal, d: int):
    """Vectorised quantile function of ``X2**d``."""
    Q = marginal2.quantile
    if d % 2 or support_case(marginal2) is SupportCase.NON_NEGATIVE:
        return lambda u: np.asarray(Q(u), dtype=float) ** d
    if support_case(marginal2) is SupportCase.NON_POSITIVE:
        return lambda u: np.asarray(Q(_clip_unit(1.0 - np.asarray(u, dtype=float))), dtype=float) ** d
    br = branch_functions(marginal2, d)

    def q(u):
        u = np.asarray(u, dtype=float)
        high = u > br.threshold
        out = np.empty_like(u)
        if np.any(high):
            uh = u[high]
            out[high] = np.asarray(Q(_clip_unit(1.0 - uh if br.reflect_above else uh)), dtype=float)
        if np.any(~high):
            out[~high] = np.asarray(Q(_clip_unit(br.g_inv(u[~high]))), dtype=float)
        return out**d

    return q


def _clip_unit(u):
    return np.clip(u, _BOTTOM, _TOP)


def _check_power(d) -> int:
    if int(d) != d or d < 1:
        raise DomainError(f"power d must be a positive integer, got {d}")
    return int(d)


def _tail_check(m1: Marginal, m2: Marginal, d: int) -> None:
    """Hoelder-type finiteness test for regularly varying tails."""
    load = 1.0 / m1.tail_index + d / m2.tail_index
    if load >= 1.0:
        raise DivergentMoment(
            f"E|X1 X2^{d}| is infinite for tail indices {m1.tail_index} and {m2.tail_index}")


def _preflight(m1: Marginal, m2: Marginal, d: int, gq) -> None:
    _tail_check(m1, m2, d)
    u = (np.arange(PREFLIGHT_POINTS) + 0.5) / PREFLIGHT_POINTS
    with np.errstate(all="ignore"):
        q2 = gq(u)
        up = np.asarray(m1.quantile(u), dtype=float) * q2
        lo = np.asarray(m1.quantile(1.0 - u), dtype=float) * q2
        total = np.sum(np.abs(up)) + np.sum(np.abs(lo))
    if not np.isfinite(total):
        raise DivergentMoment("preflight estimate of the mixed moment is not finite")


# -- closed form ----------------------------------------------------------------


def _uniform_pieces(a2: float, b2: float, d: int) -> list[tuple[float, float, Polynomial]]:
    """Pieces ``(lo, hi, r)`` with ``G2^{-1}(u) = r(u)**d`` on ``[lo, hi]``."""
    L = b2 - a2
    lin = Polynomial([a2, L])
    if d % 2 or a2 >= 0:
        return [(0.0, 1.0, lin)]
    if b2 <= 0:
        return [(0.0, 1.0, Polynomial([-b2, L]))]
    if -a2 <= b2:
        t = -2.0 * a2 / L
        return [(0.0, t, Polynomial([0.0, L / 2])), (t, 1.0, lin)]
    t = 2.0 * b2 / L
    return [(0.0, t, Polynomial([0.0, L / 2])), (t, 1.0, Polynomial([-b2, L]))]


def _closed_uniform(u1: tuple[float, float], u2: tuple[float, float], d: int) -> tuple[float, float]:
    a1, b1 = u1
    a2, b2 = u2
    if a2 == b2:
        c = a2**d
        return (0.5 * (a1 + b1) * c,) * 2
    up_f1 = Polynomial([a1, b1 - a1])
    lo_f1 = Polynomial([b1, a1 - b1])
    upper = lower = 0.0
    for lo, hi, r in _uniform_pieces(a2, b2, d):
        g = r**d
        P = (up_f1 * g).integ()
        Pm = (lo_f1 * g).integ()
        upper += P(hi) - P(lo)
        lower += Pm(hi) - Pm(lo)
    return float(lower), float(upper)


def uniform_centered_bound(d: int) -> float:
    """Upper centered bound for two uniform marginals (lower is its negative)."""
    d = _check_power(d)
    if d % 2 == 0:
        return d * 3 ** ((d + 1) / 2) / ((d + 1) * (d + 2))
    return 3 ** ((d + 1) / 2) / (d + 2)


# -- quadrature -----------------------------------------------------------------


def _quad_piece(fn, a: float, b: float, tail_low: bool, tail_high: bool, points=None) -> tuple[float, float]:
    """Integrate ``fn`` over ``[a, b]``.

    An unbounded end is mapped to an infinite range (``u = 1 - e^{-t}`` at the
    top, ``u = e^{-t}`` at the bottom) so that the integrable quantile
    singularity turns into exponential decay.  Arguments are clipped to the
    open interval so the quantile is never evaluated at 0 or 1.
    """
    if tail_high:
        def h(t):
            w = math.exp(-t)
            return fn(_inside(1.0 - w)) * w
        return _quad(h, -math.log1p(-a), math.inf)
    if tail_low:
        def h(t):
            w = math.exp(-t)
            return fn(_inside(w)) * w
        return _quad(h, -math.log(b), math.inf)
    return _quad(fn, a, b, points)


def _inside(u: float) -> float:
    return min(max(u, _BOTTOM), _TOP)


def _quad(fn, a, b, points=None) -> tuple[float, float]:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        kwargs = {"points": points} if points else {}
        val, err = integrate.quad(fn, a, b, epsabs=EPSABS, epsrel=EPSREL, limit=QUAD_LIMIT, **kwargs)
    return val, err


def _integrate_unit(fn, breaks: list[float], low_unbounded: bool, high_unbounded: bool,
                    atoms: list[float] | None = None) -> float:
    lo, hi = 0.0, 1.0
    cuts = sorted({lo, hi, *[b for b in breaks if lo < b < hi]})
    total = 0.0
    errs = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        pts = [x for x in (atoms or []) if a < x < b] or None
        val, err = _quad_piece(fn, a, b,
                               tail_low=low_unbounded and a == lo and b <= 0.5,
                               tail_high=high_unbounded and b == hi and a >= 0.5,
                               points=pts)
        total += val
        errs += err
    if not math.isfinite(total) or errs > max(EPSABS, EPSREL * abs(total)) * 10.0:
        raise QuadratureFailure(f"quadrature did not converge (estimate {total}, error {errs})")
    return total


def _breakpoints(m1: Marginal, m2: Marginal, d: int) -> list[float]:
    pts = [0.5]
    if d % 2 == 0 and support_case(m2) in (SupportCase.STRADDLE_SMALL_LEFT, SupportCase.STRADDLE_LARGE_LEFT):
        thr = branch_functions(m2, d).threshold
        pts += [thr, 1.0 - thr]
    for m in (m1, m2):
        c = m.symmetry_center
        if c is not None and math.isfinite(c):
            lvl = float(m.cdf(0.0))
            pts += [lvl, 1.0 - lvl]
    return [p for p in pts if 0.0 < p < 1.0]


def _atoms(m1: Marginal, m2: Marginal) -> list[float]:
    out: list[float] = []
    for m in (m1, m2):
        if isinstance(m, Empirical) and m.values.size <= 200:
            n = m.values.size
            out += [k / n for k in range(1, n)] + [1 - k / n for k in range(1, n)]
    return out


def _quad_bounds(m1: Marginal, m2: Marginal, d: int, gq) -> tuple[float, float]:
    Q1 = m1.quantile

    def upper(u):
        return float(Q1(u)) * float(gq(np.array([u]))[0])

    def lower(u):
        return float(Q1(_inside(1.0 - u))) * float(gq(np.array([u]))[0])

    lo1, hi1 = m1.support
    unb1_low, unb1_high = math.isinf(lo1), math.isinf(hi1)
    unb2_low, unb2_high = _power_tails(m2, d)
    breaks = _breakpoints(m1, m2, d)
    atoms = _atoms(m1, m2)
    up = _integrate_unit(upper, breaks, unb1_low or unb2_low, unb1_high or unb2_high, atoms)
    lo = _integrate_unit(lower, breaks, unb1_high or unb2_low, unb1_low or unb2_high, atoms)
    return lo, up


def _power_tails(m2: Marginal, d: int) -> tuple[bool, bool]:
    """Whether ``G2^{-1}`` is unbounded at ``u -> 0`` and at ``u -> 1``."""
    lo2, hi2 = m2.support
    if d % 2:
        return math.isinf(lo2), math.isinf(hi2)
    return False, math.isinf(lo2) or math.isinf(hi2)


# -- Monte Carlo ----------------------------------------------------------------


def _mc_bounds(m1: Marginal, gq, n: int, seed: int, threads: int | None):
    stream = RngStream(seed, BOUNDS_STREAM)
    Q1 = m1.quantile

    def shard(start, count):
        u = uniforms(stream, count, start)
        q2 = gq(u)
        up = np.asarray(Q1(u), dtype=float) * q2
        lo = np.asarray(Q1(1.0 - u), dtype=float) * q2
        return StreamingMoments.from_array(lo, 2), StreamingMoments.from_array(up, 2)

    parts = map_shards(shard, n, threads)
    lo = merge_all((p[0] for p in parts), 2)
    up = merge_all((p[1] for p in parts), 2)
    return lo, up


# -- public entry points --------------------------------------------------------


def raw_bounds(marginal1: Marginal, marginal2: Marginal, d: int, method: Method | str = Method.QUAD,
               n: int | None = None, seed: int = 42, threads: int | None = None) -> BoundResult:
    """Sharp lower and upper bounds of ``E(X1 * X2**d)``."""
    d = _check_power(d)
    method = Method(method) if not isinstance(method, Method) else method
    gq = power_quantile(marginal2, d)
    if method is Method.CLOSED:
        u1, u2 = marginal1.uniform_bounds(), marginal2.uniform_bounds()
        if u1 is None or u2 is None:
            raise UnsupportedCase("closed-form bounds are available for uniform marginals only")
        lo, up = _closed_uniform(u1, u2, d)
        return BoundResult(lo, up, method)
    _preflight(marginal1, marginal2, d, gq)
    if method is Method.QUAD:
        lo, up = _quad_bounds(marginal1, marginal2, d, gq)
        return BoundResult(lo, up, method)
    if n is None or n < 2:
        raise DomainError("Monte Carlo bounds need n >= 2")
    lo, up = _mc_bounds(marginal1, gq, int(n), seed, threads)
    return BoundResult(lo.mean, up.mean, method, lo.stderr, up.stderr, int(n), seed)


def centered_bounds(marginal1: Marginal, marginal2: Marginal, d: int, method: Method | str = Method.QUAD,
                    n: int | None = None, seed: int = 42, threads: int | None = None) -> BoundResult:
    """Bounds of the standardised centered mixed moment ``E(Y1 * Y2**d)``."""
    for m in (marginal1, marginal2):
        sd = m.std()
        if not sd > 0:
            raise DegenerateMarginal(f"marginal {m!r} has zero standard deviation")
        if not math.isfinite(sd):
            raise DivergentMoment(f"marginal {m!r} has infinite standard deviation")
    return raw_bounds(StandardizedMarginal(marginal1), StandardizedMarginal(marginal2), d, method, n, seed, threads)


# -- coskewness integrals -------------------------------------------------------


def _coskew_integral(q1, q2) -> float:
    def fn(u):
        return q1(u) * q2(_inside(0.5 * (1.0 + u))) ** 2

    return _integrate_unit(fn, [0.5], True, True)


def table1_coskewness(kind: str, nu1: float | None = None, nu2: float | None = None) -> BoundResult:
    """Coskewness bounds for two marginals of one family, by direct integrals.

    ``kind`` is one of ``normal``, ``t``, ``laplace``, ``exponential``.  The
    symmetric families use ``S = int_0^1 H1^{-1}(u) H2^{-1}((1+u)/2)^2 du``
    with standardised quantiles ``H``, and lower ``= -upper``.
    """
    kind = kind.lower()
    if kind == "normal":
        up = _coskew_integral(special.ndtri, special.ndtri)
        return _symmetric(up)
    if kind in ("t", "student", "studentt"):
        if nu1 is None or nu2 is None:
            raise DomainError("Student t coskewness bounds need nu1 and nu2")
        if not (nu1 > 3 and nu2 > 3):
            raise DomainError("Student t coskewness bounds need degrees of freedom above 3")
        _tail_check_t(nu1, nu2)
        a = (nu2 - 2) / nu2 * math.sqrt((nu1 - 2) / nu1)
        up = a * _coskew_integral(lambda u: special.stdtrit(nu1, u), lambda u: special.stdtrit(nu2, u))
        return _symmetric(up)
    if kind == "laplace":
        def q(u):
            return math.log(2 * u) if u < 0.5 else -math.log(2 - 2 * u)

        up = _coskew_integral(q, q) / (2.0 * math.sqrt(2.0))
        return _symmetric(up)
    if kind in ("exponential", "expon"):
        return _exponential_coskewness()
    raise DomainError(f"unknown marginal kind {kind!r}")


def _tail_check_t(nu1, nu2):
    if 1.0 / nu1 + 2.0 / nu2 >= 1.0:
        raise DivergentMoment(f"coskewness bounds are infinite for nu1={nu1}, nu2={nu2}")


def _symmetric(up: float) -> BoundResult:
    return BoundResult(-up, up, Method.QUAD)


def _exponential_coskewness() -> BoundResult:
    e = math.e
    b = 1.0 - math.exp(-2.0)

    def f(u):
        return math.log((e * u + math.sqrt(e * e * u * u + 4.0)) / 2.0) ** 2

    def g(u):
        return -math.log1p(-u) - 1.0

    def h(u):
        return -math.log(u) - 1.0

    def piece(fn, a, c, low, high):
        val, err = _quad_piece(fn, a, c, low, high)
        if not math.isfinite(val) or err > max(EPSABS, EPSREL * abs(val)) * 10.0:
            raise QuadratureFailure("exponential coskewness integral did not converge")
        return val

    top = 1.0
    upper = piece(lambda u: g(u) * f(u), 0.0, b, False, False) + piece(lambda u: g(u) ** 3, b, top, False, True)
    lower = (piece(lambda u: h(u) * f(u), 0.0, 0.5, True, False)
             + piece(lambda u: h(u) * f(u), 0.5, b, False, False)
             + piece(lambda u: h(u) * g(u) ** 2, b, top, False, True))
    return BoundResult(lower, upper, Method.QUAD)
