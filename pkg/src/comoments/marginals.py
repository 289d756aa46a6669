"""Univariate marginal distributions.

Every marginal exposes a vectorised CDF and generalised quantile function,
its first two moments and its support.  Scalars in give scalars out.

The quantile is the left-continuous generalised inverse
``inf{x : F(x) >= p}``; for ``p`` in {0, 1} it is only defined when the
support is bounded on that side.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import special

from .errors import DegenerateMarginal, DomainError, ParseError

__all__ = [
    "Marginal",
    "Uniform",
    "Exponential",
    "Normal",
    "StudentT",
    "Laplace",
    "Empirical",
    "AffineMarginal",
    "StandardizedMarginal",
    "PowerLaw",
    "parse_marginal",
]


def _wrap(x, out):
    if np.ndim(x) == 0:
        return float(out)
    return out


def _check_probability(p, lower: float, upper: float) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if np.any(np.isnan(p)) or np.any(p < 0.0) or np.any(p > 1.0):
        raise DomainError("probability outside [0, 1]")
    if np.isinf(lower) and np.any(p == 0.0):
        raise DomainError("quantile at p=0 is -inf for a support unbounded below")
    if np.isinf(upper) and np.any(p == 1.0):
        raise DomainError("quantile at p=1 is +inf for a support unbounded above")
    return p


class Marginal(ABC):
    """A univariate distribution known through its CDF and quantile."""

    #: False for distributions with atoms.
    continuous = True

    @abstractmethod
    def _cdf(self, x: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def _quantile(self, p: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def mean(self) -> float: ...

    @abstractmethod
    def std(self) -> float: ...

    @property
    @abstractmethod
    def support(self) -> tuple[float, float]: ...

    @abstractmethod
    def to_spec(self) -> str:
        """Compact string form accepted by :func:`parse_marginal`."""

    def cdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        return _wrap(x, self._cdf(x_arr))

    def cdf_left(self, x):
        """``P(X < x)``; equals :meth:`cdf` for continuous laws."""
        return self.cdf(x)

    def quantile(self, p):
        lo, hi = self.support
        p_arr = _check_probability(p, lo, hi)
        return _wrap(p, self._quantile(p_arr))

    @property
    def symmetry_center(self) -> float | None:
        """Point of symmetry of the law, or None if it is not symmetric."""
        return None

    @property
    def tail_index(self) -> float:
        """Supremum of the orders ``k`` with ``E|X|^k`` finite."""
        return math.inf

    def shifted_exponential(self) -> tuple[float, float] | None:
        """``(rate, shift)`` if the law is ``shift + Expon(rate)``."""
        return None

    def uniform_bounds(self) -> tuple[float, float] | None:
        """``(a, b)`` if the law is ``Uniform(a, b)``."""
        return None

    def affine(self, loc: float, scale: float) -> Marginal:
        """Law of ``loc + scale * X`` for ``scale > 0``."""
        if not scale > 0:
            raise DomainError("affine scale must be positive")
        return AffineMarginal(self, loc, scale)


@dataclass(frozen=True)
class Uniform(Marginal):
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)) or self.a > self.b:
            raise DomainError(f"Uniform needs finite a <= b, got a={self.a}, b={self.b}")

    def _cdf(self, x):
        if self.a == self.b:
            return (x >= self.a).astype(float)
        return np.clip((x - self.a) / (self.b - self.a), 0.0, 1.0)

    def _quantile(self, p):
        return self.a + (self.b - self.a) * p

    def mean(self):
        return 0.5 * (self.a + self.b)

    def std(self):
        return (self.b - self.a) / math.sqrt(12.0)

    @property
    def support(self):
        return (self.a, self.b)

    @property
    def symmetry_center(self):
        return self.mean()

    def uniform_bounds(self):
        return (self.a, self.b)

    def affine(self, loc, scale):
        if not scale > 0:
            raise DomainError("affine scale must be positive")
        return Uniform(loc + scale * self.a, loc + scale * self.b)

    def to_spec(self):
        return f"unif:a={self.a!r},b={self.b!r}"


@dataclass(frozen=True)
class Exponential(Marginal):
    """``shift + E`` with ``E ~ Expon(rate)``."""

    rate: float = 1.0
    shift: float = 0.0

    def __post_init__(self):
        if not self.rate > 0 or not math.isfinite(self.rate):
            raise DomainError(f"Exponential rate must be positive, got {self.rate}")
        if not math.isfinite(self.shift):
            raise DomainError("Exponential shift must be finite")

    def _cdf(self, x):
        z = np.maximum(x - self.shift, 0.0)
        return -np.expm1(-self.rate * z)

    def _quantile(self, p):
        return self.shift - np.log1p(-p) / self.rate

    def mean(self):
        return self.shift + 1.0 / self.rate

    def std(self):
        return 1.0 / self.rate

    @property
    def support(self):
        return (self.shift, math.inf)

    def shifted_exponential(self):
        return (self.rate, self.shift)

    def affine(self, loc, scale):
        if not scale > 0:
            raise DomainError("affine scale must be positive")
        return Exponential(self.rate / scale, loc + scale * self.shift)

    def to_spec(self):
        return f"expon:rate={self.rate!r},shift={self.shift!r}"


@dataclass(frozen=True)
class Normal(Marginal):
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"Normal sigma must be positive, got {self.sigma}")

    def _cdf(self, x):
        return special.ndtr((x - self.mu) / self.sigma)

    def _quantile(self, p):
        return self.mu + self.sigma * special.ndtri(p)

    def mean(self):
        return self.mu

    def std(self):
        return self.sigma

    @property
    def support(self):
        return (-math.inf, math.inf)

    @property
    def symmetry_center(self):
        return self.mu

    def affine(self, loc, scale):
        if not scale > 0:
            raise DomainError("affine scale must be positive")
        return Normal(loc + scale * self.mu, scale * self.sigma)

    def to_spec(self):
        return f"norm:mu={self.mu!r},sigma={self.sigma!r}"


@dataclass(frozen=True)
class StudentT(Marginal):
    """Standard Student t; ``nu > 2`` so the variance exists."""

    nu: float = 5.0

    def __post_init__(self):
        if not self.nu > 2:
            raise DomainError(f"StudentT needs nu > 2 for a finite std, got {self.nu}")

    def _cdf(self, x):
        return special.stdtr(self.nu, x)

    def _quantile(self, p):
        return special.stdtrit(self.nu, p)

    def mean(self):
        return 0.0

    def std(self):
        return math.sqrt(self.nu / (self.nu - 2.0))

    @property
    def support(self):
        return (-math.inf, math.inf)

    @property
    def symmetry_center(self):
        return 0.0

    @property
    def tail_index(self):
        return float(self.nu)

    def to_spec(self):
        return f"t:nu={self.nu!r}"


@dataclass(frozen=True)
class Laplace(Marginal):
    mu: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if not self.b > 0:
            raise DomainError(f"Laplace scale must be positive, got {self.b}")

    def _cdf(self, x):
        z = (x - self.mu) / self.b
        return np.where(z < 0, 0.5 * np.exp(np.minimum(z, 0.0)), 1.0 - 0.5 * np.exp(-np.maximum(z, 0.0)))

    def _quantile(self, p):
        with np.errstate(divide="ignore"):
            low = self.mu + self.b * np.log(2.0 * p)
            high = self.mu - self.b * np.log(2.0 - 2.0 * p)
        return np.where(p < 0.5, low, high)

    def mean(self):
        return self.mu

    def std(self):
        return math.sqrt(2.0) * self.b

    @property
    def support(self):
        return (-math.inf, math.inf)

    @property
    def symmetry_center(self):
        return self.mu

    def affine(self, loc, scale):
        if not scale > 0:
            raise DomainError("affine scale must be positive")
        return Laplace(loc + scale * self.mu, scale * self.b)

    def to_spec(self):
        return f"laplace:mu={self.mu!r},b={self.b!r}"


@dataclass(frozen=True, eq=False)
class Empirical(Marginal):
    """Uniform distribution over the atoms of a sample (ties allowed)."""

    values: np.ndarray
    source: str | None = None

    continuous = False

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float).ravel())
        if v.size == 0 or not np.all(np.isfinite(v)):
            raise DomainError("Empirical needs a non-empty finite sample")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @cached_property
    def _levels(self):
        n = self.values.size
        return np.arange(1, n + 1) / n

    def _cdf(self, x):
        return np.searchsorted(self.values, x, side="right") / self.values.size

    def cdf_left(self, x):
        x_arr = np.asarray(x, dtype=float)
        return _wrap(x, np.searchsorted(self.values, x_arr, side="left") / self.values.size)

    def _quantile(self, p):
        idx = np.searchsorted(self._levels, p, side="left")
        return self.values[np.clip(idx, 0, self.values.size - 1)]

    def mean(self):
        return float(np.mean(self.values))

    def std(self):
        return float(np.std(self.values))

    @property
    def support(self):
        return (float(self.values[0]), float(self.values[-1]))

    def affine(self, loc, scale):
        if not scale > 0:
            raise DomainError("affine scale must be positive")
        return Empirical(loc + scale * self.values)

    def to_spec(self):
        if self.source is None:
            raise ParseError("empirical marginal built in memory has no file spec")
        return f"empirical:file={self.source}"

    @classmethod
    def from_file(cls, path: str | Path) -> Empirical:
        try:
            data = np.loadtxt(path, dtype=float, delimiter=",", ndmin=1)
        except (OSError, ValueError) as exc:
            raise ParseError(f"cannot read empirical sample from {path}: {exc}") from exc
        return cls(data.ravel(), source=str(path))


@dataclass(frozen=True)
class AffineMarginal(Marginal):
    """``loc + scale * X`` for a base marginal ``X`` and ``scale > 0``."""

    base: Marginal
    loc: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError("affine scale must be positive")

    @property
    def continuous(self):
        return self.base.continuous

    def _cdf(self, x):
        return np.asarray(self.base.cdf((x - self.loc) / self.scale), dtype=float)

    def cdf_left(self, x):
        x_arr = np.asarray(x, dtype=float)
        return _wrap(x, np.asarray(self.base.cdf_left((x_arr - self.loc) / self.scale)))

    def _quantile(self, p):
        return self.loc + self.scale * np.asarray(self.base.quantile(p), dtype=float)

    def mean(self):
        return self.loc + self.scale * self.base.mean()

    def std(self):
        return self.scale * self.base.std()

    @property
    def support(self):
        lo, hi = self.base.support
        return (self.loc + self.scale * lo, self.loc + self.scale * hi)

    @property
    def symmetry_center(self):
        c = self.base.symmetry_center
        return None if c is None else self.loc + self.scale * c

    @property
    def tail_index(self):
        return self.base.tail_index

    def shifted_exponential(self):
        e = self.base.shifted_exponential()
        if e is None:
            return None
        return (e[0] / self.scale, self.loc + self.scale * e[1])

    def uniform_bounds(self):
        u = self.base.uniform_bounds()
        if u is None:
            return None
        return (self.loc + self.scale * u[0], self.loc + self.scale * u[1])

    def affine(self, loc, scale):
        if not scale > 0:
            raise DomainError("affine scale must be positive")
        return AffineMarginal(self.base, loc + scale * self.loc, scale * self.scale)

    def to_spec(self):
        raise ParseError("affine marginals have no compact string form")


class StandardizedMarginal(AffineMarginal):
    """``(X - mean) / std``: zero mean, unit variance."""

    def __init__(self, base: Marginal):
        sd = base.std()
        if not sd > 0 or not math.isfinite(sd):
            raise DegenerateMarginal(f"cannot standardise a marginal with std {sd}")
        mu = base.mean()
        inner = base.affine(-mu / sd, 1.0 / sd)
        if isinstance(inner, AffineMarginal):
            inner_base, loc, scale = inner.base, inner.loc, inner.scale
        else:
            inner_base, loc, scale = inner, 0.0, 1.0
        super().__init__(inner_base, loc, scale)
        object.__setattr__(self, "original", base)

    def __repr__(self):
        return f"StandardizedMarginal({self.original!r})"

    def mean(self):
        return 0.0

    def std(self):
        return 1.0


@dataclass(frozen=True)
class PowerLaw:
    """Law of ``X**power`` for ``X`` drawn from ``base``."""

    base: Marginal
    power: int

    def __post_init__(self):
        if int(self.power) != self.power or self.power < 1:
            raise DomainError(f"power must be a positive integer, got {self.power}")
        object.__setattr__(self, "power", int(self.power))

    @property
    def even(self) -> bool:
        return self.power % 2 == 0

    @property
    def support(self) -> tuple[float, float]:
        lo, hi = self.base.support
        d = self.power
        if not self.even:
            return (_signed_power(lo, d), _signed_power(hi, d))
        if lo >= 0:
            return (lo**d, hi**d)
        if hi <= 0:
            return (hi**d, lo**d)
        return (0.0, max(-lo, hi) ** d)

    def cdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        d = self.power
        if not self.even:
            root = np.sign(x_arr) * np.abs(x_arr) ** (1.0 / d)
            return _wrap(x, np.asarray(self.base.cdf(root), dtype=float))
        root = np.abs(x_arr) ** (1.0 / d)
        out = np.asarray(self.base.cdf(root), dtype=float) - np.asarray(self.base.cdf_left(-root), dtype=float)
        out = np.where(x_arr < 0, 0.0, np.clip(out, 0.0, 1.0))
        return _wrap(x, out)

    def quantile(self, p):
        lo, hi = self.support
        p_arr = _check_probability(p, lo, hi)
        d = self.power
        if not self.even:
            q = np.asarray(self.base.quantile(p_arr), dtype=float)
            return _wrap(p, np.sign(q) * np.abs(q) ** d)
        r = self._abs_quantile(p_arr)
        return _wrap(p, r**d)

    def _abs_quantile(self, p: np.ndarray) -> np.ndarray:
        """Generalised inverse of the CDF of ``|X|``."""
        base = self.base
        lo, hi = base.support
        if lo >= 0:
            return np.asarray(base.quantile(p), dtype=float)
        if hi <= 0:
            return -np.asarray(base.quantile(1.0 - p), dtype=float)
        center = base.symmetry_center
        if center is not None and abs(center) <= 1e-14 * max(1.0, base.std()):
            return np.asarray(base.quantile(0.5 * (1.0 + p)), dtype=float)
        return _bisect_abs_quantile(base, p)


def _signed_power(x: float, d: int) -> float:
    if math.isinf(x):
        return x if d % 2 else math.inf
    return math.copysign(abs(x) ** d, x)


def _abs_cdf(base: Marginal, r: np.ndarray) -> np.ndarray:
    return np.asarray(base.cdf(r), dtype=float) - np.asarray(base.cdf_left(-r), dtype=float)


def _bisect_abs_quantile(base: Marginal, p: np.ndarray, ptol: float = 1e-12) -> np.ndarray:
    """Smallest ``r >= 0`` with ``P(|X| <= r) >= p``, by bisection."""
    p = np.asarray(p, dtype=float)
    lo_s, hi_s = base.support
    r_max = max(abs(lo_s), abs(hi_s))
    if math.isinf(r_max):
        r_max = 1.0 + 2.0 * abs(base.mean()) + 2.0 * base.std()
        while True:
            top = np.max(p) if p.size else 0.0
            if _abs_cdf(base, np.array(r_max)) >= top or r_max > 1e300:
                break
            r_max *= 2.0
    lo = np.zeros_like(p)
    hi = np.full_like(p, r_max)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        below = _abs_cdf(base, mid) < p
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        width = hi - lo
        if np.all(width <= 4.0 * np.finfo(float).eps * np.maximum(hi, 1e-300)):
            break
        if base.continuous and np.all(np.abs(_abs_cdf(base, hi) - p) <= ptol * 1e-3):
            break
    return hi


_KINDS = {
    "unif": (Uniform, {"a": 0.0, "b": 1.0}),
    "expon": (Exponential, {"rate": 1.0, "shift": 0.0}),
    "norm": (Normal, {"mu": 0.0, "sigma": 1.0}),
    "t": (StudentT, {"nu": None}),
    "laplace": (Laplace, {"mu": 0.0, "b": 1.0}),
}


def parse_marginal(text: str) -> Marginal:
    """Parse ``kind:key=value,...`` into a marginal.

    >>> parse_marginal("expon:rate=1.5")
    Exponential(rate=1.5, shift=0.0)
    """
    kind, sep, rest = text.strip().partition(":")
    kind = kind.strip().lower()
    if kind == "empirical":
        params = _parse_params(text, rest)
        if set(params) != {"file"}:
            raise ParseError(f"empirical marginal needs exactly 'file=...' in {text!r}")
        return Empirical.from_file(params["file"])
    if kind not in _KINDS:
        raise ParseError(f"unknown marginal kind {kind!r} in {text!r}; expected one of "
                         f"{sorted([*_KINDS, 'empirical'])}")
    cls, defaults = _KINDS[kind]
    raw = _parse_params(text, rest) if sep else {}
    values = {}
    for key, token in raw.items():
        if key not in defaults:
            raise ParseError(f"unknown parameter {key!r} for {kind} in {text!r}")
        try:
            values[key] = float(token)
        except ValueError:
            raise ParseError(f"parameter {key}={token!r} is not a number in {text!r}") from None
    for key, default in defaults.items():
        if key not in values:
            if default is None:
                raise ParseError(f"missing required parameter {key!r} for {kind} in {text!r}")
            values[key] = default
    return cls(**values)


def _parse_params(text: str, rest: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for token in filter(None, (t.strip() for t in rest.split(","))):
        key, eq, value = token.partition("=")
        if not eq or not key.strip() or not value.strip():
            raise ParseError(f"malformed token {token!r} in {text!r}; expected key=value")
        out[key.strip().lower()] = value.strip()
    return out
