"""Regenerate the published tables and figure series as CSV rows."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .annuities import AnnuitySpec, Status, annuity_sweep, annuity_terms
from .bounds import table1_coskewness
from .couplings import CouplingSpec, Direction
from .errors import UnknownTarget
from .marginals import Exponential, Marginal, Normal, Uniform
from .mixture import MixtureParams, Parity, mixed_moment_sweep, sample_mixture
from .risk import risk_sweep, tail_risk

__all__ = [
    "LAMBDAS",
    "TABLE3_PANELS",
    "TABLE5_PANELS",
    "ANNUITY_RATES",
    "FIG_P_GRID",
    "Table",
    "TARGETS",
    "DEFAULT_N",
    "reproduce",
    "to_csv",
]

LAMBDAS = (0.0, 0.25, 0.5, 0.75, 1.0)

#: panel -> (rate1, rate2, p)
TABLE3_PANELS = {
    "A": (1.0, 1.0, 0.95),
    "B": (2.0, 1.0, 0.95),
    "C": (1.0, 2.0, 0.95),
    "D": (1.0, 1.0, 0.90),
    "E": (1.0, 1.0, 0.99),
}

#: panel -> term
TABLE5_PANELS = {"A": 30, "B": 10, "C": 50}

ANNUITY_RATES = (0.0533, 0.0434)
FIG_RATES = (1.5, 2.0)
FIG_P_GRID = tuple(np.linspace(0.75, 1.0, 100)[:-1].tolist())
FIG_CURVE_POINTS = 512
FIG6_MAX_TERM = 80
TABLE1_NU = 5.0

DEFAULT_N = {
    "table2": 10_000_000,
    "table3": 1_000_000,
    "table4": 1_000_000,
    "table5": 1_000_000,
    "fig4": 1_000_000,
    "fig5": 1_000_000,
    "fig6": 1_000_000,
}


@dataclass(frozen=True)
class Table:
    header: tuple[str, ...]
    rows: list[tuple]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return ""
        return repr(x)
    return str(x)


def to_csv(table: Table) -> str:
    lines = [",".join(table.header)]
    lines += [",".join(_fmt(c) for c in row) for row in table.rows]
    return "\n".join(lines) + "\n"


def _lambda_header() -> list[str]:
    out = []
    for lam in LAMBDAS:
        out += [f"lambda_{lam:.2f}", f"lambda_{lam:.2f}_stderr"]
    return out


def _cells(ests) -> list[float]:
    out = []
    for e in ests:
        out += [e.value, e.stderr]
    return out


def table1(n=None, seed=42, threads=None) -> Table:
    rows = []
    for label, kind in (("normal", "normal"), (f"student_t_nu{TABLE1_NU:g}", "t"),
                        ("laplace", "laplace"), ("exponential", "exponential")):
        r = table1_coskewness(kind, TABLE1_NU, TABLE1_NU) if kind == "t" else table1_coskewness(kind)
        rows.append((label, r.lower, 0.0, r.upper, 0.0))
    return Table(("marginal", "min_coskewness", "min_coskewness_stderr",
                  "max_coskewness", "max_coskewness_stderr"), rows)


def table2(n=None, seed=42, threads=None) -> Table:
    n = n or DEFAULT_N["table2"]
    ds = (1, 2, 3, 4)
    mu = mixed_moment_sweep(ds, LAMBDAS, n, seed, threads, kind="moment")
    rs = mixed_moment_sweep(ds, LAMBDAS, n, seed, threads, kind="rank")
    rows = [(f"mu_{d}", *_cells(mu[d])) for d in ds]
    rows += [(f"RS_{d}", *_cells(rs[d])) for d in ds]
    return Table(("quantity", *_lambda_header()), rows)


def _risk_table(which: str, n, seed, threads) -> Table:
    n = n or DEFAULT_N["table3"]
    rows = []
    for panel, (r1, r2, p) in TABLE3_PANELS.items():
        res = risk_sweep(MixtureParams(r1, r2, 0.0, Parity.EVEN), p, LAMBDAS, n, seed, threads)
        ests = [getattr(t, which) for t in res]
        rows.append((panel, r1, r2, p, *_cells(ests)))
    return Table(("panel", "rate1", "rate2", "p", *_lambda_header()), rows)


def table3(n=None, seed=42, threads=None) -> Table:
    return _risk_table("es", n, seed, threads)


def table4(n=None, seed=42, threads=None) -> Table:
    return _risk_table("mes", n, seed, threads)


def table5(n=None, seed=42, threads=None) -> Table:
    n = n or DEFAULT_N["table5"]
    rows = []
    for panel, term in TABLE5_PANELS.items():
        for status in (Status.LAST, Status.JOINT):
            spec = AnnuitySpec(*ANNUITY_RATES, term=term, status=status)
            rows.append((panel, term, status.value, *_cells(annuity_sweep(spec, LAMBDAS, n, seed, threads))))
    return Table(("panel", "term", "status", *_lambda_header()), rows)


def _support_curves(marginal2: Marginal) -> Table:
    """Support of the maximising and minimising copulas as curves ``u2(u1)``."""
    x = np.linspace(0.0, 1.0, FIG_CURVE_POINTS)
    br = CouplingSpec(marginal2, 2, Direction.MAX).branches

    def curves(u):
        low = u <= br.threshold
        g = np.where(low, br.g_inv(np.where(low, u, 0.0)), np.nan)
        f = np.where(low, br.f_inv(np.where(low, u, 0.0)), np.nan)
        high = np.where(low, np.nan, 1.0 - u if br.reflect_above else u)
        return g, f, high

    mg, mf, mh = curves(x)
    ng, nf, nh = curves(1.0 - x)
    rows = list(zip(x, mg, mf, mh, ng, nf, nh))
    return Table(("u1", "max_g_branch", "max_f_branch", "max_direct", "min_g_branch",
                  "min_f_branch", "min_direct"), rows)


def fig1(n=None, seed=42, threads=None) -> Table:
    return _support_curves(Normal(0.0, 1.0))


def fig2(n=None, seed=42, threads=None) -> Table:
    return _support_curves(Uniform(-1.0, 3.0))


def fig3(n=None, seed=42, threads=None) -> Table:
    return _support_curves(Exponential(1.0, -math.log(2.0)))


def _fig_tail(which: str, n, seed, threads) -> Table:
    n = n or DEFAULT_N["fig4"]
    cols = []
    for lam in (0.0, 1.0):
        x = sample_mixture(MixtureParams(*FIG_RATES, lam, Parity.EVEN), n, seed, threads)
        cols.append([getattr(tail_risk(x[:, 2], x[:, 3], p, seed), which) for p in FIG_P_GRID])
    rows = [(p, a.value, a.stderr, b.value, b.stderr) for p, a, b in zip(FIG_P_GRID, *cols)]
    return Table(("p", f"{which}_lambda0", f"{which}_lambda0_stderr",
                  f"{which}_lambda1", f"{which}_lambda1_stderr"), rows)


def fig4(n=None, seed=42, threads=None) -> Table:
    return _fig_tail("es", n, seed, threads)


def fig5(n=None, seed=42, threads=None) -> Table:
    return _fig_tail("mes", n, seed, threads)


def fig6(n=None, seed=42, threads=None) -> Table:
    n = n or DEFAULT_N["fig6"]
    series = []
    header = ["term"]
    for status in (Status.LAST, Status.JOINT):
        for lam in (0.0, 1.0):
            spec = AnnuitySpec(*ANNUITY_RATES, term=1, mix=lam, status=status)
            series.append(annuity_terms(spec, FIG6_MAX_TERM, n, seed, threads))
            header += [f"{status.value}_lambda{lam:g}", f"{status.value}_lambda{lam:g}_stderr"]
        indep = Status.LAST_INDEP if status is Status.LAST else Status.JOINT_INDEP
        series.append(annuity_terms(AnnuitySpec(*ANNUITY_RATES, term=1, status=indep), FIG6_MAX_TERM))
        header += [f"{indep.value}", f"{indep.value}_stderr"]
    rows = []
    for k in range(FIG6_MAX_TERM):
        rows.append((k + 1, *_cells([s[k] for s in series])))
    return Table(tuple(header), rows)


TARGETS: dict[str, Callable[..., Table]] = {
    "table1": table1,
    "table2": table2,
    "table3": table3,
    "table4": table4,
    "table5": table5,
    "fig1": fig1,
    "fig2": fig2,
    "fig3": fig3,
    "fig4": fig4,
    "fig5": fig5,
    "fig6": fig6,
}


def reproduce(target: str, n: int | None = None, seed: int = 42, threads: int | None = None) -> Table:
    try:
        fn = TARGETS[target.lower()]
    except KeyError:
        raise UnknownTarget(f"unknown target {target!r}; expected one of {sorted(TARGETS)}") from None
    return fn(n=n, seed=seed, threads=threads)
