"""Command-line interface.

Every subcommand accepts ``--seed``, ``--threads``, ``--format`` and
``--out``; Monte Carlo subcommands also take ``-n``.  Failures print a JSON
object ``{"error": <category>, "message": ...}`` on stderr and exit with 2
(parse), 3 (domain) or 4 (compute).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .annuities import DEFAULT_INTEREST, AnnuitySpec, annuity_pv, calibrate_rates
from .bounds import Method, centered_bounds, raw_bounds
from .couplings import CouplingSpec, Direction, sample_xy
from .dependence import PairedSample, rank_coefficient, rank_coefficient_model
from .errors import ComomentsError, ParseError
from .marginals import parse_marginal
from .mixture import MixtureParams, Parity, sample_mixture
from .reproduce import TARGETS, Table, reproduce, to_csv
from .risk import risk_sweep

__all__ = ["RunConfig", "build_parser", "parse_config", "run", "reproduce_all", "main"]

SUBCOMMANDS = ("bounds", "rank-coeff", "copula-sample", "mixture-sample", "es", "mes", "annuity", "reproduce")


@dataclass(frozen=True)
class RunConfig:
    """A fully parsed invocation; :meth:`to_argv` inverts :func:`parse_config`."""

    subcommand: str
    options: tuple[tuple[str, object], ...] = ()
    n: int | None = None
    seed: int = 42
    threads: int | None = None
    out: str | None = None
    format: str = "csv"

    def option(self, name: str, default=None):
        return dict(self.options).get(name, default)

    def to_argv(self) -> list[str]:
        argv = [self.subcommand]
        spec = _OPTION_SPECS[self.subcommand]
        for name, value in self.options:
            kind = spec[name]
            if kind == "positional":
                argv.append(str(value))
            elif kind == "flag":
                if value:
                    argv.append(_flag(name))
            elif name == "life_table" and value is not None:
                argv += [_flag(name), f"x={value[0]!r},y={value[1]!r}"]
            elif value is not None:
                argv += [_flag(name), _render(value)]
        if self.n is not None:
            argv += ["-n", str(self.n)]
        argv += ["--seed", str(self.seed)]
        if self.threads is not None:
            argv += ["--threads", str(self.threads)]
        if self.out is not None:
            argv += ["--out", self.out]
        argv += ["--format", self.format]
        return argv


def _flag(name: str) -> str:
    if name == "lambda_":
        return "--lambda"
    if name == "d":
        return "-d"
    return "--" + name.replace("_", "-")


def _render(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ",".join(_render(v) for v in value)
    return str(value)


# name -> "value" | "flag" | "positional", per subcommand, in argv order.
_OPTION_SPECS: dict[str, dict[str, str]] = {}


def _int(text: str) -> int:
    try:
        value = float(text) if any(c in text for c in ".eE") else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if isinstance(value, float):
        if not value.is_integer():
            raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
        value = int(value)
    return value


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def _life_table(text: str) -> tuple[float, float]:
    parts = dict(p.split("=", 1) for p in text.split(",") if "=" in p)
    try:
        return float(parts["x"]), float(parts["y"])
    except (KeyError, ValueError):
        raise argparse.ArgumentTypeError(f"expected x=<years>,y=<years>, got {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParseError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_int, default=42, help="master seed (default 42)")
    common.add_argument("--threads", type=_int, default=None, help="worker threads (default: all CPUs)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", default=None, help="output file (default: stdout)")
    mc = argparse.ArgumentParser(add_help=False)
    mc.add_argument("-n", type=_int, default=None, help="Monte Carlo sample size")

    parser = _Parser(prog="comoments", description="Sharp bounds on mixed moments and mixture-copula risk tools.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def add(name, help_text, spec):
        _OPTION_SPECS[name] = spec
        return sub.add_parser(name, help=help_text, parents=[common, mc])

    p = add("bounds", "bounds on E(X1 X2^d) or its standardised version",
            {"marginal1": "value", "marginal2": "value", "d": "value", "centered": "flag", "method": "value"})
    p.add_argument("--marginal1", required=True)
    p.add_argument("--marginal2", required=True)
    p.add_argument("-d", type=_int, required=True)
    p.add_argument("--centered", action="store_true")
    p.add_argument("--method", choices=[m.value for m in Method], default="quad")

    p = add("rank-coeff", "standardised rank coefficient RS_d",
            {"input": "value", "d": "value", "model": "value", "marginal2": "value",
             "direction": "value", "lambda_": "value", "parity": "value"})
    p.add_argument("--input", default=None, help="CSV with two numeric columns (or x1,x2 columns)")
    p.add_argument("-d", type=_int, required=True)
    p.add_argument("--model", choices=("extremal", "mixture"), default=None)
    p.add_argument("--marginal2", default=None)
    p.add_argument("--direction", choices=("max", "min"), default=None)
    p.add_argument("--lambda", dest="lambda_", type=float, default=None)
    p.add_argument("--parity", choices=("even", "odd"), default=None)

    p = add("copula-sample", "sample an extremal coupling",
            {"marginal1": "value", "marginal2": "value", "d": "value", "direction": "value"})
    p.add_argument("--marginal1", required=True)
    p.add_argument("--marginal2", required=True)
    p.add_argument("-d", type=_int, required=True)
    p.add_argument("--direction", choices=("max", "min"), default="max")

    p = add("mixture-sample", "sample the mixture copula with exponential losses",
            {"rate1": "value", "rate2": "value", "lambda_": "value", "parity": "value"})
    _mixture_args(p)

    for name, text in (("es", "expected shortfall of L1 + L2"), ("mes", "marginal expected shortfall of L1")):
        p = add(name, text, {"rate1": "value", "rate2": "value", "lambda_": "value", "parity": "value",
                             "p": "value", "sweep_lambda": "value"})
        _mixture_args(p)
        p.add_argument("--p", type=float, default=0.95, help="prudence level")
        p.add_argument("--sweep-lambda", type=_float_list, default=None)

    p = add("annuity", "joint-life or last-survivor annuity value",
            {"status": "value", "rate_x": "value", "rate_y": "value", "life_table": "value",
             "interest": "value", "term": "value", "lambda_": "value"})
    p.add_argument("--status", choices=("joint", "last", "joint-indep", "last-indep"), default="joint")
    p.add_argument("--rate-x", type=float, default=None)
    p.add_argument("--rate-y", type=float, default=None)
    p.add_argument("--life-table", type=_life_table, default=None)
    p.add_argument("--interest", type=float, default=DEFAULT_INTEREST)
    p.add_argument("--term", type=_int, default=30)
    p.add_argument("--lambda", dest="lambda_", type=float, default=0.5)

    p = add("reproduce", "regenerate a table or figure series as CSV", {"target": "positional"})
    p.add_argument("target", help="one of " + ", ".join(sorted(TARGETS)) + ", or 'all' (needs --out DIR)")
    return parser


def _mixture_args(p):
    p.add_argument("--rate1", type=float, default=1.0)
    p.add_argument("--rate2", type=float, default=1.0)
    p.add_argument("--lambda", dest="lambda_", type=float, default=0.5)
    p.add_argument("--parity", choices=("even", "odd"), default="even")


def parse_config(argv: Sequence[str]) -> RunConfig:
    ns = build_parser().parse_args(list(argv))
    spec = _OPTION_SPECS[ns.subcommand]
    options = tuple((name, getattr(ns, name)) for name in spec)
    return RunConfig(ns.subcommand, options, ns.n, ns.seed, ns.threads, ns.out, ns.format)


# -- execution ------------------------------------------------------------------


@dataclass
class Output:
    header: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    records: list[dict] | dict | None = None


def _estimate_record(e, **extra) -> dict:
    out = dict(extra)
    out.update(e.as_dict())
    return out


def _cmd_bounds(cfg: RunConfig) -> Output:
    m1 = parse_marginal(cfg.option("marginal1"))
    m2 = parse_marginal(cfg.option("marginal2"))
    fn = centered_bounds if cfg.option("centered") else raw_bounds
    r = fn(m1, m2, cfg.option("d"), Method(cfg.option("method")), cfg.n, cfg.seed, cfg.threads)
    rec = r.as_dict()
    return Output(tuple(rec), [tuple(rec.values())], rec)


def _read_pairs(path: str) -> PairedSample:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError(f"{path} is empty")
    header = None
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        header, rows = [c.strip() for c in rows[0]], rows[1:]
    if header is not None and {"x1", "x2"} <= set(header):
        cols = (header.index("x1"), header.index("x2"))
    elif rows and len(rows[0]) == 2:
        cols = (0, 1)
    else:
        raise ParseError(f"{path}: expected two columns or a header containing x1 and x2")
    try:
        data = np.array([[float(r[cols[0]]), float(r[cols[1]])] for r in rows])
    except (ValueError, IndexError) as exc:
        raise ParseError(f"{path}: malformed row ({exc})") from exc
    return PairedSample.from_rows(data)


def _cmd_rank(cfg: RunConfig) -> Output:
    d = cfg.option("d")
    model = cfg.option("model")
    if model is None:
        if cfg.option("input") is None:
            raise ParseError("rank-coeff needs --input or --model")
        sample = _read_pairs(cfg.option("input"))
        value = rank_coefficient(sample, d)
        rec = {"value": value, "stderr": None, "n": sample.n, "seed": None}
        return Output(tuple(rec), [tuple(rec.values())], rec)
    if cfg.n is None:
        raise ParseError("--model needs -n")
    if model == "extremal":
        if cfg.option("marginal2") is None:
            raise ParseError("--model extremal needs --marginal2")
        coupling = CouplingSpec(parse_marginal(cfg.option("marginal2")), d,
                                Direction(cfg.option("direction") or "max"))
    else:
        lam = cfg.option("lambda_")
        coupling = MixtureParams(1.0, 1.0, 0.5 if lam is None else lam,
                                 Parity(cfg.option("parity") or Parity.of(d).value))
    est = rank_coefficient_model(coupling, d, cfg.n, cfg.seed, cfg.threads)
    rec = est.as_dict()
    return Output(tuple(rec), [tuple(rec.values())], rec)


def _cmd_copula(cfg: RunConfig) -> Output:
    spec = CouplingSpec(parse_marginal(cfg.option("marginal2")), cfg.option("d"),
                        Direction(cfg.option("direction")))
    m1 = parse_marginal(cfg.option("marginal1"))
    data = sample_xy(spec, m1, cfg.n or 10_000, cfg.seed, cfg.threads, with_uniforms=True)
    return _array_output(("u1", "u2", "x1", "x2"), data)


def _mixture_params(cfg: RunConfig) -> MixtureParams:
    return MixtureParams(cfg.option("rate1"), cfg.option("rate2"), cfg.option("lambda_"),
                         Parity(cfg.option("parity")))


def _cmd_mixture(cfg: RunConfig) -> Output:
    data = sample_mixture(_mixture_params(cfg), cfg.n or 10_000, cfg.seed, cfg.threads)
    return _array_output(("u1", "u2", "l1", "l2"), data)


def _array_output(header, data: np.ndarray) -> Output:
    rows = [tuple(r) for r in data.tolist()]
    return Output(header, rows, [dict(zip(header, r)) for r in rows])


def _cmd_tail(cfg: RunConfig) -> Output:
    which = cfg.subcommand
    params = _mixture_params(cfg)
    lambdas = cfg.option("sweep_lambda") or (params.mix,)
    p = cfg.option("p")
    res = risk_sweep(params, p, lambdas, cfg.n or 1_000_000, cfg.seed, cfg.threads)
    records = [_estimate_record(getattr(r, which), **{"lambda": float(lam)}) for lam, r in zip(lambdas, res)]
    header = ("lambda", "value", "stderr", "n", "seed", "p")
    rows = [tuple(rec[h] for h in header) for rec in records]
    return Output(header, rows, records if cfg.option("sweep_lambda") else records[0])


def _cmd_annuity(cfg: RunConfig) -> Output:
    if cfg.option("life_table") is not None:
        rate_x, rate_y = calibrate_rates(*cfg.option("life_table"))
    else:
        rate_x, rate_y = cfg.option("rate_x"), cfg.option("rate_y")
        if rate_x is None or rate_y is None:
            raise ParseError("annuity needs --rate-x and --rate-y, or --life-table")
    spec = AnnuitySpec(rate_x, rate_y, cfg.option("interest"), cfg.option("term"),
                       cfg.option("lambda_"), cfg.option("status"))
    est = annuity_pv(spec, cfg.n or 1_000_000, cfg.seed, cfg.threads)
    rec = _estimate_record(est, status=spec.status.value, rate_x=rate_x, rate_y=rate_y)
    return Output(tuple(rec), [tuple(rec.values())], rec)


def _cmd_reproduce(cfg: RunConfig) -> Output:
    target = cfg.option("target")
    if target == "all":
        raise ParseError("reproduce all writes one file per target and needs --out DIR")
    table: Table = reproduce(target, cfg.n, cfg.seed, cfg.threads)
    return Output(table.header, table.rows, [dict(zip(table.header, r)) for r in table.rows])


_COMMANDS = {
    "bounds": _cmd_bounds,
    "rank-coeff": _cmd_rank,
    "copula-sample": _cmd_copula,
    "mixture-sample": _cmd_mixture,
    "es": _cmd_tail,
    "mes": _cmd_tail,
    "annuity": _cmd_annuity,
    "reproduce": _cmd_reproduce,
}


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    return str(x)


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_clean(v) for v in x]
    return x


def render(out: Output, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_clean(out.records), default=_json_default) + "\n"
    return to_csv(Table(out.header, out.rows))


def run(cfg: RunConfig) -> str:
    """Execute a parsed configuration and return the rendered output."""
    if cfg.threads is not None and cfg.threads < 1:
        raise ParseError("--threads must be at least 1")
    return render(_COMMANDS[cfg.subcommand](cfg), cfg.format)


def reproduce_all(cfg: RunConfig) -> list[Path]:
    """Write ``<target>.csv`` (or ``.json``) for every target into the ``--out`` directory."""
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for target in TARGETS:
        sub = RunConfig("reproduce", (("target", target),), cfg.n, cfg.seed, cfg.threads, None, cfg.format)
        path = out_dir / f"{target}.{cfg.format}"
        with open(path, "w", newline="\n") as fh:
            fh.write(run(sub))
        written.append(path)
    return written


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
        if cfg.subcommand == "reproduce" and cfg.option("target") == "all" and cfg.out:
            for path in reproduce_all(cfg):
                sys.stdout.write(f"{path}\n")
            return 0
        text = run(cfg)
        if cfg.out:
            with open(cfg.out, "w", newline="\n") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0
    except ComomentsError as exc:
        sys.stderr.write(json.dumps({"error": exc.category, "type": type(exc).__name__,
                                     "message": str(exc)}) + "\n")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
