"""Sharp bounds on mixed moments E(X1 X2^d), their extremal couplings, and
mixture-copula applications to tail risk and two-life annuities."""

__version__ = "0.1.0"

from .annuities import (
    AnnuitySpec,
    Status,
    annuity_pv,
    annuity_sweep,
    annuity_terms,
    calibrate_rates,
    independent_joint_limit,
    joint_survival,
    survival,
)
from .bounds import BoundResult, Method, centered_bounds, raw_bounds, table1_coskewness, uniform_centered_bound
from .couplings import CouplingSpec, Direction, SupportCase, branch_functions, sample_pair, sample_unit_pairs, sample_xy
from .dependence import PairedSample, centered_moment, rank_coefficient, rank_coefficient_model
from .errors import (
    ComomentsError,
    ComputeError,
    DegenerateMarginal,
    DegenerateSample,
    DivergentMoment,
    DomainError,
    InsufficientSample,
    OrderMismatch,
    OutOfRange,
    ParseError,
    QuadratureFailure,
    UnknownTarget,
    UnsupportedCase,
)
from .marginals import (
    AffineMarginal,
    Empirical,
    Exponential,
    Laplace,
    Marginal,
    Normal,
    PowerLaw,
    StandardizedMarginal,
    StudentT,
    Uniform,
    parse_marginal,
)
from .mixture import MixtureParams, Parity, lambda_for_moment, mixed_moment_sweep, moment_of_lambda, sample_mixture
from .reproduce import TARGETS, reproduce
from .risk import TailRisk, es_mixture, mes_mixture, risk_sweep, tail_risk, var_empirical
from .sim import Estimate, RngStream, StreamingMoments, merge_moments

__all__ = [
    "__version__",
    "AffineMarginal",
    "AnnuitySpec",
    "BoundResult",
    "ComomentsError",
    "ComputeError",
    "CouplingSpec",
    "DegenerateMarginal",
    "DegenerateSample",
    "Direction",
    "DivergentMoment",
    "DomainError",
    "Empirical",
    "Estimate",
    "Exponential",
    "InsufficientSample",
    "Laplace",
    "Marginal",
    "Method",
    "MixtureParams",
    "Normal",
    "OrderMismatch",
    "OutOfRange",
    "PairedSample",
    "Parity",
    "ParseError",
    "PowerLaw",
    "QuadratureFailure",
    "RngStream",
    "StandardizedMarginal",
    "Status",
    "StreamingMoments",
    "StudentT",
    "SupportCase",
    "TARGETS",
    "TailRisk",
    "Uniform",
    "UnknownTarget",
    "UnsupportedCase",
    "annuity_pv",
    "annuity_sweep",
    "annuity_terms",
    "branch_functions",
    "calibrate_rates",
    "centered_bounds",
    "centered_moment",
    "es_mixture",
    "independent_joint_limit",
    "joint_survival",
    "lambda_for_moment",
    "merge_moments",
    "mes_mixture",
    "mixed_moment_sweep",
    "moment_of_lambda",
    "parse_marginal",
    "rank_coefficient",
    "rank_coefficient_model",
    "raw_bounds",
    "reproduce",
    "risk_sweep",
    "sample_mixture",
    "sample_pair",
    "sample_unit_pairs",
    "sample_xy",
    "survival",
    "table1_coskewness",
    "tail_risk",
    "uniform_centered_bound",
    "var_empirical",
]
