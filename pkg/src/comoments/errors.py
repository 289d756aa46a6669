"""Exception hierarchy.

Three categories map onto CLI exit codes: parse failures (2), domain
violations (3) and numerical/compute failures (4).
"""


class ComomentsError(Exception):
    """Base class for all package errors."""

    exit_code = 1
    category = "error"


class ParseError(ComomentsError, ValueError):
    exit_code = 2
    category = "parse"


class DomainError(ComomentsError, ValueError):
    exit_code = 3
    category = "domain"


class ComputeError(ComomentsError, ArithmeticError):
    exit_code = 4
    category = "compute"


class UnsupportedCase(DomainError):
    """The requested construction is not defined for these inputs."""


class DegenerateMarginal(DomainError):
    pass


class DegenerateSample(DomainError):
    pass


class OutOfRange(DomainError):
    pass


class InsufficientSample(DomainError):
    pass


class OrderMismatch(DomainError):
    pass


class UnknownTarget(DomainError):
    pass


class DivergentMoment(ComputeError):
    """A required expectation is infinite or numerically unstable."""


class QuadratureFailure(DivergentMoment):
    """Adaptive quadrature did not reach the requested tolerance."""
