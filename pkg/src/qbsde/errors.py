"""Exception hierarchy shared by all qbsde modules.

Exit-code mapping used by the CLI:
    1 -- configuration / parsing problems
    2 -- precondition violations (bad inputs, failed hypothesis checks)
    3 -- numerical failures (divergence, rank deficiency, instability)
    4 -- theorem-violation verdicts from the comparison harness
"""


class QbsdeError(Exception):
    """Base class for all package errors."""

    exit_code = 3


class ConfigError(QbsdeError):
    """Invalid configuration file, expression, or engine selection."""

    exit_code = 1


class DomainError(QbsdeError):
    """A point lies outside the open interval where f is defined."""

    exit_code = 2


class TransformRangeError(QbsdeError):
    """A value lies outside V, the image of the transform."""

    exit_code = 2


class NotLocallyIntegrableError(QbsdeError):
    """The inner integral of f diverges at an interior point."""

    exit_code = 2


class UnsupportedBoundError(QbsdeError):
    """An operation needs a declared bound on f that is absent."""

    exit_code = 2


class PreconditionError(QbsdeError):
    """A documented precondition of an operation failed."""

    exit_code = 2


class ValidationError(QbsdeError):
    """Declared metadata is internally inconsistent."""

    exit_code = 2


class SimulationError(QbsdeError):
    """Non-finite drift/diffusion or state during forward simulation."""


class RegressionError(QbsdeError):
    """Rank-deficient design matrix in the regression engine."""


class RangeViolationError(QbsdeError):
    """Too many fitted values escaped V (clipping budget exceeded)."""


class NumericalError(QbsdeError):
    """Generic numerical failure (divergent quadrature, instability)."""


class TheoremViolationError(QbsdeError):
    """A comparison verdict contradicts the asserted ordering."""

    exit_code = 4
