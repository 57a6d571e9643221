"""Numerical toolkit for one-dimensional backward stochastic differential
equations with driver f(y)|z|^2 on an open interval.

The strictly increasing transform u(x) = int_alpha^x exp(2 int_alpha^y f)
turns the quadratic equation into a plain conditional expectation:
Y_t = u^{-1}(E[u(xi) | F_t]), Z_t = z_t / u'(Y_t). The package builds and
inverts u (handling endpoint singularities and infinite endpoints), solves
the equation by exact-law quadrature or least-squares Monte Carlo,
classifies solution-space memberships from declared metadata, verifies
comparison orderings by simulation, and evaluates the associated parabolic
equation's viscosity solution.
"""

from .errors import (ConfigError, DomainError, NotLocallyIntegrableError,
                     NumericalError, PreconditionError, QbsdeError,
                     RangeViolationError, RegressionError, SimulationError,
                     TheoremViolationError, TransformRangeError,
                     UnsupportedBoundError, ValidationError)
from .intervals import OpenInterval
from .generators import (Generator, abs_log_over_y, builtin, constant,
                         delta_over_y, from_expression, half_over_y,
                         inv_y_squared_plus_one, neg_inv_y1_y6,
                         parse_expression)
from .transform import IntegrabilityTransform, build_transform
from .classifier import (SpaceReport, TailDiagnostic, TerminalMeta,
                         check_necessary_condition, classify)
from .sde import (ForwardModel, PathBundle, brownian_model, first_exit,
                  geometric_brownian_model, scaled_brownian_model, simulate)
from .bsde import (BsdeProblem, BsdeSolution, QuadratureBsdeSolver,
                   StepTerminal, martingale_diagnostic, residual_check,
                   solve_quadrature, solve_regression)
from .comparison import (ComparisonCase, ComparisonVerdict, ConverseReport,
                         compare, converse_experiment)
from .pde import (PdeProblem, ValueSurface, domain_doubling_check,
                  pde_residual, solve_fd_oracle, solve_feynman_kac)
from .config import RunConfig

__version__ = "0.1.0"

__all__ = [
    "QbsdeError", "ConfigError", "DomainError", "TransformRangeError",
    "NotLocallyIntegrableError", "UnsupportedBoundError", "PreconditionError",
    "ValidationError", "SimulationError", "RegressionError",
    "RangeViolationError", "NumericalError", "TheoremViolationError",
    "OpenInterval", "Generator", "builtin", "constant", "half_over_y",
    "delta_over_y", "abs_log_over_y", "inv_y_squared_plus_one",
    "neg_inv_y1_y6", "from_expression", "parse_expression",
    "IntegrabilityTransform", "build_transform",
    "TerminalMeta", "SpaceReport", "TailDiagnostic", "classify",
    "check_necessary_condition",
    "ForwardModel", "PathBundle", "simulate", "first_exit",
    "brownian_model", "scaled_brownian_model", "geometric_brownian_model",
    "BsdeProblem", "BsdeSolution", "StepTerminal", "QuadratureBsdeSolver",
    "solve_quadrature", "solve_regression", "residual_check",
    "martingale_diagnostic",
    "ComparisonCase", "ComparisonVerdict", "ConverseReport", "compare",
    "converse_experiment",
    "PdeProblem", "ValueSurface", "solve_feynman_kac", "solve_fd_oracle",
    "domain_doubling_check", "pde_residual",
    "RunConfig",
]
