"""Generator functions f on an open interval, builtins, and a small
expression grammar for user-supplied f.

A :class:`Generator` bundles the pointwise-evaluable function with the
declared metadata the rest of the toolkit relies on (sign class, constant
bounds, an antiderivative when one is known in closed form).  Builtin
generators additionally carry closed-form transforms so that the exact
evaluation path is available.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, ValidationError
from .intervals import OpenInterval

SIGN_CLASSES = ("nonnegative", "nonpositive", "mixed")


@dataclass(frozen=True)
class ClosedTransform:
    """Exact formulas for u, u' and the inverse, relative to a base point."""

    u: Callable
    u_prime: Callable
    u_inv: Optional[Callable] = None


@dataclass
class Generator:
    """A locally integrable function f on an open interval.

    Parameters
    ----------
    f : callable
        Vectorized evaluation of f; may blow up at the endpoints.
    domain : OpenInterval
        The open interval D on which f is defined.
    antiderivative : callable, optional
        F with F' = f, used to make the inner integral exact.
    sign_class : {"nonnegative", "nonpositive", "mixed"}
        Declared sign of f almost everywhere on D.
    lower_bound, upper_bound : float, optional
        Declared constants with lower_bound <= f <= upper_bound a.e.
    locally_bounded : bool
        Whether f is bounded on compact subsets of D.
    closed_transform : callable, optional
        ``alpha -> ClosedTransform`` giving exact u-formulas.
    """

    f: Callable
    domain: OpenInterval
    antiderivative: Optional[Callable] = None
    sign_class: str = "mixed"
    lower_bound: Optional[float] = None
    upper_bound: Optional[float] = None
    locally_bounded: bool = True
    name: str = ""
    closed_transform: Optional[Callable] = None
    singular_points: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.sign_class not in SIGN_CLASSES:
            raise ValidationError(f"unknown sign class {self.sign_class!r}")
        if self.sign_class == "nonnegative" and self.lower_bound is not None \
                and self.lower_bound < 0:
            raise ValidationError("nonnegative f cannot have a negative "
                                  "declared lower bound")
        if self.sign_class == "nonpositive" and self.upper_bound is not None \
                and self.upper_bound > 0:
            raise ValidationError("nonpositive f cannot have a positive "
                                  "declared upper bound")

    def __call__(self, y):
        return self.f(np.asarray(y, dtype=float))

    def validate_declarations(self, n: int = 257, rtol: float = 1e-9):
        """Sample a dense interior grid and check the declared bounds and
        sign class hold on it (declared singular points are excluded)."""
        grid = self.domain.interior_grid(n)
        if self.singular_points:
            for s in self.singular_points:
                grid = grid[np.abs(grid - s) > 1e-9]
        vals = self(grid)
        if not np.all(np.isfinite(vals)):
            raise ValidationError(f"f({self.name or 'generator'}) is "
                                  "non-finite on the test grid")
        tol = rtol * max(1.0, float(np.max(np.abs(vals))))
        if self.lower_bound is not None and np.min(vals) < self.lower_bound - tol:
            raise ValidationError("declared lower bound violated on grid")
        if self.upper_bound is not None and np.max(vals) > self.upper_bound + tol:
            raise ValidationError("declared upper bound violated on grid")
        if self.sign_class == "nonnegative" and np.min(vals) < -tol:
            raise ValidationError("declared nonnegative but f < 0 on grid")
        if self.sign_class == "nonpositive" and np.max(vals) > tol:
            raise ValidationError("declared nonpositive but f > 0 on grid")
        return True


# ---------------------------------------------------------------------------
# builtins
# ---------------------------------------------------------------------------

def constant(c: float, domain: OpenInterval | None = None) -> Generator:
    """f == c on R (or a supplied interval), with exact transform."""
    domain = domain or OpenInterval(-math.inf, math.inf)
    c = float(c)

    def closed(alpha: float) -> ClosedTransform:
        if c == 0.0:
            return ClosedTransform(
                u=lambda x: np.asarray(x, dtype=float) - alpha,
                u_prime=lambda x: np.ones_like(np.asarray(x, dtype=float)),
                u_inv=lambda y: np.asarray(y, dtype=float) + alpha,
            )
        return ClosedTransform(
            u=lambda x: np.expm1(2.0 * c * (np.asarray(x, dtype=float) - alpha)) / (2.0 * c),
            u_prime=lambda x: np.exp(2.0 * c * (np.asarray(x, dtype=float) - alpha)),
            u_inv=lambda y: alpha + np.log1p(2.0 * c * np.asarray(y, dtype=float)) / (2.0 * c),
        )

    # c == 0 satisfies f >= 0 a.e., which is the more useful declaration
    sign = "nonpositive" if c < 0 else "nonnegative"
    return Generator(
        f=lambda y: np.full_like(np.asarray(y, dtype=float), c),
        domain=domain,
        antiderivative=lambda y: c * np.asarray(y, dtype=float),
        sign_class=sign,
        lower_bound=c,
        upper_bound=c,
        name=f"const {c:g}",
        closed_transform=closed,
    )


def delta_over_y(delta: float, hi: float = math.inf) -> Generator:
    """f(y) = delta / y on (0, hi).  u is affine in x^(2*delta+1)."""
    delta = float(delta)
    domain = OpenInterval(0.0, hi)
    q = 2.0 * delta + 1.0

    def closed(alpha: float) -> ClosedTransform:
        if q == 0.0:  # delta = -1/2: u' = alpha / x
            return ClosedTransform(
                u=lambda x: alpha * np.log(np.asarray(x, dtype=float) / alpha),
                u_prime=lambda x: alpha / np.asarray(x, dtype=float),
                u_inv=lambda y: alpha * np.exp(np.asarray(y, dtype=float) / alpha),
            )
        return ClosedTransform(
            u=lambda x: alpha * ((np.asarray(x, dtype=float) / alpha) ** q - 1.0) / q,
            u_prime=lambda x: (np.asarray(x, dtype=float) / alpha) ** (q - 1.0),
            u_inv=lambda y: alpha * (q * np.asarray(y, dtype=float) / alpha + 1.0) ** (1.0 / q),
        )

    return Generator(
        f=lambda y: delta / np.asarray(y, dtype=float),
        domain=domain,
        antiderivative=lambda y: delta * np.log(np.asarray(y, dtype=float)),
        sign_class="nonnegative" if delta >= 0 else "nonpositive",
        name=f"delta_over_y {delta:g}",
        closed_transform=closed,
    )


def half_over_y(hi: float = math.inf) -> Generator:
    """f(y) = 1/(2y) on (0, hi); u(x) = (x^2 - alpha^2) / (2 alpha)."""
    g = delta_over_y(0.5, hi=hi)
    g.name = "half_over_y"
    return g


def abs_log_over_y() -> Generator:
    """f(y) = |ln y| / y on (0, inf); antiderivative sign(ln y)(ln y)^2/2."""

    def F(y):
        ly = np.log(np.asarray(y, dtype=float))
        return np.sign(ly) * ly * ly / 2.0

    return Generator(
        f=lambda y: np.abs(np.log(np.asarray(y, dtype=float))) / np.asarray(y, dtype=float),
        domain=OpenInterval(0.0, math.inf),
        antiderivative=F,
        sign_class="nonnegative",
        lower_bound=0.0,
        name="abs_log_over_y",
    )


def inv_y_squared_plus_one() -> Generator:
    """f(y) = 1/y^2 + 1 on (0, inf); f >= 1, antiderivative y - 1/y."""
    return Generator(
        f=lambda y: 1.0 / np.square(np.asarray(y, dtype=float)) + 1.0,
        domain=OpenInterval(0.0, math.inf),
        antiderivative=lambda y: np.asarray(y, dtype=float) - 1.0 / np.asarray(y, dtype=float),
        sign_class="nonnegative",
        lower_bound=1.0,
        name="inv_y_squared_plus_one",
    )


def neg_inv_y1_y6() -> Generator:
    """f(y) = -1 / ((y-1)(y-6)) on (1, 6).

    Partial fractions give exp(2 int f) proportional to
    ((y-1)/(6-y))^(2/5), so both improper endpoint integrals converge and
    the image V is bounded.
    """

    def f(y):
        y = np.asarray(y, dtype=float)
        return -1.0 / ((y - 1.0) * (y - 6.0))

    def F(y):
        y = np.asarray(y, dtype=float)
        return (np.log(y - 1.0) - np.log(6.0 - y)) / 5.0

    return Generator(
        f=f,
        domain=OpenInterval(1.0, 6.0),
        antiderivative=F,
        sign_class="nonnegative",
        lower_bound=0.0,
        locally_bounded=True,
        name="neg_inv_(y-1)(y-6)",
    )


_BUILTIN_FACTORIES = {
    "const": lambda args: constant(_one_float(args, "const")),
    "half_over_y": lambda args: half_over_y(*( [float(args[0])] if args else [] )),
    "delta_over_y": lambda args: delta_over_y(_one_float(args, "delta_over_y")),
    "abs_log_over_y": lambda args: abs_log_over_y(),
    "inv_y_squared_plus_one": lambda args: inv_y_squared_plus_one(),
    "neg_inv_(y-1)(y-6)": lambda args: neg_inv_y1_y6(),
}


def _one_float(args, name):
    if len(args) != 1:
        raise ConfigError(f"builtin {name!r} needs exactly one parameter")
    return float(args[0])


def builtin(spec: str) -> Generator:
    """Create a builtin generator from a spec string like ``const 0.5``."""
    parts = spec.split()
    if not parts:
        raise ConfigError("empty generator spec")
    name, args = parts[0], parts[1:]
    if name not in _BUILTIN_FACTORIES:
        raise ConfigError(f"unknown builtin generator {name!r}; known: "
                          f"{sorted(_BUILTIN_FACTORIES)}")
    try:
        return _BUILTIN_FACTORIES[name](args)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad parameters for builtin {name!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# expression grammar:  y, numbers, + - * / ^, exp, log, abs, parentheses
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
                       r"|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*/^()]))")

_FUNCTIONS = {"exp": np.exp, "log": np.log, "abs": np.abs, "sqrt": np.sqrt}


def _tokenize(text: str):
    tokens, pos = [], 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise ConfigError(f"cannot tokenize expression at column {pos + 1}: "
                              f"{text[pos:pos + 10]!r}")
        num, ident, op = m.groups()
        if num is not None:
            tokens.append(("num", float(num)))
        elif ident is not None:
            tokens.append(("ident", ident))
        else:
            tokens.append(("op", "^" if op == "**" else op))
        pos = m.end()
    tokens.append(("end", None))
    return tokens


class _Parser:
    """Recursive-descent parser compiling to a numpy closure of one variable."""

    def __init__(self, tokens, variable):
        self.tokens = tokens
        self.i = 0
        self.variable = variable

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, val = self.take()
        if kind != "op" or val != op:
            raise ConfigError(f"expected {op!r}, got {val!r}")

    def parse(self):
        fn = self.expr()
        if self.peek()[0] != "end":
            raise ConfigError(f"trailing input in expression: {self.peek()[1]!r}")
        return fn

    def expr(self):
        fn = self.term()
        while self.peek() == ("op", "+") or self.peek() == ("op", "-"):
            op = self.take()[1]
            rhs = self.term()
            lhs = fn
            fn = (lambda a, b: lambda y: a(y) + b(y)) (lhs, rhs) if op == "+" \
                else (lambda a, b: lambda y: a(y) - b(y))(lhs, rhs)
        return fn

    def term(self):
        fn = self.unary()
        while self.peek() == ("op", "*") or self.peek() == ("op", "/"):
            op = self.take()[1]
            rhs = self.unary()
            lhs = fn
            fn = (lambda a, b: lambda y: a(y) * b(y))(lhs, rhs) if op == "*" \
                else (lambda a, b: lambda y: a(y) / b(y))(lhs, rhs)
        return fn

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            inner = self.unary()
            return lambda y: -inner(y)
        if self.peek() == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            expo = self.unary()  # right-associative
            return lambda y: base(y) ** expo(y)
        return base

    def atom(self):
        kind, val = self.take()
        if kind == "num":
            return lambda y, v=val: np.full_like(np.asarray(y, dtype=float), v)
        if kind == "ident":
            if val == self.variable:
                return lambda y: np.asarray(y, dtype=float)
            if val in _FUNCTIONS:
                self.expect_op("(")
                inner = self.expr()
                self.expect_op(")")
                return lambda y, fn=_FUNCTIONS[val]: fn(inner(y))
            raise ConfigError(f"unknown identifier {val!r} (variable is "
                              f"{self.variable!r}; functions: exp, log, abs)")
        if kind == "op" and val == "(":
            inner = self.expr()
            self.expect_op(")")
            return inner
        raise ConfigError(f"unexpected token {val!r} in expression")


def parse_expression(text: str, variable: str = "y") -> Callable:
    """Compile an expression string to a vectorized function of one variable."""
    return _Parser(_tokenize(text), variable).parse()


def from_expression(text: str, domain: OpenInterval, *, sign_class: str = "mixed",
                    lower_bound: float | None = None,
                    upper_bound: float | None = None) -> Generator:
    fn = parse_expression(text, "y")
    return Generator(f=fn, domain=domain, sign_class=sign_class,
                     lower_bound=lower_bound, upper_bound=upper_bound,
                     name=text)
