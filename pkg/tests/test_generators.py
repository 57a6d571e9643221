import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qbsde import (ConfigError, Generator, OpenInterval, ValidationError,
                   builtin, constant, delta_over_y, from_expression,
                   half_over_y, inv_y_squared_plus_one, neg_inv_y1_y6,
                   parse_expression)


def test_constant_values_and_metadata():
    g = constant(0.5)
    assert np.allclose(g(np.array([-3.0, 0.0, 7.0])), 0.5)
    assert g.sign_class == "nonnegative"
    assert g.lower_bound == 0.5 == g.upper_bound
    assert g.validate_declarations()


def test_half_over_y_matches_formula():
    g = half_over_y(hi=10.0)
    ys = np.array([0.5, 1.0, 4.0])
    assert np.allclose(g(ys), 1.0 / (2.0 * ys))
    assert g.domain.lo == 0.0 and g.domain.hi == 10.0
    # antiderivative differentiates back to f
    h = 1e-6
    F = g.antiderivative
    num = (F(ys + h) - F(ys - h)) / (2 * h)
    assert np.allclose(num, g(ys), rtol=1e-8)


def test_delta_over_y_antiderivative():
    g = delta_over_y(1.7)
    ys = np.linspace(0.2, 5.0, 11)
    h = 1e-6
    num = (g.antiderivative(ys + h) - g.antiderivative(ys - h)) / (2 * h)
    assert np.allclose(num, 1.7 / ys, rtol=1e-7)


def test_neg_inv_y1_y6_signs():
    g = neg_inv_y1_y6()
    ys = np.linspace(1.01, 5.99, 101)
    assert np.allclose(g(ys), -1.0 / ((ys - 1.0) * (ys - 6.0)))
    assert np.all(g(ys) > 0)          # negative product of signed factors
    assert g.sign_class == "nonnegative"


def test_inv_y_squared_plus_one_bound():
    g = inv_y_squared_plus_one()
    assert g.lower_bound == 1.0
    assert g.validate_declarations()


def test_declaration_consistency_rejected():
    with pytest.raises(ValidationError):
        Generator(f=lambda y: y, domain=OpenInterval(0.0, 1.0),
                  sign_class="nonnegative", lower_bound=-1.0)
    with pytest.raises(ValidationError):
        from_expression("y", OpenInterval(-2.0, 2.0),
                        sign_class="nonnegative").validate_declarations()


def test_builtin_factory():
    assert builtin("const 0.25")(np.array([1.0]))[0] == 0.25
    assert builtin("half_over_y 10").domain.hi == 10.0
    assert builtin("delta_over_y 2.0")(np.array([4.0]))[0] == 0.5
    assert builtin("neg_inv_(y-1)(y-6)").domain.lo == 1.0
    with pytest.raises(ConfigError):
        builtin("unknown_thing")
    with pytest.raises(ConfigError):
        builtin("delta_over_y")          # missing parameter
    with pytest.raises(ConfigError):
        builtin("")


def test_expression_basic():
    f = parse_expression("1/(2*y)")
    assert f(np.array([2.0]))[0] == 0.25
    g = parse_expression("exp(-y^2) + abs(y) - log(y)")
    y = np.array([1.5])
    expected = math.exp(-2.25) + 1.5 - math.log(1.5)
    assert abs(g(y)[0] - expected) < 1e-15


def test_expression_power_operators_agree():
    a = parse_expression("y^3")
    b = parse_expression("y**3")
    ys = np.linspace(-2, 2, 7)
    assert np.array_equal(a(ys), b(ys))


def test_expression_unary_minus_precedence():
    f = parse_expression("-y^2")      # -(y^2), matching usual convention
    assert f(np.array([3.0]))[0] == -9.0


def test_expression_errors():
    for bad in ("", "y +", "(y", "y ) ", "foo(y)", "y @ 2", "x + 1"):
        with pytest.raises(ConfigError):
            parse_expression(bad)(np.array([1.0]))


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=5),
       st.floats(-2, 2))
def test_expression_polynomial_matches_horner(coeffs, y):
    text = " + ".join(f"{c!r} * y^{k}" for k, c in enumerate(coeffs))
    f = parse_expression(text)
    expected = sum(c * y ** k for k, c in enumerate(coeffs))
    got = float(f(np.array([y]))[0])
    assert got == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_from_expression_metadata():
    g = from_expression("1/(y*y)+1", OpenInterval(0.0, math.inf),
                        sign_class="nonnegative", lower_bound=1.0)
    assert g.validate_declarations()
    assert g(np.array([2.0]))[0] == 1.25
