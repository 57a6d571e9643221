import math
import os

import numpy as np
import pytest

from qbsde import (DomainError, IntegrabilityTransform,
                   NotLocallyIntegrableError, OpenInterval,
                   TransformRangeError, UnsupportedBoundError, abs_log_over_y,
                   build_transform, constant, delta_over_y, from_expression,
                   half_over_y, inv_y_squared_plus_one, neg_inv_y1_y6)

# frozen oracle values: adaptive quadrature of the closed-form integrand
# exp(2 * int f) at absolute/relative tolerance 1e-13
NEG_INV_U = {2.0: -1.1743086855759737, 3.0: -0.4618122958145444,
             5.0: 1.9637582639883329}
NEG_INV_V = (-1.5690163428942538, 5.037515655494102)
ABSLOG_U = {0.5: -0.44148225912140165, 2.0: 1.2206708979622496}
INVSQ_U = {0.5: -0.19092325495062573, 2.0: 6.974917819328645}


def test_golden_square_transform():
    # f = 1/(2y) on (0, 10), alpha = 1: u(x) = x^2/2 - 1/2
    tr = build_transform(half_over_y(hi=10.0), alpha=1.0)
    assert float(tr.u(2.0)) == pytest.approx(1.5, abs=1e-10)
    assert float(tr.u(5.0)) == pytest.approx(12.0, abs=1e-10)
    assert float(tr.u(1.0)) == 0.0
    assert float(tr.u_prime(3.0)) == pytest.approx(3.0, abs=1e-10)
    assert float(tr.u_inv(27.0 / 4.0)) == pytest.approx(math.sqrt(14.5),
                                                        abs=1e-10)


def test_golden_square_transform_tabulated():
    gen = half_over_y(hi=10.0)
    tr = build_transform(gen, alpha=1.0, representation="tabulated")
    assert float(tr.u(2.0)) == pytest.approx(1.5, abs=1e-8)
    assert float(tr.u(5.0)) == pytest.approx(12.0, abs=1e-8)
    assert float(tr.u_inv(27.0 / 4.0)) == pytest.approx(math.sqrt(14.5),
                                                        abs=1e-8)
    # image interval of x^2/2 - 1/2 over (0, 10)
    assert tr.range_.lo == pytest.approx(-0.5, abs=1e-10)
    assert tr.range_.hi == pytest.approx(49.5, abs=1e-8)


def test_exponential_transform():
    tr = build_transform(constant(0.5), alpha=0.0)
    assert float(tr.u(1.0)) == pytest.approx(math.e - 1.0, abs=1e-12)
    assert float(tr.u_prime(1.0)) == pytest.approx(math.e, abs=1e-12)
    assert float(tr.u_inv(math.e - 1.0)) == pytest.approx(1.0, abs=1e-12)
    assert tr.range_.lo == pytest.approx(-1.0, abs=1e-10)
    assert math.isinf(tr.range_.hi)


def test_zero_generator_is_identity_shift():
    tr = build_transform(constant(0.0), alpha=2.0)
    xs = np.array([-3.0, 0.0, 5.5])
    assert np.allclose(tr.u(xs), xs - 2.0, atol=1e-12)
    assert np.allclose(tr.u_prime(xs), 1.0)


def test_base_point_at_alpha():
    for gen, alpha in ((constant(0.3), 0.7), (delta_over_y(1.2), 2.0),
                       (neg_inv_y1_y6(), 3.5)):
        tr = build_transform(gen, alpha=alpha)
        assert float(tr.u(alpha)) == pytest.approx(0.0, abs=1e-14)
        assert float(tr.u_prime(alpha)) == pytest.approx(1.0, abs=1e-12)
        assert float(tr.u_inv(0.0)) == pytest.approx(alpha, abs=1e-12)


def test_singular_endpoints_finite_image():
    tr = build_transform(neg_inv_y1_y6(), alpha=3.5)
    for x, expected in NEG_INV_U.items():
        assert float(tr.u(x)) == pytest.approx(expected, abs=5e-9)
    assert tr.range_.lo == pytest.approx(NEG_INV_V[0], abs=5e-9)
    assert tr.range_.hi == pytest.approx(NEG_INV_V[1], abs=5e-8)


def test_expression_matches_builtin_with_antiderivative():
    gen = from_expression("-1/((y-1)*(y-6))", OpenInterval(1.0, 6.0),
                          sign_class="nonnegative")
    tr = build_transform(gen, alpha=3.5)
    for x, expected in NEG_INV_U.items():
        assert float(tr.u(x)) == pytest.approx(expected, abs=1e-8)


def test_abs_log_transform_oracle():
    tr = build_transform(abs_log_over_y(), alpha=1.0)
    for x, expected in ABSLOG_U.items():
        assert float(tr.u(x)) == pytest.approx(expected, rel=1e-8)


def test_inv_square_transform_oracle():
    tr = build_transform(inv_y_squared_plus_one(), alpha=1.0)
    for x, expected in INVSQ_U.items():
        assert float(tr.u(x)) == pytest.approx(expected, rel=1e-8)


def test_strict_monotonicity_and_positive_derivative():
    tr = build_transform(neg_inv_y1_y6(), alpha=3.5)
    xs = np.linspace(1.001, 5.999, 400)
    u = tr.u(xs)
    assert np.all(np.diff(u) > 0)
    assert np.all(tr.u_prime(xs) > 0)


def test_round_trip():
    for gen, box in ((constant(-0.8), (-3.0, 3.0)),
                     (delta_over_y(2.0), (0.3, 6.0)),
                     (neg_inv_y1_y6(), (1.2, 5.8))):
        tr = build_transform(gen, alpha=0.5 * (box[0] + box[1]))
        xs = np.linspace(box[0], box[1], 50)
        back = tr.u_inv(tr.u(xs))
        assert np.max(np.abs(back - xs) / np.maximum(1, np.abs(xs))) < 1e-9


def test_domain_errors():
    tr = build_transform(half_over_y(hi=10.0), alpha=1.0)
    with pytest.raises(DomainError):
        tr.u(-1.0)
    with pytest.raises(DomainError):
        tr.u_prime(10.0)
    with pytest.raises(DomainError):
        build_transform(half_over_y(hi=10.0), alpha=-2.0)


def test_range_error_outside_image():
    tr = build_transform(neg_inv_y1_y6(), alpha=3.5)
    with pytest.raises(TransformRangeError):
        tr.u_inv(tr.range_.hi + 1.0)
    with pytest.raises(TransformRangeError):
        tr.u_inv(tr.range_.lo - 1e-6)


@pytest.mark.parametrize("expr", ["1/y", "1/(y*y)", "1/abs(y)"])
def test_interior_divergence_detected(expr):
    gen = from_expression(expr, OpenInterval(-1.0, 1.0))
    with pytest.raises(NotLocallyIntegrableError):
        build_transform(gen, alpha=0.5)


def test_interior_integrable_singularity_allowed():
    # |y|^{-1/2} blows up at 0 but stays integrable there
    gen = from_expression("1/sqrt(abs(y))", OpenInterval(-1.0, 1.0))
    tr = build_transform(gen, alpha=0.5)
    xs = np.linspace(-0.9, 0.9, 19)
    assert np.all(np.diff(tr.u(xs)) > 0)


def test_change_base_point():
    # square transform: coefficients between alpha = 1 and beta = 2
    tr1 = build_transform(half_over_y(hi=10.0), alpha=1.0)
    a, b = tr1.change_base_point(2.0)
    assert a == pytest.approx(2.0, abs=1e-10)
    assert b == pytest.approx(1.5, abs=1e-10)
    a0, b0 = tr1.change_base_point(1.0)
    assert a0 == pytest.approx(1.0, abs=1e-12)
    assert b0 == pytest.approx(0.0, abs=1e-12)
    # exponential transform: alpha = 0, beta = 1
    tr2 = build_transform(constant(0.5), alpha=0.0)
    a, b = tr2.change_base_point(1.0)
    assert a == pytest.approx(math.e, abs=1e-10)
    assert b == pytest.approx(math.e - 1.0, abs=1e-10)
    with pytest.raises(DomainError):
        build_transform(half_over_y(hi=10.0), alpha=1.0).change_base_point(12.0)


def test_exp_bound_check():
    tr = build_transform(constant(1.0, OpenInterval(0.0, math.inf)),
                         alpha=1.0)
    assert tr.exp_bound_check(2.0)          # saturated with equality
    tr2 = build_transform(inv_y_squared_plus_one(), alpha=1.0)
    for x in (0.3, 0.9, 2.0, 4.0):
        assert tr2.exp_bound_check(x)
    tr3 = build_transform(constant(0.0), alpha=0.0)
    with pytest.raises(UnsupportedBoundError):
        tr3.exp_bound_check(1.0)


def test_second_derivative_identity():
    for gen, x in ((constant(0.5), 0.8), (half_over_y(hi=10.0), 2.5),
                   (delta_over_y(1.5), 1.7)):
        tr = build_transform(gen, alpha=1.0)
        h = 1e-4
        second = (float(tr.u(x + h)) - 2 * float(tr.u(x))
                  + float(tr.u(x - h))) / h ** 2
        target = 2 * float(gen(x)) * float(tr.u_prime(x))
        assert abs(second - target) / max(1, abs(target)) < 1e-4


def test_ordering_of_transforms_both_sides():
    alpha = 0.4
    t1 = build_transform(constant(0.2), alpha=alpha)
    t2 = build_transform(constant(0.9), alpha=alpha)
    xs = np.linspace(alpha - 4.0, alpha + 4.0, 81)
    assert np.all(t1.u(xs) <= t2.u(xs) + 1e-12)


def test_csv_round_trip(tmp_path):
    gen = neg_inv_y1_y6()
    tr = build_transform(gen, alpha=3.5)
    path = os.path.join(tmp_path, "table.csv")
    tr.to_csv(path)
    with open(path) as fh:
        assert fh.readline().strip() == "x,u,uprime"
    back = IntegrabilityTransform.from_csv(path, generator=gen)
    xs = np.linspace(1.2, 5.8, 40)
    assert np.max(np.abs(back.u(xs) - tr.u(xs))) < 1e-10
    # u' is rebuilt from the tabulated values, accurate to table resolution
    assert np.max(np.abs(back.u_prime(xs) - tr.u_prime(xs))
                  / tr.u_prime(xs)) < 1e-6


def test_sided_image_for_signed_generators():
    # f >= beta > 0 makes u bounded below; f <= -beta < 0 bounded above
    pos = build_transform(constant(0.7), alpha=0.0)
    assert math.isfinite(pos.range_.lo) and math.isinf(pos.range_.hi)
    neg = build_transform(constant(-0.7), alpha=0.0)
    assert math.isinf(neg.range_.lo) and math.isfinite(neg.range_.hi)
