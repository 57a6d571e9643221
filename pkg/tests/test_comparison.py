import math

import numpy as np
import pytest

from qbsde import (BsdeProblem, ComparisonCase, OpenInterval,
                   PreconditionError, TheoremViolationError, ValidationError,
                   brownian_model, build_transform, compare, constant,
                   converse_experiment, from_expression)

IDENTITY = lambda x: np.asarray(x, dtype=float)
FWD = brownian_model()


def _problem(gen, terminal=IDENTITY, forward=FWD, T=1.0, x0=0.0):
    tr = build_transform(gen, alpha=0.0)
    return BsdeProblem(gen, tr, terminal, forward, horizon=T, x0=x0)


def test_identical_problems_tie():
    p = _problem(constant(0.2))
    case = ComparisonCase(p, p, condition="a1", zeta=-50.0, n_paths=300,
                          steps=10)
    v = compare(case)
    assert v.verdict == "PASS"
    assert v.max_gap == pytest.approx(0.0, abs=1e-12)
    assert v.Y1_0 == v.Y2_0
    assert v.strict_holds is None          # terminal gap has probability 0


def test_constant_family_ordering():
    # f = c gives Y(t, x) = x + c(T - t): the gap at t=0 is exactly c2 - c1
    p1 = _problem(constant(0.1))
    p2 = _problem(constant(0.3))
    case = ComparisonCase(p1, p2, condition="a1", zeta=-50.0, n_paths=500,
                          steps=20)
    v = compare(case)
    assert v.verdict == "PASS"
    assert v.Y2_0 - v.Y1_0 == pytest.approx(0.2, abs=1e-9)
    assert v.max_gap <= v.eps_mc


def test_strict_terminal_gap():
    gen = constant(0.2)
    p1 = _problem(gen)
    p2 = BsdeProblem(p1.generator, p1.transform,
                     lambda x: np.asarray(x, float) + 0.5, p1.forward, 1.0)
    case = ComparisonCase(p1, p2, condition="a1", zeta=-50.0, n_paths=500,
                          steps=20)
    v = compare(case)
    assert v.verdict == "PASS"
    assert v.strict_holds is True
    assert v.strict_gap == pytest.approx(0.5, abs=1e-9)
    assert v.details["frac_strict_terminal"] == 1.0


def test_regression_engine_agrees():
    p1 = _problem(constant(0.1))
    p2 = _problem(constant(0.3))
    case = ComparisonCase(p1, p2, condition="a1", zeta=-50.0,
                          engine="regression", n_paths=4000, steps=20,
                          degree=3, seed=5)
    v = compare(case)
    assert v.verdict == "PASS"
    assert v.Y2_0 - v.Y1_0 == pytest.approx(0.2, abs=3 * v.eps_mc + 1e-6)


def test_evidence_failures():
    p_hi = _problem(constant(0.3))
    p_lo = _problem(constant(0.1))
    with pytest.raises(PreconditionError, match="f1 > f2"):
        compare(ComparisonCase(p_hi, p_lo, condition="a1", zeta=-50.0,
                               n_paths=50, steps=5))
    # terminal ordering violated per path
    p_big_xi = BsdeProblem(p_lo.generator, p_lo.transform,
                           lambda x: np.asarray(x, float) + 1.0,
                           p_lo.forward, 1.0)
    with pytest.raises(PreconditionError, match="xi1 > xi2"):
        compare(ComparisonCase(p_big_xi, p_hi, condition="a1", zeta=-50.0,
                               n_paths=50, steps=5))
    # condition a1: xi2 must dominate zeta
    with pytest.raises(PreconditionError, match="xi2 < zeta"):
        compare(ComparisonCase(p_lo, p_hi, condition="a1", zeta=10.0,
                               n_paths=50, steps=5))
    with pytest.raises(PreconditionError, match="zeta is not in D"):
        bounded = from_expression("0.1", OpenInterval(-5.0, 5.0),
                                  sign_class="nonnegative", lower_bound=0.1)
        tr = build_transform(bounded, alpha=0.0)
        pb = BsdeProblem(bounded, tr, lambda x: np.clip(x, -4.0, 4.0),
                         FWD, 1.0)
        compare(ComparisonCase(pb, pb, condition="a1", zeta=20.0,
                               n_paths=50, steps=5))
    # condition a2: the first transform must be bounded below
    p_neg = _problem(constant(-0.2))
    with pytest.raises(PreconditionError, match="bounded below"):
        compare(ComparisonCase(p_neg, p_lo, condition="a2", n_paths=50,
                               steps=5))


def test_case_validation():
    p = _problem(constant(0.1))
    with pytest.raises(ValidationError):
        ComparisonCase(p, p, condition="a3")
    with pytest.raises(ValidationError):
        ComparisonCase(p, p, condition="a1")           # zeta missing
    other = _problem(constant(0.1), forward=brownian_model())
    with pytest.raises(ValidationError):
        ComparisonCase(p, other, condition="a2")       # different forward


def test_violation_detected_off_grid():
    # f1 has a bump exceeding f2 that a rigged evidence grid misses; the
    # simulated ordering check must still catch the violation
    f1 = from_expression("0.3*exp(-100*y*y)", OpenInterval(-math.inf, math.inf),
                         sign_class="nonnegative", lower_bound=0.0)
    f2 = constant(0.05)
    p1 = _problem(f1)
    p2 = _problem(f2)
    case = ComparisonCase(p1, p2, condition="a1", zeta=-50.0,
                          f_check_grid=np.array([5.0, 6.0, 7.0]),
                          n_paths=200, steps=10)
    v = compare(case)
    assert v.verdict == "FAIL"
    with pytest.raises(TheoremViolationError):
        compare(case, raise_on_fail=True)


# ---------------------------------------------------------------------------
# converse experiment

def test_converse_constant_gap_exact():
    # f1 = 0.1, f2 = 0.3, z = 1: dY1 - dY2 = 0.2 dt exactly, so the gap at
    # tau equals 0.2 tau and dominates the bound tau/(2n) = 0.1 tau
    rep = converse_experiment(constant(0.1), constant(0.3), y=0.0, z=1.0,
                              K=2.0, n=5, T=1.0, steps=100, n_paths=500,
                              seed=3)
    assert rep.verdict == "CONTRADICTION_FOUND"
    assert rep.n_satisfied == rep.n_paths == 500
    err = np.abs(rep.gaps - 0.2 * rep.taus)
    assert float(np.max(err)) < 1e-12
    assert "CONTRADICTION_FOUND" in rep.to_text()
    lines = rep.to_csv().strip().splitlines()
    assert lines[0] == "path,tau,gap,bound"
    assert len(lines) == 501


def test_converse_band_membership_rejected():
    # gap 0.05 < 1/n = 0.2 on the whole band
    with pytest.raises(PreconditionError, match="f1 < f2"):
        converse_experiment(constant(0.25), constant(0.3), y=0.0, z=1.0,
                            K=1.0, n=5, n_paths=50, steps=10)


def test_converse_boundary_gap_accepted():
    # gap exactly 1/n sits on the boundary of the admissible set and is
    # accepted; the stopping rule uses the halved threshold
    rep = converse_experiment(constant(0.1), constant(0.3), y=0.0, z=1.0,
                              K=1.0, n=5, T=0.5, steps=50, n_paths=200,
                              seed=1)
    assert rep.verdict == "CONTRADICTION_FOUND"


def test_converse_parameter_validation():
    with pytest.raises(ValidationError):
        converse_experiment(constant(0.1), constant(0.3), y=0.0, z=0.0,
                            K=1.0, n=5)
    with pytest.raises(ValidationError):
        converse_experiment(constant(0.1), constant(0.3), y=0.0, z=1.0,
                            K=-1.0, n=5)
    # band must stay inside both domains
    narrow = from_expression("0.1", OpenInterval(-0.5, 0.5),
                             sign_class="nonnegative", lower_bound=0.1)
    with pytest.raises(PreconditionError, match="inside both domains"):
        converse_experiment(narrow, constant(0.3), y=0.0, z=1.0, K=1.0, n=5)
