"""Acceptance gate: every criterion runs at its stated tolerance and prints
one pass/fail line (run pytest with -s or look at captured output)."""

import time

from qbsde.selftest import (check_comparison, check_constant_generator,
                            check_converse, check_golden_values,
                            check_pde, check_power_transform,
                            check_range_confinement, run_properties)


def _gate(result):
    print(result.line())
    assert result.passed, result.line()


def test_acceptance_1_golden_values():
    # u(2) = 1.5, u(5) = 12, E[u(xi)] = 27/4 and Y0 = sqrt(14.5) to 1e-8;
    # the regression estimate agrees within 3 standard errors at N = 1e5
    _gate(check_golden_values(n_paths=100_000))


def test_acceptance_2_constant_generator():
    # f = 0.5, xi = B_T: Y = x + 0.5(1 - t) and Z = 1 on the grid to 1e-6;
    # the discrete residual is at the convergence floor
    _gate(check_constant_generator())


def test_acceptance_3_power_transform():
    # f = 1/y, xi = exp(0.2 B_T): Y0 = exp(0.06) to 1e-8
    _gate(check_power_transform())


def test_acceptance_4_range_confinement():
    # two-point terminal in {2, 3}: every path of Y stays inside [2, 3]
    _gate(check_range_confinement(n_paths=10_000))


def test_acceptance_5_comparison():
    # ordered drivers and terminals: Y1_0 = 3.5 < Y2_0 = sqrt(14.5), with a
    # strict gap of at least 0.30
    _gate(check_comparison())


def test_acceptance_6_converse():
    # constant drivers 0.1 and 0.3 with n = 5: the per-path gap equals
    # 0.2 tau and dominates the bound tau/10 on 100% of paths
    _gate(check_converse(n_paths=10_000))


def test_acceptance_7_pde():
    # v(0, 0) = 0.5 exactly; value surface matches the finite-difference
    # oracle within 1e-4; the interior residual is below 1e-3 and shrinks
    # by at least a factor 3 under grid refinement
    _gate(check_pde())


def test_acceptance_8_property_battery_under_budget():
    # ten randomized property suites, 200 instances each, within 5 minutes
    start = time.time()
    results = run_properties(n_instances=200, master_seed=90210)
    elapsed = time.time() - start
    assert len(results) == 10
    for r in results:
        print(r.line())
        assert r.passed, r.line()
    print(f"property battery wall time: {elapsed:.1f}s (budget 300s)")
    assert elapsed < 300.0
