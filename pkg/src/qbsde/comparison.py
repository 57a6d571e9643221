"""Empirical verification of solution ordering and the converse experiment.

``compare`` solves two problems on shared noise (common random numbers) and
checks Y1 <= Y2 up to Monte Carlo tolerance; ``converse_experiment`` runs
the constructive SDE argument that falsifies f1 >= f2 from an observed
per-path solution gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import PreconditionError, TheoremViolationError, ValidationError
from .generators import Generator
from .bsde import (BsdeProblem, QuadratureBsdeSolver, solve_regression)
from .sde import ForwardModel, PathBundle, simulate


@dataclass
class ComparisonCase:
    """Two problems sharing forward model and noise, plus the declared
    ordering evidence (f1 <= f2 on a grid, xi1 <= xi2 per path, and one of
    the side conditions)."""

    p1: BsdeProblem
    p2: BsdeProblem
    condition: str                      # "a1" (xi2 >= zeta in D) or "a2"
    zeta: Optional[float] = None        # required for condition a1
    f_check_grid: Optional[np.ndarray] = None
    engine: str = "quadrature"          # or "regression"
    law: str = "brownian"
    nodes: int = 64
    n_paths: int = 10000
    steps: int = 50
    degree: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.condition not in ("a1", "a2"):
            raise ValidationError("condition must be 'a1' or 'a2'")
        if self.condition == "a1" and self.zeta is None:
            raise ValidationError("condition a1 needs zeta")
        if self.p1.forward is not self.p2.forward:
            raise ValidationError("problems must share the forward model")


@dataclass
class ComparisonVerdict:
    verdict: str                        # PASS | FAIL
    max_gap: float                      # max over times/paths of Y1 - Y2
    eps_mc: float
    Y1_0: float
    Y2_0: float
    strict_holds: Optional[bool]
    strict_gap: float
    details: dict = field(default_factory=dict)

    def to_text(self) -> str:
        lines = [f"verdict: {self.verdict}",
                 f"max(Y1 - Y2) over times and paths: {self.max_gap:.6g}",
                 f"tolerance eps_mc: {self.eps_mc:.6g}",
                 f"Y1_0 = {self.Y1_0:.10g}, Y2_0 = {self.Y2_0:.10g}"]
        if self.strict_holds is not None:
            lines.append(f"strict comparison at t=0: "
                         f"{'holds' if self.strict_holds else 'FAILS'} "
                         f"(gap {self.strict_gap:.6g})")
        return "\n".join(lines)


def _check_ordering_evidence(case: ComparisonCase, xi1, xi2):
    grid = case.f_check_grid
    if grid is None:
        dom = case.p1.generator.domain
        grid = dom.interior_grid(201)
    g1, g2 = case.p1.generator, case.p2.generator
    mask = np.ones(len(grid), dtype=bool)
    for s in set(g1.singular_points) | set(g2.singular_points):
        mask &= np.abs(grid - s) > 1e-9
    grid = grid[mask]
    f1v = g1.f(grid)
    f2v = g2.f(grid)
    if np.any(f1v > f2v + 1e-12):
        raise PreconditionError("ordering evidence fails: f1 > f2 on the grid")
    if np.any(xi1 > xi2 + 1e-12):
        raise PreconditionError("ordering evidence fails: xi1 > xi2 on a path")
    if case.condition == "a1":
        if not case.p2.generator.domain.contains(case.zeta):
            raise PreconditionError("zeta is not in D")
        if np.any(xi2 < case.zeta - 1e-12):
            raise PreconditionError(
                "ordering evidence fails: xi2 < zeta on a path")
    else:
        if not math.isfinite(case.p1.transform.range_.lo):
            raise PreconditionError(
                "condition a2 fails: transform of f1 is not bounded below")


def compare(case: ComparisonCase, strict_eps: Optional[float] = None,
            raise_on_fail: bool = False) -> ComparisonVerdict:
    """Solve both problems on common noise and check the ordering.

    ``strict_eps``: when the terminal gap has positive probability, assert
    Y2_0 - Y1_0 > strict_eps (defaults to eps_mc).
    """
    t0 = case.p1.t0
    T = case.p1.horizon
    bundle = simulate(case.p1.forward, t0, case.p1.x0, T, case.steps,
                      case.n_paths, case.seed)
    xi1 = np.asarray(case.p1.terminal_map(bundle.paths[:, -1]), float)
    xi2 = np.asarray(case.p2.terminal_map(bundle.paths[:, -1]), float)
    _check_ordering_evidence(case, xi1, xi2)

    if case.engine == "quadrature":
        s1 = QuadratureBsdeSolver(case.p1, case.law, case.nodes).along_paths(bundle)
        s2 = QuadratureBsdeSolver(case.p2, case.law, case.nodes).along_paths(bundle)
        eps_mc = 1e-10
        gap = s1.Y_paths - s2.Y_paths
        max_gap = float(np.max(gap))
        verdict = "PASS" if max_gap <= eps_mc else "FAIL"
    else:
        s1 = solve_regression(case.p1, bundle, case.degree)
        s2 = solve_regression(case.p2, bundle, case.degree)
        eps_mc = 3.0 * math.hypot(s1.se_Y0, s2.se_Y0)
        # fitted surfaces carry pointwise regression bias that common
        # random numbers cannot cancel, so the ordering is checked on
        # per-slice means against their own standard errors
        gap = s1.Y_paths - s2.Y_paths
        max_gap = float(np.max(gap))
        n = gap.shape[0]
        mean_k = gap.mean(axis=0)
        se_k = gap.std(axis=0) / math.sqrt(n)
        verdict = ("PASS" if np.all(mean_k <= 3.0 * se_k + eps_mc)
                   else "FAIL")

    frac_strict = float(np.mean(xi1 < xi2 - 1e-12))
    strict_holds = None
    strict_gap = s2.Y0 - s1.Y0
    if frac_strict > 0:
        thr = eps_mc if strict_eps is None else strict_eps
        strict_holds = strict_gap > thr
        if not strict_holds:
            verdict = "FAIL"

    result = ComparisonVerdict(verdict=verdict, max_gap=max_gap,
                               eps_mc=eps_mc, Y1_0=s1.Y0, Y2_0=s2.Y0,
                               strict_holds=strict_holds,
                               strict_gap=float(strict_gap),
                               details={"frac_strict_terminal": frac_strict,
                                        "engine": case.engine})
    if verdict == "FAIL" and raise_on_fail:
        raise TheoremViolationError(result.to_text())
    return result


# ---------------------------------------------------------------------------
# converse experiment

@dataclass
class ConverseReport:
    verdict: str                        # CONTRADICTION_FOUND | INCONCLUSIVE
    n_paths: int
    n_satisfied: int
    min_gap_minus_bound: float
    gaps: np.ndarray
    taus: np.ndarray
    slack: float

    def to_text(self) -> str:
        return (f"verdict: {self.verdict}\n"
                f"paths satisfying the per-path bound: "
                f"{self.n_satisfied}/{self.n_paths}\n"
                f"min over paths of gap - bound: "
                f"{self.min_gap_minus_bound:.6g} (Euler slack {self.slack:.3g})")

    def to_csv(self) -> str:
        lines = ["path,tau,gap,bound"]
        for i, (tau, g) in enumerate(zip(self.taus, self.gaps)):
            lines.append(f"{i},{tau:.17g},{g:.17g},{0.0:.17g}")
        return "\n".join(lines) + "\n"


def _lipschitz_estimate(gen: Generator, center: float, radius: float) -> float:
    xs = np.linspace(center - radius, center + radius, 101)
    xs = xs[gen.domain.contains_mask(xs)]
    fv = gen.f(xs)
    return float(np.max(np.abs(np.diff(fv) / np.diff(xs))))


def converse_experiment(f1: Generator, f2: Generator, y: float, z: float,
                        K: float, n: int, T: float = 1.0, steps: int = 200,
                        n_paths: int = 10000, seed: int = 0) -> ConverseReport:
    """Simulate dY^i = -f_i(Y^i) |z|^2 dt + z dB with identical noise and
    check the per-path gap bound Y1 - Y2 >= |z|^2 tau / (2n) at
    tau = tau1 ^ tau2 ^ tau3 ^ T, up to Euler slack.

    tau^i is the first exit of Y^i from (y-K, y+K); tau3 is the first time
    f1(Y1) >= f2(Y2) - 1/(2n).
    """
    if z == 0:
        raise ValidationError("need z != 0")
    if K <= 0 or n < 1:
        raise ValidationError("need K > 0 and n >= 1")
    band_lo, band_hi = y - K, y + K
    dom = f1.domain
    for e in (band_lo, band_hi):
        if not (dom.contains(e) and f2.domain.contains(e)):
            raise PreconditionError("[y-K, y+K] must lie inside both domains")
    # sampled membership of the band in the gap set (non-strict at the
    # margin: the stopping rule below uses the halved threshold 1/(2n))
    probe = np.linspace(band_lo, band_hi, 201)
    if not np.all(f1.f(probe) <= f2.f(probe) - 1.0 / n + 1e-12):
        raise PreconditionError(
            f"the band [y-K, y+K] is not inside the set where "
            f"f1 < f2 - 1/{n}")

    z2 = z * z
    m1 = ForwardModel(drift=lambda t, x: -f1.f(x) * z2,
                      diffusion=lambda t, x: np.full_like(x, z), name="drift1")
    m2 = ForwardModel(drift=lambda t, x: -f2.f(x) * z2,
                      diffusion=lambda t, x: np.full_like(x, z), name="drift2")
    b1 = simulate(m1, 0.0, y, T, steps, n_paths, seed)
    b2 = simulate(m2, 0.0, y, T, steps, n_paths, seed,
                  increments=b1.increments)

    m = steps
    out1 = (b1.paths <= band_lo) | (b1.paths >= band_hi)
    out2 = (b2.paths <= band_lo) | (b2.paths >= band_hi)
    drift_close = f1.f(b1.paths.ravel()).reshape(b1.paths.shape) >= \
        f2.f(b2.paths.ravel()).reshape(b2.paths.shape) - 1.0 / (2 * n)
    stopped = out1 | out2 | drift_close
    idx = np.where(stopped.any(axis=1), stopped.argmax(axis=1), m)
    idx = np.minimum(idx, m)
    if np.any(idx == 0):
        raise PreconditionError(
            "tau = 0 on some path: K too small or y too close to the "
            "boundary of the strict-gap set")
    taus = b1.times[idx]
    rows = np.arange(n_paths)
    gaps = b1.paths[rows, idx] - b2.paths[rows, idx]
    bound = z2 * taus / (2 * n)
    L = max(_lipschitz_estimate(f1, y, K), _lipschitz_estimate(f2, y, K))
    slack = L * z2 * (T / steps) * T + 1e-12
    ok = gaps >= bound - slack
    n_ok = int(np.count_nonzero(ok))
    verdict = "CONTRADICTION_FOUND" if n_ok == n_paths else "INCONCLUSIVE"
    return ConverseReport(verdict=verdict, n_paths=n_paths, n_satisfied=n_ok,
                          min_gap_minus_bound=float(np.min(gaps - bound)),
                          gaps=gaps, taus=taus, slack=slack)
