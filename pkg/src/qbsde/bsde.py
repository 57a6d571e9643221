"""Solvers for the quadratic equation via the transformed conditional
expectation.

Both engines compute y(t, x) = E[u(g(X_T)) | X_t = x] and return
Y = u^{-1}(y), Z = z / u'(Y) with z = sigma * d/dx y:

* quadrature engine -- exact transition laws (Brownian, scaled Brownian,
  geometric Brownian) integrated by Gauss-Hermite nodes; two-point step
  terminals are handled exactly through the normal CDF;
* regression engine -- per-time-slice least-squares projection of the
  terminal payoff onto a polynomial basis over simulated paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtr, roots_hermite

from .errors import (ConfigError, PreconditionError, RangeViolationError,
                     RegressionError, TransformRangeError, ValidationError)
from .generators import Generator
from .sde import ForwardModel, PathBundle
from .transform import IntegrabilityTransform

_LAWS = ("brownian", "scaled_brownian", "geometric_brownian")


@dataclass(frozen=True)
class StepTerminal:
    """Two-point terminal map: lo_value below the threshold, hi_value above.

    With a (scaled) Brownian forward model started at the threshold this
    realizes a fair two-point terminal variable.
    """

    lo_value: float
    hi_value: float
    threshold: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < self.threshold, self.lo_value, self.hi_value)


@dataclass(frozen=True)
class BsdeProblem:
    generator: Generator
    transform: IntegrabilityTransform
    terminal_map: Callable[[np.ndarray], np.ndarray]
    forward: ForwardModel
    horizon: float
    t0: float = 0.0
    x0: float = 0.0

    def __post_init__(self):
        if not self.t0 < self.horizon:
            raise ValidationError("need t0 < horizon")

    def pilot_check(self, n: int = 1000, seed: int = 0):
        """Cheap forward run verifying g(X_T) stays in D."""
        from .sde import simulate
        steps = 32
        bundle = simulate(self.forward, self.t0, self.x0, self.horizon,
                          steps, n, seed)
        xi = np.asarray(self.terminal_map(bundle.paths[:, -1]), dtype=float)
        if not self.generator.domain.contains(xi):
            raise PreconditionError(
                "terminal map leaves the generator's domain on pilot paths")
        u_xi = self.transform.u(xi)
        if not np.all(np.isfinite(u_xi)):
            raise PreconditionError(
                "transformed terminal values are not finite on pilot paths")


@dataclass
class BsdeSolution:
    """Output of either engine.

    ``y_fn(t, x)`` is the transformed value surface; ``Y_fn``/``Z_fn`` the
    solution surfaces. Path arrays are present when the solution was
    evaluated along a bundle (regression always; quadrature on demand).
    """

    engine: str
    problem: BsdeProblem
    y0: float
    Y0: float
    Z0: float
    se_y0: float = 0.0
    se_Y0: float = 0.0
    y_fn: Optional[Callable] = None
    Y_fn: Optional[Callable] = None
    Z_fn: Optional[Callable] = None
    times: Optional[np.ndarray] = None
    Y_paths: Optional[np.ndarray] = None
    Z_paths: Optional[np.ndarray] = None
    bundle: Optional[PathBundle] = None
    cv_errors: Optional[np.ndarray] = None
    clipped_fraction: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def surface_csv(self, ts, xs) -> str:
        lines = ["t,x,y_transformed,Y,Z"]
        for t in np.atleast_1d(ts):
            for x in np.atleast_1d(xs):
                lines.append(
                    f"{t:.17g},{x:.17g},{self.y_fn(t, x):.17g},"
                    f"{self.Y_fn(t, x):.17g},{self.Z_fn(t, x):.17g}")
        return "\n".join(lines) + "\n"

    def paths_csv(self, max_paths: int = 100) -> str:
        lines = ["path,t,Y,Z"]
        n = min(max_paths, self.Y_paths.shape[0])
        for i in range(n):
            for k, t in enumerate(self.times):
                lines.append(f"{i},{t:.17g},{self.Y_paths[i, k]:.17g},"
                             f"{self.Z_paths[i, k]:.17g}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# quadrature engine

def _infer_law_params(model: ForwardModel, law: str, t0: float) -> tuple:
    """Check the model against the declared law at sample points and return
    the (mu, sigma) parameters."""
    probe = np.array([-2.0, -0.5, 0.3, 1.0, 2.5])
    b = np.broadcast_to(np.asarray(model.drift(t0, probe), float), probe.shape)
    s = np.broadcast_to(np.asarray(model.diffusion(t0, probe), float),
                        probe.shape)
    if law in ("brownian", "scaled_brownian"):
        if np.ptp(b) > 1e-12 or np.ptp(s) > 1e-12:
            raise ConfigError(f"model is not constant-coefficient; "
                              f"declared law {law!r} does not match")
        mu, sigma = float(b[0]), float(s[0])
        if law == "brownian" and not (abs(mu) < 1e-12 and abs(sigma - 1) < 1e-12):
            raise ConfigError("declared law 'brownian' requires b=0, sigma=1")
    elif law == "geometric_brownian":
        with np.errstate(divide="ignore", invalid="ignore"):
            rb, rs = b / probe, s / probe
        if np.ptp(rb) > 1e-10 or np.ptp(rs) > 1e-10:
            raise ConfigError("model is not proportional to the state; "
                              "declared law 'geometric_brownian' does not match")
        mu, sigma = float(rb[0]), float(rs[0])
    else:
        raise ConfigError(f"unknown transition law {law!r}; "
                          f"expected one of {_LAWS}")
    if sigma <= 0:
        raise ConfigError("transition law needs sigma > 0")
    return mu, sigma


class QuadratureBsdeSolver:
    """Deterministic engine for forward models with exact transition laws."""

    def __init__(self, problem: BsdeProblem, law: str, nodes: int = 64):
        self.problem = problem
        self.law = law
        self.mu, self.sigma = _infer_law_params(problem.forward, law,
                                                problem.t0)
        self.nodes, self.weights = roots_hermite(nodes)
        self.weights = self.weights / math.sqrt(math.pi)
        self._step = (problem.terminal_map
                      if isinstance(problem.terminal_map, StepTerminal)
                      else None)

    # transformed surface ---------------------------------------------------
    def y(self, t, x):
        """E[u(g(X_T)) | X_t = x], elementwise over broadcast (t, x)."""
        p = self.problem
        t = np.asarray(t, dtype=float)
        x = np.asarray(x, dtype=float)
        tau = np.maximum(p.horizon - t, 0.0)
        if self._step is not None and self.law != "geometric_brownian":
            g = self._step
            u_lo = float(p.transform.u(g.lo_value))
            u_hi = float(p.transform.u(g.hi_value))
            m = x + self.mu * tau
            sd = self.sigma * np.sqrt(tau)
            with np.errstate(divide="ignore", invalid="ignore"):
                zscore = np.where(sd > 0, (g.threshold - m) /
                                  np.where(sd > 0, sd, 1.0), np.inf)
            prob_lo = np.where(sd > 0, ndtr(zscore),
                               (x < g.threshold).astype(float))
            return u_lo * prob_lo + u_hi * (1.0 - prob_lo)
        return self._gh_expect(lambda xt: p.transform.u(p.terminal_map(xt)),
                               t, x, tau)

    def _terminal_states(self, t, x, tau):
        """X_T | X_t = x at the Gauss-Hermite nodes; shape (..., nodes)."""
        t = np.asarray(t, float)[..., None]
        x = np.asarray(x, float)[..., None]
        tau = np.asarray(tau, float)[..., None]
        zeta = self.nodes
        if self.law == "geometric_brownian":
            return x * np.exp((self.mu - 0.5 * self.sigma ** 2) * tau
                              + self.sigma * np.sqrt(2.0 * tau) * zeta)
        return x + self.mu * tau + self.sigma * np.sqrt(2.0 * tau) * zeta

    def _gh_expect(self, h, t, x, tau):
        xt = self._terminal_states(t, x, tau)
        vals = h(xt.ravel()).reshape(xt.shape)
        return vals @ self.weights

    def conditional_terminal_mean(self, t, x):
        """E[g(X_T) | X_t = x] with the same quadrature (Jensen checks)."""
        p = self.problem
        t = np.asarray(t, float)
        x = np.asarray(x, float)
        tau = np.maximum(p.horizon - t, 0.0)
        if self._step is not None and self.law != "geometric_brownian":
            g = self._step
            m = x + self.mu * tau
            sd = self.sigma * np.sqrt(tau)
            with np.errstate(divide="ignore", invalid="ignore"):
                zscore = np.where(sd > 0, (g.threshold - m) /
                                  np.where(sd > 0, sd, 1.0), np.inf)
            prob_lo = np.where(sd > 0, ndtr(zscore),
                               (x < g.threshold).astype(float))
            return g.lo_value * prob_lo + g.hi_value * (1.0 - prob_lo)
        return self._gh_expect(lambda xt: np.asarray(
            self.problem.terminal_map(xt), float), t, x, tau)

    # solution surfaces -----------------------------------------------------
    def Y(self, t, x):
        p = self.problem
        yv = self.y(t, x)
        V = p.transform.range_
        inside = (V.lo < np.asarray(yv)) & (np.asarray(yv) < V.hi)
        if not np.all(inside):
            bad = np.argwhere(~np.atleast_1d(inside))
            raise TransformRangeError(
                f"transformed value left V at grid position {bad[0]}")
        return p.transform.u_inv(yv)

    def z(self, t, x):
        x = np.asarray(x, dtype=float)
        h = 1e-5 * np.maximum(1.0, np.abs(x))
        dy = (self.y(t, x + h) - self.y(t, x - h)) / (2.0 * h)
        sig = np.broadcast_to(
            np.asarray(self.problem.forward.diffusion(np.asarray(t, float),
                                                      x), float), x.shape
            if x.shape else ())
        return sig * dy

    def Z(self, t, x):
        Yv = self.Y(t, x)
        return self.z(t, x) / self.problem.transform.u_prime(Yv)

    def solve(self) -> BsdeSolution:
        p = self.problem
        self.problem.pilot_check()
        y0 = float(self.y(p.t0, p.x0))
        Y0 = float(self.Y(p.t0, p.x0))
        Z0 = float(self.Z(p.t0, p.x0))
        return BsdeSolution(engine="quadrature", problem=p, y0=y0, Y0=Y0,
                            Z0=Z0, se_y0=0.0, se_Y0=0.0,
                            y_fn=lambda t, x: float(self.y(t, x)),
                            Y_fn=lambda t, x: float(self.Y(t, x)),
                            Z_fn=lambda t, x: float(self.Z(t, x)))

    def along_paths(self, bundle: PathBundle) -> BsdeSolution:
        """Evaluate the exact surfaces along simulated paths.

        The last interior Z slice is reused at maturity when the terminal
        map is a step function (no derivative there).
        """
        p = self.problem
        m = bundle.n_steps
        Y = np.empty_like(bundle.paths)
        Z = np.empty_like(bundle.paths)
        for k, t in enumerate(bundle.times):
            xk = bundle.paths[:, k]
            if k == m:
                xi = np.asarray(p.terminal_map(xk), float)
                Y[:, k] = xi
                if self._step is not None:
                    Z[:, k] = Z[:, k - 1]
                else:
                    h = 1e-5 * np.maximum(1.0, np.abs(xk))
                    du = (p.transform.u(np.asarray(p.terminal_map(xk + h),
                                                   float))
                          - p.transform.u(np.asarray(p.terminal_map(xk - h),
                                                     float))) / (2 * h)
                    sig = np.broadcast_to(np.asarray(
                        p.forward.diffusion(t, xk), float), xk.shape)
                    Z[:, k] = sig * du / p.transform.u_prime(xi)
            else:
                Y[:, k] = self.Y(t, xk)
                Z[:, k] = self.Z(t, xk)
        return BsdeSolution(engine="quadrature", problem=p,
                            y0=float(self.y(p.t0, p.x0)),
                            Y0=float(self.Y(p.t0, p.x0)),
                            Z0=float(self.Z(p.t0, p.x0)),
                            y_fn=lambda t, x: float(self.y(t, x)),
                            Y_fn=lambda t, x: float(self.Y(t, x)),
                            Z_fn=lambda t, x: float(self.Z(t, x)),
                            times=bundle.times, Y_paths=Y, Z_paths=Z,
                            bundle=bundle)


def solve_quadrature(problem: BsdeProblem, law: str,
                     nodes: int = 64) -> BsdeSolution:
    return QuadratureBsdeSolver(problem, law, nodes).solve()


# ---------------------------------------------------------------------------
# regression engine

def _polyfit_slice(x: np.ndarray, target: np.ndarray, degree: int):
    """Least-squares polynomial fit with rank check and 2-fold CV error.

    Returns (coefficients, cv_rmse). The design is centered/scaled for
    conditioning; coefficients are mapped back to the raw variable.
    """
    scale = max(float(np.std(x)), 1e-300)
    center = float(np.mean(x))
    if np.ptp(x) <= 1e-14 * max(1.0, abs(center)):
        # degenerate slice: the best fit is the constant mean
        coef = np.zeros(degree + 1)
        coef[0] = float(np.mean(target))
        return coef, float(np.std(target) / math.sqrt(len(target)))
    xs = (x - center) / scale
    A = np.polynomial.polynomial.polyvander(xs, degree)
    sol, _, rank, _ = np.linalg.lstsq(A, target, rcond=None)
    if rank < degree + 1:
        raise RegressionError(
            f"rank-deficient design matrix (rank {rank} < {degree + 1}); "
            "try a lower polynomial degree")
    half = len(x) // 2
    cv = 0.0
    for tr, te in ((slice(None, half), slice(half, None)),
                   (slice(half, None), slice(None, half))):
        c, _, r, _ = np.linalg.lstsq(A[tr], target[tr], rcond=None)
        cv += float(np.mean((A[te] @ c - target[te]) ** 2))
    cv_rmse = math.sqrt(0.5 * cv)
    # map back to the raw variable
    p_scaled = np.polynomial.Polynomial(sol)
    p_raw = p_scaled(np.polynomial.Polynomial([-center / scale, 1.0 / scale]))
    coef = np.zeros(degree + 1)
    coef[:len(p_raw.coef)] = p_raw.coef
    return coef, cv_rmse


def solve_regression(problem: BsdeProblem, bundle: PathBundle,
                     degree: int = 4) -> BsdeSolution:
    """Least-squares Monte Carlo: project the transformed terminal payoff
    onto polynomials of the current state at every time slice."""
    p = problem
    N, m = bundle.n_paths, bundle.n_steps
    if N < 10 * (degree + 1):
        raise PreconditionError(
            f"need at least {10 * (degree + 1)} paths for degree {degree}")
    problem.pilot_check()
    xi = np.asarray(p.terminal_map(bundle.paths[:, -1]), dtype=float)
    if not p.generator.domain.contains(xi):
        raise PreconditionError("terminal values leave the domain")
    U = p.transform.u(xi)
    V = p.transform.range_

    # any conditional expectation of U lies in the closed sample hull;
    # clamping there keeps predictions strictly inside V and prevents the
    # inverse transform from blowing up where the true surface hugs a
    # finite endpoint of V
    hull_lo, hull_hi = float(np.min(U)), float(np.max(U))

    Y = np.empty_like(bundle.paths)
    Z = np.empty_like(bundle.paths)
    cv_errors = np.empty(m + 1)
    clamped = 0
    clipped = 0
    total = 0
    dt = bundle.dt
    deriv = np.polynomial.polynomial.polyder

    for k in range(m + 1):
        xk = bundle.paths[:, k]
        if k == m:
            yk = U.copy()
            zk = Z[:, m - 1] * p.transform.u_prime(Y[:, m - 1]) \
                if isinstance(p.terminal_map, StepTerminal) else None
            if zk is None:
                h = 1e-5 * np.maximum(1.0, np.abs(xk))
                du = (p.transform.u(np.asarray(p.terminal_map(xk + h), float))
                      - p.transform.u(np.asarray(p.terminal_map(xk - h),
                                                 float))) / (2 * h)
                sig = np.broadcast_to(np.asarray(
                    p.forward.diffusion(bundle.times[k], xk), float), xk.shape)
                zk = sig * du
            cv_errors[k] = 0.0
        elif np.ptp(xk) <= 1e-14 * max(1.0, float(np.abs(xk).max())):
            # all paths coincide (typically t0): plain mean, and the
            # martingale-increment estimator for z
            yk = np.full(N, float(np.mean(U)))
            zk = np.full(N, float(np.mean(U * bundle.increments[:, k]) / dt))
            cv_errors[k] = float(np.std(U) / math.sqrt(N))
        else:
            coef, cv_errors[k] = _polyfit_slice(xk, U, degree)
            yk = np.polynomial.polynomial.polyval(xk, coef)
            sig = np.broadcast_to(np.asarray(
                p.forward.diffusion(bundle.times[k], xk), float), xk.shape)
            zk = sig * np.polynomial.polynomial.polyval(xk, deriv(coef))
        if k < m:
            clamped += int(np.count_nonzero((yk < hull_lo) | (yk > hull_hi)))
            yk = np.clip(yk, hull_lo, hull_hi)
            inside = (V.lo < yk) & (yk < V.hi)
            n_bad = int(np.count_nonzero(~inside))
            clipped += n_bad
            total += N
            if n_bad:
                yk = V.clip_inside(yk)
        Y[:, k] = p.transform.u_inv(yk) if k < m else xi
        u_prime = p.transform.u_prime(Y[:, k])
        Z[:, k] = zk / u_prime

    frac = clipped / max(total, 1)
    if frac > 1e-3:
        raise RangeViolationError(
            f"{100 * frac:.3f}% of fitted values escaped the transform range "
            f"(budget 0.1%); clipped {clipped} of {total}")

    y0 = float(np.mean(U))
    se_y0 = float(np.std(U) / math.sqrt(N))
    Y0 = float(p.transform.u_inv(np.array([y0]))[0])
    se_Y0 = se_y0 / float(p.transform.u_prime(Y0))
    Z0 = float(np.mean(U * bundle.increments[:, 0]) / dt
               / float(p.transform.u_prime(Y0)))
    return BsdeSolution(engine="regression", problem=p, y0=y0, Y0=Y0, Z0=Z0,
                        se_y0=se_y0, se_Y0=se_Y0, times=bundle.times,
                        Y_paths=Y, Z_paths=Z, bundle=bundle,
                        cv_errors=cv_errors, clipped_fraction=frac,
                        diagnostics={"hull_clamped_fraction":
                                     clamped / max(total, 1)})


# ---------------------------------------------------------------------------
# diagnostics

@dataclass(frozen=True)
class ResidualStats:
    mean: float
    std: float
    se: float
    n_paths: int


def residual_check(sol: BsdeSolution, problem: BsdeProblem) -> ResidualStats:
    """Discrete residual of the backward equation along stored paths:
    R = Y_{t0} - [xi + sum f(Y_k)|Z_k|^2 dt - sum Z_k dB_k]."""
    if sol.Y_paths is None or sol.bundle is None:
        raise PreconditionError("solution has no stored path data")
    bundle = sol.bundle
    dt = bundle.dt
    m = bundle.n_steps
    Y, Z = sol.Y_paths, sol.Z_paths
    fY = problem.generator.f(Y[:, :m].ravel()).reshape(Y[:, :m].shape)
    xi = np.asarray(problem.terminal_map(bundle.paths[:, -1]), dtype=float)
    integral = np.sum(fY * Z[:, :m] ** 2, axis=1) * dt
    stochastic = np.sum(Z[:, :m] * bundle.increments, axis=1)
    R = Y[:, 0] - (xi + integral - stochastic)
    n = bundle.n_paths
    return ResidualStats(float(np.mean(R)), float(np.std(R)),
                         float(np.std(R) / math.sqrt(n)), n)


def martingale_diagnostic(sol: BsdeSolution, t_check) -> dict:
    """Sample means of u(Y_t) at requested times; constancy across t is the
    tower-property check."""
    if sol.Y_paths is None:
        raise PreconditionError("solution has no stored path data")
    p = sol.problem
    out = {}
    for t in t_check:
        k = int(np.argmin(np.abs(sol.times - t)))
        uy = p.transform.u(sol.Y_paths[:, k])
        out[float(sol.times[k])] = (float(np.mean(uy)),
                                    float(np.std(uy) /
                                          math.sqrt(len(uy))))
    return out
