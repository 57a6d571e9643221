"""Viscosity-solution evaluation for the quadratic parabolic equation.

v(t, x) = u^{-1}(E[u(g(X_T^{t,x}))]) solves
    dv/dt + (1/2) sigma^2 v_xx + b v_x + f(v) |sigma v_x|^2 = 0,  v(T,.) = g.
Its transform w = u(v) solves the LINEAR equation dw/dt + (1/2) sigma^2 w_xx
+ b w_x = 0, which is what the finite-difference oracle integrates; the
nonlinear residual is checked separately by central differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import solve_banded

from .errors import (NumericalError, PreconditionError, TransformRangeError,
                     ValidationError)
from .generators import Generator
from .sde import ForwardModel, brownian_increments
from .bsde import BsdeProblem, QuadratureBsdeSolver
from .transform import IntegrabilityTransform


@dataclass
class PdeProblem:
    generator: Generator
    transform: IntegrabilityTransform
    terminal: Callable[[np.ndarray], np.ndarray]   # g, mapping reals into D
    forward: ForwardModel
    horizon: float
    x_min: float
    x_max: float
    n_t: int = 400                                  # time steps
    n_x: int = 401                                  # spatial nodes
    t0: float = 0.0
    # declared hypotheses
    growth_polynomial: bool = True                  # u o g has poly growth
    allow_nonpositive: bool = False                 # accept f <= 0 variant

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValidationError("need x_min < x_max")
        if not self.t0 < self.horizon:
            raise ValidationError("need t0 < horizon")
        if self.n_t < 2 or self.n_x < 5:
            raise ValidationError("grid too small")

    def validate(self):
        sign = self.generator.sign_class
        if sign == "nonnegative":
            pass
        elif sign == "nonpositive" and self.allow_nonpositive:
            pass
        else:
            raise PreconditionError(
                "hypothesis failed: generator sign_class must be "
                "'nonnegative' (or 'nonpositive' with allow_nonpositive)")
        if not self.growth_polynomial:
            raise PreconditionError(
                "hypothesis failed: growth_polynomial not declared")
        if not self.forward.lipschitz_declared:
            raise PreconditionError(
                "hypothesis failed: forward model not declared Lipschitz")
        pad = 0.1 * (self.x_max - self.x_min)
        probe = np.linspace(self.x_min - pad, self.x_max + pad, 101)
        gx = np.asarray(self.terminal(probe), dtype=float)
        if not self.generator.domain.contains(gx):
            raise PreconditionError(
                "terminal map leaves the domain on the padded window")

    def grids(self):
        ts = np.linspace(self.t0, self.horizon, self.n_t + 1)
        xs = np.linspace(self.x_min, self.x_max, self.n_x)
        return ts, xs


@dataclass
class ValueSurface:
    ts: np.ndarray
    xs: np.ndarray
    v: np.ndarray            # shape (n_t+1, n_x)
    w: np.ndarray            # transformed values u(v)
    method: str              # feynman_kac_quadrature | feynman_kac_mc | finite_difference

    def at(self, t: float, x: float) -> float:
        i = int(np.argmin(np.abs(self.ts - t)))
        j = int(np.argmin(np.abs(self.xs - x)))
        return float(self.v[i, j])

    def to_csv(self, residual: Optional[np.ndarray] = None) -> str:
        lines = ["t,x,v,w,residual"]
        for i, t in enumerate(self.ts):
            for j, x in enumerate(self.xs):
                r = "" if residual is None else f"{residual[i, j]:.17g}"
                lines.append(f"{t:.17g},{x:.17g},{self.v[i, j]:.17g},"
                             f"{self.w[i, j]:.17g},{r}")
        return "\n".join(lines) + "\n"


def _invert_surface(p: PdeProblem, w: np.ndarray) -> np.ndarray:
    V = p.transform.range_
    inside = (V.lo < w) & (w < V.hi)
    if not np.all(inside):
        bad = np.argwhere(~inside)[0]
        raise TransformRangeError(
            f"transformed value left the range at grid node "
            f"(t_index={bad[0]}, x_index={bad[1]})")
    return p.transform.u_inv(w.ravel()).reshape(w.shape)


def solve_feynman_kac(p: PdeProblem, engine: str = "quadrature",
                      law: str = "brownian", nodes: int = 64,
                      n_paths: int = 2000, mc_steps: int = 50,
                      seed: int = 0) -> ValueSurface:
    """w(t, x) = E[u(g(X_T^{t,x}))] at every grid node, then v = u^{-1}(w)."""
    p.validate()
    ts, xs = p.grids()
    if engine == "quadrature":
        prob = BsdeProblem(p.generator, p.transform, p.terminal, p.forward,
                           p.horizon, p.t0, 0.5 * (p.x_min + p.x_max))
        solver = QuadratureBsdeSolver(prob, law, nodes)
        tt, xx = np.meshgrid(ts, xs, indexing="ij")
        w = np.asarray(solver.y(tt, xx), dtype=float)
        method = "feynman_kac_quadrature"
    elif engine == "mc":
        w = np.empty((len(ts), len(xs)))
        w[-1] = p.transform.u(np.asarray(p.terminal(xs), dtype=float))
        for i, t in enumerate(ts[:-1]):
            _, dB = brownian_increments(t, p.horizon, mc_steps, n_paths,
                                        seed + i)
            state = np.broadcast_to(xs[:, None], (len(xs), n_paths)).copy()
            dt = (p.horizon - t) / mc_steps
            times = t + dt * np.arange(mc_steps)
            # shared normals across nodes: dB has shape (n_paths, mc_steps)
            for k in range(mc_steps):
                b = p.forward.drift(times[k], state)
                s = p.forward.diffusion(times[k], state)
                state = state + b * dt + s * dB[None, :, k]
            w[i] = np.mean(
                p.transform.u(np.asarray(p.terminal(state.ravel()),
                                         float)).reshape(state.shape), axis=1)
        method = "feynman_kac_mc"
    else:
        raise ValidationError(f"unknown engine {engine!r}")
    v = _invert_surface(p, w)
    v[-1] = np.asarray(p.terminal(xs), dtype=float)   # exact at maturity
    return ValueSurface(ts=ts, xs=xs, v=v, w=w, method=method)


def solve_fd_oracle(p: PdeProblem) -> ValueSurface:
    """Crank-Nicolson integration of the linear transformed equation,
    backward from w(T, .) = u(g(.)), with second-derivative-free (linear
    extrapolation) boundary closure at the window edges."""
    p.validate()
    ts, xs = p.grids()
    n_x = len(xs)
    dx = xs[1] - xs[0]
    dt = ts[1] - ts[0]
    w = np.empty((len(ts), n_x))
    w[-1] = p.transform.u(np.asarray(p.terminal(xs), dtype=float))

    for i in range(len(ts) - 2, -1, -1):
        t_mid = 0.5 * (ts[i] + ts[i + 1])
        b = np.broadcast_to(np.asarray(p.forward.drift(t_mid, xs), float),
                            xs.shape)
        s = np.broadcast_to(np.asarray(p.forward.diffusion(t_mid, xs), float),
                            xs.shape)
        s2 = s * s
        if np.any(np.abs(b) * dx > s2 + 1e-300):
            raise NumericalError(
                "grid Peclet condition violated (|b| dx > sigma^2); "
                "use a finer spatial grid")
        # interior operator coefficients
        cm = 0.5 * s2[1:-1] / dx ** 2 - b[1:-1] / (2 * dx)   # w_{j-1}
        c0 = -s2[1:-1] / dx ** 2                              # w_j
        cp = 0.5 * s2[1:-1] / dx ** 2 + b[1:-1] / (2 * dx)   # w_{j+1}
        # eliminate boundary unknowns via w_0 = 2w_1 - w_2 and
        # w_{n-1} = 2w_{n-2} - w_{n-3}
        lower = cm.copy()
        diag = c0.copy()
        upper = cp.copy()
        diag[0] += 2 * cm[0]
        upper[0] -= cm[0]
        diag[-1] += 2 * cp[-1]
        lower[-1] -= cp[-1]

        wi = w[i + 1, 1:-1]
        # explicit half-step (I + dt/2 L) w^{i+1}
        rhs = wi + 0.5 * dt * (diag * wi)
        rhs[1:] += 0.5 * dt * lower[1:] * wi[:-1]
        rhs[:-1] += 0.5 * dt * upper[:-1] * wi[1:]
        # implicit half-step (I - dt/2 L) w^i = rhs
        ab = np.zeros((3, n_x - 2))
        ab[0, 1:] = -0.5 * dt * upper[:-1]
        ab[1, :] = 1.0 - 0.5 * dt * diag
        ab[2, :-1] = -0.5 * dt * lower[1:]
        interior = solve_banded((1, 1), ab, rhs)
        w[i, 1:-1] = interior
        w[i, 0] = 2 * interior[0] - interior[1]
        w[i, -1] = 2 * interior[-1] - interior[-2]

    v = _invert_surface(p, w)
    return ValueSurface(ts=ts, xs=xs, v=v, w=w, method="finite_difference")


def domain_doubling_check(p: PdeProblem, x_eval: float,
                          tol: float = 1e-6) -> float:
    """Compare v(t0, x_eval) on the declared window against a doubled
    window at the same resolution; returns the absolute difference."""
    half = 0.5 * (p.x_max - p.x_min)
    center = 0.5 * (p.x_min + p.x_max)
    wide = PdeProblem(p.generator, p.transform, p.terminal, p.forward,
                      p.horizon, center - 2 * half, center + 2 * half,
                      n_t=p.n_t, n_x=2 * p.n_x - 1, t0=p.t0,
                      growth_polynomial=p.growth_polynomial,
                      allow_nonpositive=p.allow_nonpositive)
    s1 = solve_fd_oracle(p)
    s2 = solve_fd_oracle(wide)
    diff = abs(s1.at(p.t0, x_eval) - s2.at(p.t0, x_eval))
    if diff > tol:
        raise PreconditionError(
            f"window too small: doubling the domain moved v(t0, {x_eval}) "
            f"by {diff:.3g} > {tol:.3g}")
    return diff


@dataclass(frozen=True)
class ResidualGrid:
    ts: np.ndarray
    xs: np.ndarray
    values: np.ndarray
    max_abs: float
    rms: float


def pde_residual(surface: ValueSurface, p: PdeProblem,
                 t_margin: int = 2, x_margin: int = 3) -> ResidualGrid:
    """Central-difference residual of the nonlinear equation on an interior
    subgrid (margins keep the stencil away from boundary and terminal
    layers)."""
    if t_margin < 1 or x_margin < 1:
        raise PreconditionError(
            "subgrid must not touch the boundary or terminal layers")
    ts, xs, v = surface.ts, surface.xs, surface.v
    dt = ts[1] - ts[0]
    dx = xs[1] - xs[0]
    ti = slice(t_margin, len(ts) - t_margin)
    xi = slice(x_margin, len(xs) - x_margin)
    v_t = (v[t_margin + 1:len(ts) - t_margin + 1, xi]
           - v[t_margin - 1:len(ts) - t_margin - 1, xi]) / (2 * dt)
    v_x = (v[ti, x_margin + 1:len(xs) - x_margin + 1]
           - v[ti, x_margin - 1:len(xs) - x_margin - 1]) / (2 * dx)
    v_xx = (v[ti, x_margin + 1:len(xs) - x_margin + 1]
            - 2 * v[ti, xi]
            + v[ti, x_margin - 1:len(xs) - x_margin - 1]) / dx ** 2
    sub_t = ts[ti]
    sub_x = xs[xi]
    tt, xx = np.meshgrid(sub_t, sub_x, indexing="ij")
    b = np.broadcast_to(np.asarray(p.forward.drift(tt, xx), float), xx.shape)
    s = np.broadcast_to(np.asarray(p.forward.diffusion(tt, xx), float),
                        xx.shape)
    vc = v[ti, xi]
    fv = p.generator.f(vc.ravel()).reshape(vc.shape)
    R = v_t + 0.5 * s * s * v_xx + b * v_x + fv * (s * v_x) ** 2
    return ResidualGrid(ts=sub_t, xs=sub_x, values=R,
                        max_abs=float(np.max(np.abs(R))),
                        rms=float(np.sqrt(np.mean(R ** 2))))
