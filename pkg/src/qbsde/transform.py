"""The integrability transform u(x) = int_alpha^x exp(2 int_alpha^y f) dy.

The transform is strictly increasing with u' > 0 and turns the quadratic
driver f(y)|z|^2 into a plain conditional expectation; everything else in
the package is built on top of it.  Two representations are supported:

* ``closed_form`` -- exact formulas supplied by a builtin generator;
* ``tabulated``   -- a graded grid of (x, u, u') nodes produced by panel
  quadrature, evaluated through a cubic Hermite spline (exact node
  derivatives keep the interpolant strictly monotone in practice).

Endpoint behaviour of D is probed through a geometric sequence of cut
points, which classifies each endpoint of the image V as finite or
infinite (finite when the tail contributions converge under the
tolerance, infinite when partial sums exceed the divergence cap).
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicHermiteSpline
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import (DomainError, NotLocallyIntegrableError, NumericalError,
                     TransformRangeError, UnsupportedBoundError)
from .generators import Generator
from .intervals import OpenInterval

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_GL_X = 0.5 * (_GL_X + 1.0)  # nodes on [0, 1]
_GL_W = 0.5 * _GL_W


def _hermite01(t, ga, da, gb, db, h):
    """Cubic Hermite value on [0,1] given endpoint values/derivatives."""
    t2 = t * t
    t3 = t2 * t
    return (ga * (2 * t3 - 3 * t2 + 1) + gb * (-2 * t3 + 3 * t2)
            + h * (da * (t3 - 2 * t2 + t) + db * (t3 - t2)))


class IntegrabilityTransform(BaseEstimator, TransformerMixin):
    """Strictly increasing transform built from a generator f on D.

    Parameters
    ----------
    generator : Generator
        The function f with its declared metadata.
    alpha : float, optional
        Base point in D; defaults to a numerically convenient interior
        point (the solved processes do not depend on this choice).
    tol : float
        Absolute+relative tolerance for all quadrature.
    n_nodes : int
        Grid size of the tabulated representation.
    representation : {"auto", "closed_form", "tabulated"}
        "auto" prefers the exact formulas when the generator has them.
    core_span : float
        Half-width of the tabulated window on an infinite side of D.
    divergence_cap : float
        Partial sums beyond this declare the corresponding endpoint of V
        infinite.

    After :meth:`fit` the instance is immutable and can be shared across
    workers.
    """

    def __init__(self, generator: Generator, alpha: float | None = None,
                 tol: float = 1e-10, n_nodes: int = 2048,
                 representation: str = "auto", core_span: float = 20.0,
                 divergence_cap: float = 1e12):
        self.generator = generator
        self.alpha = alpha
        self.tol = tol
        self.n_nodes = n_nodes
        self.representation = representation
        self.core_span = core_span
        self.divergence_cap = divergence_cap

    # -- construction -----------------------------------------------------

    def fit(self, X=None, y=None):
        gen = self.generator
        D = gen.domain
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        alpha = D.default_base_point() if self.alpha is None else float(self.alpha)
        D.require(alpha, "base point alpha")
        self.alpha_ = alpha

        rep = self.representation
        if rep == "auto":
            rep = "closed_form" if gen.closed_transform is not None else "tabulated"
        if rep == "closed_form":
            if gen.closed_transform is None:
                raise NotImplementedError(
                    f"generator {gen.name!r} has no closed-form transform")
            self._closed = gen.closed_transform(alpha)
        elif rep == "tabulated":
            self._closed = None
        else:
            raise ValueError(f"unknown representation {rep!r}")
        self.representation_ = rep

        if gen.antiderivative is not None:
            Falpha = float(gen.antiderivative(alpha))
            self._two_int_exact = lambda x: 2.0 * (
                np.asarray(gen.antiderivative(x), dtype=float) - Falpha)
        else:
            self._two_int_exact = None

        self._audit_interior_integrability()
        if rep == "tabulated":
            self._build_grid()
        lo_v, lo_edge = self._scan_side(-1)
        hi_v, hi_edge = self._scan_side(+1)
        if not lo_v < hi_v:
            raise NumericalError("degenerate image interval V")
        self.range_ = OpenInterval(lo_v, hi_v)
        return self

    # interior integrability audit ------------------------------------------

    def _audit_interior_integrability(self):
        """Reject generators whose inner integral diverges strictly inside D.

        Divergence at the endpoints of D is legitimate (it shapes the image
        interval V), but a non-integrable singularity in the interior would
        silently corrupt u.  Blow-up candidates are located by sampling |f|
        on an interior window that excludes endpoint neighbourhoods, each
        candidate is sharpened by iterative argmax refinement, and the
        integral of f over shrinking dyadic shells around it is tested for
        convergence: shell contributions that fail to decay mean the inner
        integral diverges there.
        """
        gen = self.generator
        D = gen.domain
        alpha = self.alpha_
        lo = (D.lo + 0.02 * (alpha - D.lo) if math.isfinite(D.lo)
              else alpha - self.core_span)
        hi = (D.hi - 0.02 * (D.hi - alpha) if math.isfinite(D.hi)
              else alpha + self.core_span)
        xs = np.linspace(lo, hi, 4097)
        with np.errstate(all="ignore"):
            fv = np.abs(np.asarray(gen(xs), dtype=float))
        finite = np.isfinite(fv)
        if not finite.any():
            raise NotLocallyIntegrableError(
                "f is not finite anywhere on the sampled interior of D")
        scale = float(np.median(fv[finite])) + 1e-12
        idx = np.where(~finite | (fv > 50.0 * scale))[0]
        if idx.size == 0:
            return
        cell = (hi - lo) / 4096.0
        clusters = np.split(idx, np.where(np.diff(idx) > 5)[0] + 1)
        for cl in clusters[:16]:
            vals = np.where(finite[cl], fv[cl], np.inf)
            x0 = float(xs[cl[int(np.argmax(vals))]])
            s = self._refine_singularity(x0, 2.0 * cell, lo, hi)
            self._check_shell_convergence(s, cell, lo, hi)

    def _refine_singularity(self, x0: float, w: float, lo: float,
                            hi: float) -> float:
        """Sharpen the location of a candidate blow-up point of |f|."""
        s = x0
        with np.errstate(all="ignore"):
            for _ in range(80):
                pts = np.linspace(max(lo, s - w), min(hi, s + w), 33)
                fv = np.abs(np.asarray(self.generator(pts), dtype=float))
                fv = np.where(np.isnan(fv), np.inf, fv)
                s = float(pts[int(np.argmax(fv))])
                w *= 0.125
                if w < 1e-300:
                    break
        return s

    def _check_shell_convergence(self, s: float, d0: float, lo: float,
                                 hi: float):
        """Raise when int f over dyadic shells around s fails to converge."""
        gen = self.generator
        for direction in (-1.0, 1.0):
            incs = []
            with np.errstate(all="ignore"):
                for k in range(50):
                    far = s + direction * d0 * 2.0 ** -k
                    near = s + direction * d0 * 2.0 ** -(k + 1)
                    a, b = min(near, far), max(near, far)
                    if a < lo or b > hi:
                        continue
                    h = b - a
                    vals = np.asarray(gen(a + h * _GL_X), dtype=float)
                    inc = float(h * (vals @ _GL_W))
                    if not math.isfinite(inc):
                        raise NotLocallyIntegrableError(
                            "inner integral of f diverges inside D near "
                            f"x={s!r}")
                    incs.append(abs(inc))
            if len(incs) < 10:
                continue
            head = float(np.mean(incs[:5]))
            tail = float(np.mean(incs[-5:]))
            if head > 0.0 and tail > 0.25 * head:
                raise NotLocallyIntegrableError(
                    "inner integral of f diverges inside D near "
                    f"x={s!r}: contributions of shrinking shells do not "
                    "decay")

    # panel machinery ------------------------------------------------------

    def _accumulate(self, nodes: np.ndarray, g_start: float, u_start: float):
        """Cumulative 2*int f and int exp(2 int f) along ordered nodes.

        Returns (G, U) arrays at the nodes.  Uses vectorized 8-point
        Gauss-Legendre panels; the inner integral is exact when the
        generator carries an antiderivative, otherwise interpolated by a
        cubic Hermite of the accumulated 2*int f (whose derivative 2f is
        known exactly).
        """
        gen = self.generator
        a = nodes[:-1]
        b = nodes[1:]
        h = b - a
        pts = a[:, None] + h[:, None] * _GL_X[None, :]
        with np.errstate(over="ignore", under="ignore", invalid="ignore",
                         divide="ignore"):
            if self._two_int_exact is not None:
                G = g_start + (self._two_int_exact(nodes)
                               - self._two_int_exact(nodes[0]))
                g_pts = g_start + (self._two_int_exact(pts)
                                   - self._two_int_exact(nodes[0]))
            else:
                fvals = gen(pts)
                dG = 2.0 * h * (fvals @ _GL_W)
                if not np.all(np.isfinite(dG)):
                    raise NotLocallyIntegrableError(
                        "inner integral of f diverges inside D "
                        f"near x={a[~np.isfinite(dG)][0]!r}")
                G = g_start + np.concatenate([[0.0], np.cumsum(dG)])
                da = 2.0 * gen(a)
                db = 2.0 * gen(b)
                g_pts = _hermite01(_GL_X[None, :], G[:-1, None], da[:, None],
                                   G[1:, None], db[:, None], h[:, None])
            du = h * (np.exp(g_pts) @ _GL_W)
            U = u_start + np.concatenate([[0.0], np.cumsum(du)])
        return G, U

    def _build_grid(self):
        D = self.generator.domain
        alpha = self.alpha_
        lo_edge = self._window_edge(-1)
        hi_edge = self._window_edge(+1)
        half = max(self.n_nodes // 2, 16)
        left = self._side_nodes(alpha, lo_edge, half, math.isfinite(D.lo))
        right = self._side_nodes(alpha, hi_edge, half, math.isfinite(D.hi))
        nodes = np.unique(np.concatenate([left, [alpha], right]))
        # accumulate outward from alpha in both directions
        ia = int(np.searchsorted(nodes, alpha))
        G = np.empty_like(nodes)
        U = np.empty_like(nodes)
        g_r, u_r = self._accumulate(nodes[ia:], 0.0, 0.0)
        G[ia:], U[ia:] = g_r, u_r
        if ia > 0:
            g_l, u_l = self._accumulate(nodes[ia::-1], 0.0, 0.0)
            G[:ia + 1] = g_l[::-1]
            U[:ia + 1] = u_l[::-1]
        ok = np.isfinite(G) & np.isfinite(U) & (np.abs(U) < self.divergence_cap)
        if not np.all(ok):
            keep = np.where(ok)[0]
            if keep.size < 8 or not ok[ia]:
                raise NumericalError("transform grid collapsed; u overflows "
                                     "almost everywhere in the window")
            lo_k, hi_k = keep.min(), keep.max()
            nodes, G, U = nodes[lo_k:hi_k + 1], G[lo_k:hi_k + 1], U[lo_k:hi_k + 1]
            ia = int(np.searchsorted(nodes, alpha))
        # drop nodes whose u increment underflows (saturated tails), so the
        # tabulated u stays strictly increasing
        for _ in range(8):
            d = np.diff(U)
            if np.all(d > 0):
                break
            keep = np.concatenate([[True], d > 0])
            keep[ia] = True
            nodes, G, U = nodes[keep], G[keep], U[keep]
            ia = int(np.searchsorted(nodes, alpha))
        if np.any(np.diff(U) <= 0):
            raise NumericalError("tabulated u is not strictly increasing; "
                                 "refine the grid or tighten tol")
        self.grid_x_ = nodes
        self.grid_g_ = G
        with np.errstate(over="ignore", under="ignore"):
            self.grid_uprime_ = np.exp(G)
        self.grid_u_ = U
        self._u_spline = CubicHermiteSpline(nodes, U, self.grid_uprime_)
        if self._two_int_exact is None:
            self._g_spline = CubicHermiteSpline(nodes, G, 2.0 * self.generator(nodes))
        else:
            self._g_spline = None
        # exact node derivatives keep Hermite interpolation monotone for
        # smooth u; fall back to a shape-preserving fit if sampling finds
        # a real violation (beyond rounding of near-flat tails)
        fine = 0.5 * (nodes[:-1] + nodes[1:])
        sample = self._u_spline(np.sort(np.concatenate([nodes, fine])))
        floor = -1e-13 * max(1.0, float(np.max(np.abs(U))))
        if np.any(np.diff(sample) < floor):
            from scipy.interpolate import PchipInterpolator
            self._u_spline = PchipInterpolator(nodes, U)

    def _window_edge(self, direction: int) -> float:
        """Edge of the tabulated window on one side of alpha."""
        D = self.generator.domain
        alpha = self.alpha_
        e = D.hi if direction > 0 else D.lo
        if math.isfinite(e):
            # geometric approach; stop once the remaining gap is tiny
            gap = abs(e - alpha)
            return e - direction * gap * 2.0 ** -45
        return alpha + direction * self.core_span

    def _side_nodes(self, alpha, edge, n, graded: bool) -> np.ndarray:
        if graded:
            n_geo = n // 2
            d_near = abs(edge - alpha) * 2.0 ** -45
            d_far = abs(edge - alpha)
            geo = edge - np.sign(edge - alpha) * np.geomspace(d_near, d_far, n_geo)
            uni = np.linspace(alpha, edge, n - n_geo)
            return np.unique(np.concatenate([geo, uni]))
        return np.linspace(alpha, edge, n)

    def _endpoint_cuts(self, direction: int) -> np.ndarray:
        D = self.generator.domain
        alpha = self.alpha_
        e = D.hi if direction > 0 else D.lo
        if math.isfinite(e):
            gaps = abs(e - alpha) * 0.5 ** np.arange(1, 160)
            # stay above float resolution at the endpoint
            gaps = gaps[gaps > 8.0 * np.finfo(float).eps * max(1.0, abs(e))]
            return e - direction * gaps
        return alpha + direction * (2.0 ** np.arange(0, 64) - 0.5)

    def _scan_side(self, direction: int):
        """Probe one endpoint of D through a geometric cut sequence.

        Returns (V endpoint on that side, last cut point reached).  The
        endpoint of V is declared finite when consecutive tail
        contributions fall under the tolerance and infinite when the
        partial sums exceed the divergence cap.
        """
        if self._closed is not None:
            return self._scan_side_closed(direction)
        alpha = self.alpha_
        total = 0.0
        prev = alpha
        small = 0
        last_inc = None
        ratio = math.nan
        g_run = 0.0
        for x in self._endpoint_cuts(direction):
            if direction > 0:
                seg = np.linspace(prev, x, 17)
                g_seg, u_seg = self._accumulate(seg, g_run, 0.0)
                inc = float(u_seg[-1])
                g_run = float(g_seg[-1])
            else:
                seg = np.linspace(x, prev, 17)
                g_seg, u_seg = self._accumulate(seg, 0.0, 0.0)
                shift = g_run - float(g_seg[-1])
                inc = (-float(u_seg[-1]) * math.exp(shift) if shift < 700.0
                       else -math.inf * np.sign(u_seg[-1]))
                g_run = shift  # absolute 2*int f at the new cut
            if not math.isfinite(inc) or not math.isfinite(total + inc):
                return (direction * math.inf, prev)
            total += inc
            if abs(total) > self.divergence_cap:
                return (direction * math.inf, x)
            if abs(inc) <= self.tol * max(1.0, abs(total)):
                small += 1
                if small >= 3:
                    rem = 0.0
                    if last_inc:
                        ratio = abs(inc) / abs(last_inc)
                        if ratio < 0.9:
                            rem = abs(inc) * ratio / (1.0 - ratio)
                    return (total + math.copysign(rem, direction), x)
            else:
                small = 0
            ratio = abs(inc) / abs(last_inc) if last_inc else math.nan
            last_inc = inc
            prev = x
        # cuts exhausted without a verdict: decide by the increment ratio
        if last_inc and abs(last_inc) > self.tol * max(1.0, abs(total)):
            if not ratio < 0.95:
                return (direction * math.inf, prev)
            total += math.copysign(abs(last_inc) * ratio / (1.0 - ratio), direction)
        return (total, prev)

    def _scan_side_closed(self, direction: int):
        prev_val = 0.0
        prev = self.alpha_
        small = 0
        last_diff = None
        ratio = math.nan
        with np.errstate(over="ignore", invalid="ignore"):
            for x in self._endpoint_cuts(direction):
                val = float(self._closed.u(x))
                if not math.isfinite(val) or abs(val) > self.divergence_cap:
                    return (direction * math.inf, prev)
                diff = val - prev_val
                if abs(diff) <= self.tol * max(1.0, abs(val)):
                    small += 1
                    if small >= 3:
                        return (val, x)
                else:
                    small = 0
                if last_diff:
                    ratio = abs(diff) / abs(last_diff)
                last_diff = diff
                prev_val = val
                prev = x
        if last_diff and abs(last_diff) > self.tol * max(1.0, abs(prev_val)):
            if not ratio < 0.95:
                return (direction * math.inf, prev)
            prev_val += math.copysign(abs(last_diff) * ratio / (1.0 - ratio),
                                      direction)
        return (prev_val, prev)

    # -- evaluation --------------------------------------------------------

    def _require_fitted(self):
        if not hasattr(self, "alpha_"):
            raise RuntimeError("transform is not fitted; call fit() first")

    def u(self, x):
        """Evaluate u at points of D (scalar or array)."""
        self._require_fitted()
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        if not self.generator.domain.contains(x):
            bad = x[~self.generator.domain.contains_mask(x)][0]
            raise DomainError(f"x={bad!r} outside D="
                              f"({self.generator.domain.lo}, {self.generator.domain.hi})")
        if self._closed is not None:
            out = np.asarray(self._closed.u(x), dtype=float)
        else:
            out = np.empty_like(x)
            inside = (x >= self.grid_x_[0]) & (x <= self.grid_x_[-1])
            out[inside] = self._u_spline(x[inside])
            for i in np.where(~inside)[0]:
                out[i] = self._u_beyond(float(x[i]))
        return float(out[0]) if scalar else out.reshape(np.shape(x))

    def _u_beyond(self, x: float) -> float:
        """u at a point of D outside the tabulated window."""
        if x > self.grid_x_[-1]:
            edge, u_edge, g_edge = self.grid_x_[-1], self.grid_u_[-1], self.grid_g_[-1]
            seg = np.linspace(edge, x, 65)
            _, u_seg = self._accumulate(seg, g_edge, 0.0)
            return float(u_edge + u_seg[-1])
        edge, u_edge, g_edge = self.grid_x_[0], self.grid_u_[0], self.grid_g_[0]
        seg = np.linspace(x, edge, 65)
        g_seg, u_seg = self._accumulate(seg, 0.0, 0.0)
        # shift so that G matches g_edge at the right end of the segment
        shift = g_edge - g_seg[-1]
        return float(u_edge - u_seg[-1] * math.exp(shift)) if abs(shift) < 700 \
            else float(u_edge - math.copysign(math.inf, u_seg[-1]))

    def u_prime(self, x):
        """Evaluate u' = exp(2 int_alpha^x f) > 0."""
        self._require_fitted()
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        if not self.generator.domain.contains(x):
            bad = x[~self.generator.domain.contains_mask(x)][0]
            raise DomainError(f"x={bad!r} outside D")
        with np.errstate(over="ignore", under="ignore"):
            if self._closed is not None:
                out = np.asarray(self._closed.u_prime(x), dtype=float)
            elif self._two_int_exact is not None:
                out = np.exp(self._two_int_exact(x))
            else:
                out = np.empty_like(x)
                inside = (x >= self.grid_x_[0]) & (x <= self.grid_x_[-1])
                out[inside] = np.exp(self._g_spline(x[inside]))
                for i in np.where(~inside)[0]:
                    out[i] = math.exp(self._g_beyond(float(x[i])))
        return float(out[0]) if scalar else out.reshape(np.shape(x))

    def _g_beyond(self, x: float) -> float:
        if x > self.grid_x_[-1]:
            val, _ = integrate.quad(self.generator, self.grid_x_[-1], x,
                                    limit=200)
            return float(self.grid_g_[-1] + 2.0 * val)
        val, _ = integrate.quad(self.generator, x, self.grid_x_[0], limit=200)
        return float(self.grid_g_[0] - 2.0 * val)

    def u_inv(self, y):
        """Invert u on V by bracketing bisection plus derivative polish."""
        self._require_fitted()
        y = np.asarray(y, dtype=float)
        scalar = y.ndim == 0
        y = np.atleast_1d(y).astype(float)
        V = self.range_
        if np.any(y <= V.lo) or np.any(y >= V.hi):
            bad = y[(y <= V.lo) | (y >= V.hi)][0]
            raise TransformRangeError(f"y={bad!r} outside V=({V.lo}, {V.hi})")
        if self._closed is not None and self._closed.u_inv is not None:
            out = np.asarray(self._closed.u_inv(y), dtype=float)
            return float(out[0]) if scalar else out.reshape(np.shape(y))
        if self._closed is not None:
            out = np.array([self._inv_scalar_closed(v) for v in y])
            return float(out[0]) if scalar else out.reshape(np.shape(y))

        out = np.empty_like(y)
        in_table = (y >= self.grid_u_[0]) & (y <= self.grid_u_[-1])
        if np.any(in_table):
            out[in_table] = self._inv_vectorized(y[in_table])
        for i in np.where(~in_table)[0]:
            out[i] = self._inv_scalar_tail(float(y[i]))
        return float(out[0]) if scalar else out.reshape(np.shape(y))

    def _inv_vectorized(self, y: np.ndarray) -> np.ndarray:
        idx = np.clip(np.searchsorted(self.grid_u_, y) - 1, 0,
                      len(self.grid_u_) - 2)
        lo = self.grid_x_[idx].copy()
        hi = self.grid_x_[idx + 1].copy()
        for _ in range(52):
            mid = 0.5 * (lo + hi)
            too_low = self._u_spline(mid) < y
            lo = np.where(too_low, mid, lo)
            hi = np.where(too_low, hi, mid)
        x = 0.5 * (lo + hi)
        for _ in range(2):
            x = x - (self._u_spline(x) - y) / self.u_prime(x)
            x = np.clip(x, self.grid_x_[0], self.grid_x_[-1])
        return x

    def _inv_scalar_closed(self, y: float) -> float:
        D = self.generator.domain
        alpha = self.alpha_
        if y == 0.0:
            return alpha
        # expand a bracket away from alpha (u(alpha) = 0)
        step = 1.0
        lo = hi = alpha
        if y > 0.0:
            while self.u(hi) < y:
                lo = hi
                hi = 0.5 * (hi + D.hi) if math.isfinite(D.hi) else hi + step
                step *= 2.0
        else:
            while self.u(lo) > y:
                hi = lo
                lo = 0.5 * (lo + D.lo) if math.isfinite(D.lo) else lo - step
                step *= 2.0
        return self._bisect(lo, hi, y, self.u)

    def _inv_scalar_tail(self, y: float) -> float:
        D = self.generator.domain
        if y > self.grid_u_[-1]:
            lo = self.grid_x_[-1]
            hi = lo
            step = max(1.0, abs(lo)) * 1e-6
            while self.u(hi) < y:
                lo = hi
                hi = 0.5 * (hi + D.hi) if math.isfinite(D.hi) else hi + step
                step *= 2.0
        else:
            hi = self.grid_x_[0]
            lo = hi
            step = max(1.0, abs(hi)) * 1e-6
            while self.u(lo) > y:
                hi = lo
                lo = 0.5 * (lo + D.lo) if math.isfinite(D.lo) else lo - step
                step *= 2.0
        return self._bisect(lo, hi, y, self.u)

    @staticmethod
    def _bisect(lo, hi, y, fn) -> float:
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if hi - lo <= 1e-13 * max(1.0, abs(mid)):
                break
            if fn(mid) < y:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    # -- sklearn-style array API -------------------------------------------

    def transform(self, X):
        X = np.asarray(X, dtype=float)
        return self.u(X)

    def inverse_transform(self, Y):
        Y = np.asarray(Y, dtype=float)
        return self.u_inv(Y)

    def derivative(self, X):
        X = np.asarray(X, dtype=float)
        return self.u_prime(X)

    # -- extras ------------------------------------------------------------

    def change_base_point(self, beta: float):
        """Affine coefficients (a, b) with u^alpha = a * u^beta + b.

        Shifting the base point only rescales and recenters the transform:
        a = u'(beta) and b = u(beta) relative to the current base point.
        """
        self._require_fitted()
        self.generator.domain.require(beta, "base point beta")
        return float(self.u_prime(beta)), float(self.u(beta))

    def exp_bound_check(self, x) -> bool:
        """Self-test of the exponential bound implied by a declared
        constant bound on f.  True is always expected."""
        self._require_fitted()
        gen = self.generator
        alpha = self.alpha_
        x = np.asarray(x, dtype=float)
        tol = self.tol
        if gen.lower_bound is not None and gen.lower_bound > 0:
            beta = gen.lower_bound
            bound = np.expm1(2.0 * beta * (x - alpha)) / (2.0 * beta)
            return bool(np.all(self.u(x) >= bound
                               - tol * np.maximum(1.0, np.abs(bound))))
        if gen.upper_bound is not None and gen.upper_bound < 0:
            beta = -gen.upper_bound
            bound = -np.expm1(-2.0 * beta * (x - alpha)) / (2.0 * beta)
            return bool(np.all(self.u(x) <= bound
                               + tol * np.maximum(1.0, np.abs(bound))))
        raise UnsupportedBoundError(
            "exponential bound check needs a declared strictly positive "
            "lower bound or strictly negative upper bound on f")

    # -- CSV table round trip ----------------------------------------------

    def to_csv(self, path):
        """Export the tabulated grid as ``x,u,uprime`` at full precision."""
        self._require_fitted()
        if self.representation_ == "closed_form":
            x = np.linspace(*self._default_export_window(), self.n_nodes)
            u = self.u(x)
            up = self.u_prime(x)
        else:
            x, u, up = self.grid_x_, self.grid_u_, self.grid_uprime_
        with open(path, "w") as fh:
            fh.write("x,u,uprime\n")
            for xi, ui, upi in zip(x, u, up):
                fh.write(f"{xi:.17g},{ui:.17g},{upi:.17g}\n")

    def _default_export_window(self):
        D = self.generator.domain
        lo = D.lo if math.isfinite(D.lo) else self.alpha_ - self.core_span
        hi = D.hi if math.isfinite(D.hi) else self.alpha_ + self.core_span
        w = hi - lo
        return lo + 1e-9 * w, hi - 1e-9 * w

    @classmethod
    def from_csv(cls, path, generator: Generator | None = None,
                 tol: float = 1e-10):
        """Rebuild a tabulated transform from an exported table.

        The image interval is taken from the table itself, so evaluation
        is restricted to the tabulated window.
        """
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        x, u, up = data[:, 0], data[:, 1], data[:, 2]
        if generator is None:
            dom = OpenInterval(x[0] - 1e-12 * max(1, abs(x[0])),
                               x[-1] + 1e-12 * max(1, abs(x[-1])))
            generator = Generator(f=lambda y: np.zeros_like(np.asarray(y)),
                                  domain=dom, name="tabulated-import")
        i_alpha = int(np.argmin(np.abs(u)))
        obj = cls(generator, alpha=float(x[i_alpha]), tol=tol,
                  n_nodes=len(x), representation="tabulated")
        obj.alpha_ = float(x[i_alpha])
        obj.representation_ = "tabulated"
        obj._closed = None
        obj._two_int_exact = None
        obj.grid_x_ = x
        obj.grid_u_ = u
        obj.grid_uprime_ = up
        obj.grid_g_ = np.log(up)
        obj._u_spline = CubicHermiteSpline(x, u, up)
        obj._g_spline = CubicHermiteSpline(x, obj.grid_g_,
                                           np.gradient(obj.grid_g_, x))
        obj.range_ = OpenInterval(float(u[0]), float(u[-1]))
        return obj


def build_transform(generator: Generator, alpha: float | None = None,
                    tol: float = 1e-10, n_nodes: int = 2048,
                    representation: str = "auto",
                    core_span: float = 20.0) -> IntegrabilityTransform:
    """Build and fit a transform in one call."""
    return IntegrabilityTransform(
        generator, alpha=alpha, tol=tol, n_nodes=n_nodes,
        representation=representation, core_span=core_span).fit()
