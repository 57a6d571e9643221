"""Forward simulation: Euler-Maruyama paths with reproducible seeding.

All randomness is drawn from a counter-based Philox generator keyed by the
seed alone, so a bundle is bit-reproducible and two models simulated from
the same seed share identical Brownian increments (common random numbers).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import SimulationError, ValidationError


@dataclass(frozen=True)
class ForwardModel:
    """dX = b(t, X) dt + sigma(t, X) dB, globally defined on the real line."""

    drift: Callable[[float, np.ndarray], np.ndarray]
    diffusion: Callable[[float, np.ndarray], np.ndarray]
    dimension: int = 1
    lipschitz_declared: bool = True
    name: str = "custom"

    def __post_init__(self):
        if self.dimension != 1:
            raise ValidationError("only one-dimensional state is supported")


@dataclass(frozen=True)
class PathBundle:
    """Simulated paths on a uniform grid, immutable after construction."""

    times: np.ndarray          # shape (m+1,)
    paths: np.ndarray          # shape (N, m+1)
    increments: np.ndarray     # shape (N, m), Brownian increments
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        self.times.setflags(write=False)
        self.paths.setflags(write=False)
        self.increments.setflags(write=False)

    @property
    def n_paths(self) -> int:
        return self.paths.shape[0]

    @property
    def n_steps(self) -> int:
        return self.increments.shape[1]

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def to_csv(self, max_paths: Optional[int] = None) -> str:
        lines = ["path_id,step,t,x"]
        n = self.n_paths if max_paths is None else min(max_paths, self.n_paths)
        for i in range(n):
            for k, t in enumerate(self.times):
                lines.append(f"{i},{k},{t:.17g},{self.paths[i, k]:.17g}")
        return "\n".join(lines) + "\n"


def brownian_increments(t0: float, T: float, steps: int, n_paths: int,
                        seed: int) -> tuple:
    """Shared noise for common-random-number experiments."""
    dt = (T - t0) / steps
    rng = np.random.Generator(np.random.Philox(seed))
    dB = rng.standard_normal((n_paths, steps)) * np.sqrt(dt)
    times = t0 + dt * np.arange(steps + 1)
    times[-1] = T
    return times, dB


def simulate(model: ForwardModel, t0: float, x0: float, T: float, steps: int,
             n_paths: int, seed: int,
             increments: Optional[np.ndarray] = None) -> PathBundle:
    """Euler-Maruyama: X_{k+1} = X_k + b(t_k, X_k) dt + sigma(t_k, X_k) dB_k.

    Passing ``increments`` reuses pre-drawn noise (common random numbers);
    its shape must be (n_paths, steps).
    """
    if not t0 < T:
        raise ValidationError(f"need t0 < T, got t0={t0}, T={T}")
    if steps < 1 or n_paths < 1:
        raise ValidationError("need steps >= 1 and n_paths >= 1")
    times, dB = brownian_increments(t0, T, steps, n_paths, seed)
    if increments is not None:
        dB = np.asarray(increments, dtype=float)
        if dB.shape != (n_paths, steps):
            raise ValidationError(
                f"increments shape {dB.shape} != {(n_paths, steps)}")
    dt = (T - t0) / steps
    X = np.empty((n_paths, steps + 1))
    X[:, 0] = x0
    for k in range(steps):
        xk = X[:, k]
        b = np.broadcast_to(np.asarray(model.drift(times[k], xk), dtype=float),
                            xk.shape)
        s = np.broadcast_to(
            np.asarray(model.diffusion(times[k], xk), dtype=float), xk.shape)
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(s))):
            bad = int(np.flatnonzero(~(np.isfinite(b) & np.isfinite(s)))[0])
            raise SimulationError(
                f"non-finite drift/diffusion at path {bad}, step {k}")
        X[:, k + 1] = xk + b * dt + s * dB[:, k]
        if not np.all(np.isfinite(X[:, k + 1])):
            bad = int(np.flatnonzero(~np.isfinite(X[:, k + 1]))[0])
            raise SimulationError(f"non-finite state at path {bad}, step {k + 1}")
    return PathBundle(times=times, paths=X, increments=dB, seed=seed)


def first_exit(bundle: PathBundle, band: tuple) -> np.ndarray:
    """Smallest grid index at which each path leaves the open band, else m."""
    lo, hi = band
    if not lo < hi:
        raise ValidationError("band must be a nonempty interval")
    outside = (bundle.paths <= lo) | (bundle.paths >= hi)
    m = bundle.n_steps
    idx = np.where(outside.any(axis=1), outside.argmax(axis=1), m)
    return np.minimum(idx, m)


# ---------------------------------------------------------------------------
# factories for the models with exact transition laws

def brownian_model() -> ForwardModel:
    return ForwardModel(drift=lambda t, x: np.zeros_like(x),
                        diffusion=lambda t, x: np.ones_like(x),
                        name="brownian")


def scaled_brownian_model(mu: float = 0.0, sigma: float = 1.0) -> ForwardModel:
    return ForwardModel(drift=lambda t, x: np.full_like(x, mu),
                        diffusion=lambda t, x: np.full_like(x, sigma),
                        name="scaled_brownian")


def geometric_brownian_model(mu: float = 0.0, sigma: float = 1.0) -> ForwardModel:
    return ForwardModel(drift=lambda t, x: mu * x,
                        diffusion=lambda t, x: sigma * x,
                        name="geometric_brownian")
