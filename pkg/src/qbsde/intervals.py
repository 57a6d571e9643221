"""Open intervals with possibly infinite endpoints."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class OpenInterval:
    """An open interval (lo, hi); either endpoint may be infinite.

    Membership is strict: ``contains(lo)`` and ``contains(hi)`` are False.
    """

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got ({self.lo}, {self.hi})")

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all((self.lo < x) & (x < self.hi)))

    def contains_mask(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (self.lo < x) & (x < self.hi)

    @property
    def is_bounded(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def default_base_point(self) -> float:
        """Numerically convenient interior point: midpoint for a bounded
        interval, 0 when it is inside, otherwise one unit in from the
        finite endpoint."""
        if self.is_bounded:
            return 0.5 * (self.lo + self.hi)
        if self.contains(0.0):
            return 0.0
        if math.isfinite(self.lo):
            return self.lo + 1.0
        return self.hi - 1.0

    def require(self, x, what: str = "point"):
        if not self.contains(x):
            raise DomainError(f"{what} {x!r} is outside the open interval "
                              f"({self.lo}, {self.hi})")

    def clip_inside(self, x, rel: float = 1e-12):
        """Clip values to the interval shrunk by a relative margin.

        Used by the regression engine's escape policy; infinite endpoints
        are left unclipped on that side.
        """
        x = np.asarray(x, dtype=float)
        lo, hi = self.lo, self.hi
        if math.isfinite(lo):
            lo = lo + rel * max(1.0, abs(lo))
        if math.isfinite(hi):
            hi = hi - rel * max(1.0, abs(hi))
        return np.clip(x, lo, hi)

    def interior_grid(self, n: int, margin: float = 1e-6,
                      span: float = 10.0) -> np.ndarray:
        """A finite sample grid inside the interval for a.e. checks."""
        lo, hi = self.lo, self.hi
        if not math.isfinite(lo):
            lo = (hi - span) if math.isfinite(hi) else -span
        if not math.isfinite(hi):
            hi = (self.lo + span) if math.isfinite(self.lo) else span
        width = hi - lo
        return np.linspace(lo + margin * width, hi - margin * width, n)
