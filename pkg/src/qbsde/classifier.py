"""Solution-space classification from declared metadata.

Given the declared integrability of the terminal variable and the sign /
bound metadata of the generator, :func:`classify` emits every guarantee
about the solution pair (Y, Z) whose full hypothesis set is implied by
the declarations.  Memberships of random variables are *declared*, never
inferred from samples; :func:`check_necessary_condition` supplies only an
empirical tail diagnostic.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import PreconditionError, ValidationError
from .generators import Generator
from .transform import IntegrabilityTransform

# conclusion tags
EXISTS_UNIQUE = "solution_exists_unique"
NECESSARY_L1_VIOLATED = "necessary_L1_violated"
Y_IN_S_INF = "Y_in_S_inf"
YZ_IN_S_INF_H2BMO = "YZ_in_S_inf_H2BMO_with_range"
YZ_IN_SP_H2P = "YZ_in_Sp_H2p"
YZ_IN_SR_H2 = "YZ_in_Sr_H2"
Y_IN_SP = "Y_in_Sp"
Y_IN_SR = "Y_in_Sr"


@dataclass
class TerminalMeta:
    """Declared metadata of the terminal variable.

    ``range_subset`` must be a compact interval inside D; half-infinite
    declarations are refused rather than guessed at.
    """

    range_subset: Optional[tuple] = None
    lower_bound_const: Optional[float] = None
    xi_in_L1: bool = False
    xi_in_Lp: Optional[float] = None
    xi_minus_in_Lp: Optional[float] = None
    xi_plus_in_Lp: Optional[float] = None
    uf_xi_in_L1: bool = False
    uf_xi_in_Lp: Optional[float] = None
    uf_xi_in_Linf: bool = False

    def closure(self, domain) -> "TerminalMeta":
        """Consistency check plus the implications of compactness."""
        m = TerminalMeta(**self.__dict__)
        for p in (m.xi_in_Lp, m.xi_minus_in_Lp, m.xi_plus_in_Lp, m.uf_xi_in_Lp):
            if p is not None and p < 1:
                raise ValidationError("integrability orders must be >= 1")
        if m.range_subset is not None:
            a, b = m.range_subset
            if not (math.isfinite(a) and math.isfinite(b)):
                raise ValidationError(
                    "range_subset must be a compact interval inside D; "
                    "half-infinite ranges are not accepted")
            if not (a <= b and domain.contains(a) and domain.contains(b)):
                raise ValidationError("range_subset is not inside D")
            m.xi_in_L1 = True
            m.uf_xi_in_L1 = True
            m.uf_xi_in_Linf = True
            if m.lower_bound_const is None:
                m.lower_bound_const = a
        if m.uf_xi_in_Lp is not None or m.uf_xi_in_Linf:
            m.uf_xi_in_L1 = True
        if m.xi_in_Lp is not None:
            m.xi_in_L1 = True
            m.xi_minus_in_Lp = max(m.xi_minus_in_Lp or 1.0, m.xi_in_Lp)
            m.xi_plus_in_Lp = max(m.xi_plus_in_Lp or 1.0, m.xi_in_Lp)
        if m.lower_bound_const is not None and not domain.contains(m.lower_bound_const):
            raise ValidationError("declared constant lower bound is outside D")
        return m


@dataclass(frozen=True)
class ReportEntry:
    conclusion: str
    p: Optional[float]
    source: str
    hypotheses: tuple

    def line(self) -> str:
        p = "" if self.p is None else f" p={self.p:g}"
        return f"{self.conclusion}{p} [{self.source}] <- " + "; ".join(self.hypotheses)


@dataclass
class SpaceReport:
    entries: list = field(default_factory=list)

    def conclusions(self) -> set:
        return {e.conclusion for e in self.entries}

    def add(self, conclusion, source, hypotheses, p=None):
        self.entries.append(ReportEntry(conclusion, p, source, tuple(hypotheses)))

    def to_text(self) -> str:
        return "\n".join(e.line() for e in self.entries) or "(no conclusions)"

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("conclusion,p,source,hypotheses\n")
        for e in self.entries:
            p = "" if e.p is None else f"{e.p:g}"
            buf.write(f"{e.conclusion},{p},{e.source},\"{'; '.join(e.hypotheses)}\"\n")
        return buf.getvalue()


def _uf_one_sided_bound(gen: Generator,
                        transform: IntegrabilityTransform | None) -> Optional[str]:
    """Whether u is bounded below/above on D, from declared metadata or a
    built transform's image interval."""
    if transform is not None:
        V = transform.range_
        if math.isfinite(V.lo):
            return "below"
        if math.isfinite(V.hi):
            return "above"
        return None
    if gen.lower_bound is not None and gen.lower_bound > 0:
        return "below"
    if gen.upper_bound is not None and gen.upper_bound < 0:
        return "above"
    return None


def classify(gen: Generator, tmeta: TerminalMeta, d_bounded: bool | None = None,
             transform: IntegrabilityTransform | None = None) -> SpaceReport:
    """Emit every solution-space guarantee implied by the declarations.

    Conclusions are monotone in the metadata: declaring more
    integrability can only add entries, never remove one.
    """
    m = tmeta.closure(gen.domain)
    if d_bounded is None:
        d_bounded = gen.domain.is_bounded
    report = SpaceReport()

    if not m.uf_xi_in_L1:
        side = _uf_one_sided_bound(gen, transform)
        if side is not None:
            report.add(
                NECESSARY_L1_VIOLATED, "necessary-integrability",
                [f"u one-sided bounded ({side})",
                 "uf_xi_in_L1 not declared"])
        return report

    report.add(EXISTS_UNIQUE, "existence-uniqueness", ["uf_xi_in_L1"])

    if d_bounded:
        report.add(Y_IN_S_INF, "bounded-domain", ["uf_xi_in_L1", "D bounded"])

    if m.range_subset is not None:
        a, b = m.range_subset
        report.add(YZ_IN_S_INF_H2BMO, "compact-terminal-range",
                   ["uf_xi_in_L1", f"range(xi) in [{a:g}, {b:g}] subset D"])

    beta_low = gen.lower_bound if (gen.lower_bound is not None
                                   and gen.lower_bound > 0) else None
    beta_high = gen.upper_bound if (gen.upper_bound is not None
                                    and gen.upper_bound < 0) else None

    if m.xi_in_L1 and m.xi_minus_in_Lp is not None and beta_low is not None:
        p = m.xi_minus_in_Lp
        hyp = ["uf_xi_in_L1", "xi_in_L1", f"xi_minus_in_Lp p={p:g}",
               f"f >= {beta_low:g} > 0 a.e."]
        if p > 1:
            report.add(YZ_IN_SP_H2P, "positive-lower-bound", hyp, p=p)
        else:
            report.add(YZ_IN_SR_H2, "positive-lower-bound", hyp, p=1.0)

    if m.xi_in_L1 and m.xi_plus_in_Lp is not None and beta_high is not None:
        p = m.xi_plus_in_Lp
        hyp = ["uf_xi_in_L1", "xi_in_L1", f"xi_plus_in_Lp p={p:g}",
               f"f <= {beta_high:g} < 0 a.e."]
        if p > 1:
            report.add(YZ_IN_SP_H2P, "negative-upper-bound", hyp, p=p)
        else:
            report.add(YZ_IN_SR_H2, "negative-upper-bound", hyp, p=1.0)

    if (m.xi_in_L1 and m.xi_minus_in_Lp is not None
            and m.uf_xi_in_Lp is not None and gen.sign_class == "nonnegative"):
        p = min(m.xi_minus_in_Lp, m.uf_xi_in_Lp)
        hyp = ["uf_xi_in_L1", "xi_in_L1", f"xi_minus_in_Lp p={m.xi_minus_in_Lp:g}",
               f"uf_xi_in_Lp p={m.uf_xi_in_Lp:g}", "f >= 0 a.e."]
        if p > 1:
            report.add(Y_IN_SP, "nonnegative-f", hyp, p=p)
        else:
            report.add(Y_IN_SR, "nonnegative-f", hyp, p=1.0)

    if (m.xi_in_L1 and m.xi_plus_in_Lp is not None
            and m.uf_xi_in_Lp is not None and gen.sign_class == "nonpositive"):
        p = min(m.xi_plus_in_Lp, m.uf_xi_in_Lp)
        hyp = ["uf_xi_in_L1", "xi_in_L1", f"xi_plus_in_Lp p={m.xi_plus_in_Lp:g}",
               f"uf_xi_in_Lp p={m.uf_xi_in_Lp:g}", "f <= 0 a.e."]
        if p > 1:
            report.add(Y_IN_SP, "nonpositive-f", hyp, p=p)
        else:
            report.add(Y_IN_SR, "nonpositive-f", hyp, p=1.0)

    return report


@dataclass(frozen=True)
class TailDiagnostic:
    mean_abs: float
    tail_index: float
    verdict: str  # plausibly_L1 | heavy_tail_warning
    n_samples: int

    def line(self) -> str:
        return (f"{self.verdict}: mean|u(xi)|={self.mean_abs:.6g}, "
                f"tail index={self.tail_index:.3g}, n={self.n_samples}")


def hill_tail_index(x: np.ndarray, top_fraction: float = 0.05) -> float:
    """Hill estimator of the tail index on the largest order statistics."""
    x = np.sort(np.abs(np.asarray(x, dtype=float)))
    k = max(2, int(len(x) * top_fraction))
    tail = x[-k:]
    pivot = tail[0]
    if pivot <= 0:
        return math.inf
    logs = np.log(tail / pivot)
    mean_log = float(np.mean(logs[1:])) if k > 1 else 0.0
    if mean_log <= 0:
        return math.inf
    return 1.0 / mean_log


def check_necessary_condition(transform: IntegrabilityTransform,
                              xi_samples, warn_index: float = 1.1,
                              top_fraction: float = 0.05) -> TailDiagnostic:
    """Empirical screen for u(xi) in L1 when u is one-sided bounded.

    Purely diagnostic: a heavy-tail warning flags likely failure of the
    necessary integrability, never a proof either way.
    """
    V = transform.range_
    if not (math.isfinite(V.lo) or math.isfinite(V.hi)):
        raise PreconditionError(
            "u is unbounded on both sides; the necessary-condition "
            "diagnostic does not apply")
    xi = np.asarray(xi_samples, dtype=float)
    if not transform.generator.domain.contains(xi):
        raise PreconditionError("samples must lie inside D")
    vals = np.abs(transform.u(xi))
    if float(np.max(vals)) == float(np.min(vals)):
        return TailDiagnostic(float(np.mean(vals)), math.inf, "plausibly_L1",
                              len(xi))
    idx = hill_tail_index(vals, top_fraction)
    verdict = "heavy_tail_warning" if idx <= warn_index else "plausibly_L1"
    return TailDiagnostic(float(np.mean(vals)), float(idx), verdict, len(xi))
