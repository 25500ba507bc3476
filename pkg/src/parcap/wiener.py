"""Removability diagnosis through the capacity series over shrinking shells.

For an open set with the pole on its boundary, the singularity of the pole
function is removable exactly when the series

    sum_n  weight_n * capacity( complement  intersect  shell_n )

diverges, and non-removable when it converges.  Dyadic shells use scale 2^n
with weight 2^(-n N / 2); the general variant sandwiches the kernel ratio
between lambda^(-n+1) and lambda^(-n) with weight lambda^(-n), any lambda
above 1.  Larger n means shells marching toward the pole (time windows
approach t = 0 above, and recede to -infinity below); the report prints each
shell's time window so the orientation is auditable.

A finite truncation of an asymptotic dichotomy must be allowed to abstain:
the classifier fits the log-term trend over a trailing window and returns
removable (no summable decay), non-removable (geometric decay), or
inconclusive, with a confidence grade.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .capacity import capacity_of_region
from .geometry import (
    Resolution,
    dyadic_shell,
    level_shell,
    shell_complement_intersection,
)
from .kernel import PoleContext
from .regions import Region

__all__ = [
    "Verdict",
    "ClassifyPolicy",
    "ShellTerm",
    "SeriesReport",
    "classify",
    "series_terms",
    "lambda_series_terms",
    "auto_level_range",
]


class Verdict(Enum):
    REMOVABLE = "removable"          # series looks divergent
    NON_REMOVABLE = "non_removable"  # series looks convergent
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class ClassifyPolicy:
    """Thresholds for the trailing-window trend fit.

    Slopes are of log(term) against n.  A slope above -eps_slope reads as
    non-summable; decay at ratio rho_max or faster reads as geometric.  The
    in-between band falls back on log-convexity: rising term ratios (as for
    1/n tails) lean removable with low confidence.
    """

    eps_slope: float = 0.05
    rho_max: float = 0.8
    window: int = 6
    min_terms: int = 6
    curvature_tol: float = 2e-3
    zero_floor: float = 1e-300


@dataclass(frozen=True)
class ShellTerm:
    n: int
    capacity: float
    weight: float
    term: float
    converged: bool
    time_window: tuple[float, float]
    n_nodes: int
    level: int  # refinement level the capacity settled at


@dataclass(frozen=True)
class SeriesReport:
    kind: str                      # "dyadic" or "lambda"
    lam: Optional[float]
    terms: tuple[ShellTerm, ...]
    partial_sums: tuple[float, ...]
    verdict: Verdict
    confidence: str                # "high" or "low"
    diagnostics: dict
    policy: ClassifyPolicy
    orientation: str = (
        "shell index n increases toward the pole; each term lists its time window"
    )

    @property
    def term_values(self) -> list[float]:
        return [t.term for t in self.terms]


def classify(
    terms: Sequence[float],
    policy: ClassifyPolicy = ClassifyPolicy(),
    converged_flags: Optional[Sequence[bool]] = None,
) -> tuple[Verdict, str, dict]:
    """Verdict for a finite run of series terms.

    Returns (verdict, confidence, diagnostics).  Fewer than min_terms computed
    terms is inconclusive by definition.
    """
    terms = [float(t) for t in terms]
    diag: dict = {"n_terms": len(terms)}
    if len(terms) < policy.min_terms:
        diag["reason"] = "too few terms"
        return Verdict.INCONCLUSIVE, "low", diag

    window = terms[-policy.window :]
    flags = list(converged_flags) if converged_flags is not None else [True] * len(terms)
    window_flags = flags[-policy.window :]

    zero = [t <= policy.zero_floor for t in window]
    if all(zero):
        diag["reason"] = "terms vanish"
        return Verdict.NON_REMOVABLE, "high", diag
    if len(zero) >= 2 and zero[-1] and zero[-2]:
        diag["reason"] = "trailing terms vanish"
        return Verdict.NON_REMOVABLE, "high", diag
    if any(zero):
        diag["reason"] = "mixed zero and positive terms"
        return Verdict.INCONCLUSIVE, "low", diag

    logs = np.log(np.asarray(window))
    ns = np.arange(len(window), dtype=float)
    slope = float(np.polyfit(ns, logs, 1)[0])
    diag["slope"] = slope
    diag["decay_ratio"] = math.exp(slope)

    curv = float(np.mean(np.diff(logs, 2))) if len(logs) >= 3 else 0.0
    diag["curvature"] = curv

    if slope >= -policy.eps_slope:
        verdict, conf = Verdict.REMOVABLE, "high"
    elif slope <= math.log(policy.rho_max):
        verdict, conf = Verdict.NON_REMOVABLE, "high"
    elif curv > policy.curvature_tol:
        diag["reason"] = "sub-geometric decay with rising ratios"
        verdict, conf = Verdict.REMOVABLE, "low"
    else:
        diag["reason"] = "trend between thresholds"
        verdict, conf = Verdict.INCONCLUSIVE, "low"

    if not all(window_flags) and conf != "high":
        diag["reason"] = diag.get("reason", "") + "; unconverged shells in window"
        return Verdict.INCONCLUSIVE, "low", diag
    return verdict, conf, diag


def _run_series(
    region: Optional[Region],
    ctx: PoleContext,
    shells,
    weights,
    ns,
    kind: str,
    lam: Optional[float],
    levels,
    rel_stall,
    tol,
    base_resolution,
    policy,
) -> SeriesReport:
    out_terms: list[ShellTerm] = []
    sums: list[float] = []
    total = 0.0
    for n, shell, weight in zip(ns, shells, weights):
        compact = shell_complement_intersection(region, shell)
        result = capacity_of_region(
            compact,
            ctx,
            levels=levels,
            rel_stall=rel_stall,
            tol=tol,
            base_resolution=base_resolution,
        )
        term = weight * result.value
        total += term
        sums.append(total)
        out_terms.append(
            ShellTerm(
                n=n,
                capacity=result.value,
                weight=weight,
                term=term,
                converged=result.converged,
                time_window=shell.time_window,
                n_nodes=int(result.diagnostics.get("n_nodes", 0)),
                level=result.resolution.level,
            )
        )
    verdict, conf, diag = classify(
        [t.term for t in out_terms], policy, [t.converged for t in out_terms]
    )
    return SeriesReport(
        kind=kind,
        lam=lam,
        terms=tuple(out_terms),
        partial_sums=tuple(sums),
        verdict=verdict,
        confidence=conf,
        diagnostics=diag,
        policy=policy,
    )


def series_terms(
    region: Optional[Region],
    ctx: PoleContext,
    n_range: Sequence[int] = range(2, 15),
    levels: Sequence[int] = (0, 1, 2),
    rel_stall: float = 0.02,
    tol: float = 1e-2,
    base_resolution: Resolution = Resolution(),
    policy: ClassifyPolicy = ClassifyPolicy(),
    time_center: float | None = None,
) -> SeriesReport:
    """Dyadic series: weight 2^(-n N / 2) against shell scales 2^n.

    ``region`` describes the complement set directly (None or a full region
    gives the bare shells; an empty region zeroes every term).
    """
    ns = list(n_range)
    shells = [dyadic_shell(ctx, n, time_center) for n in ns]
    weights = [2.0 ** (-0.5 * n * ctx.dim) for n in ns]
    return _run_series(
        region, ctx, shells, weights, ns, "dyadic", None,
        levels, rel_stall, tol, base_resolution, policy,
    )


def auto_level_range(
    ctx: PoleContext,
    lam: float,
    c_min: float = 4.0,
    c_max: float = 16384.0,
    min_count: int = 8,
):
    """Index range whose level shells span roughly the scales [c_min, c_max].

    Extends past c_max when needed so the classifier always has enough terms.
    """
    N = ctx.dim
    n_lo = max(1, math.ceil(N * math.log(4.0 * math.pi * c_min) / (2.0 * math.log(lam))))
    n_hi = math.floor(N * math.log(4.0 * math.pi * c_max) / (2.0 * math.log(lam)))
    n_hi = max(n_hi, n_lo + min_count - 1)
    return range(n_lo, n_hi + 1)


def lambda_series_terms(
    region: Optional[Region],
    ctx: PoleContext,
    lam: float,
    n_range: Optional[Sequence[int]] = None,
    levels: Sequence[int] = (0, 1, 2),
    rel_stall: float = 0.02,
    tol: float = 1e-2,
    base_resolution: Resolution = Resolution(),
    policy: ClassifyPolicy = ClassifyPolicy(),
    time_center: float | None = None,
) -> SeriesReport:
    """General level-shell series with weight lambda^(-n), lambda > 1."""
    if lam <= 1.0:
        raise ValueError("lambda must exceed 1")
    ns = list(n_range) if n_range is not None else list(auto_level_range(ctx, lam))
    shells = [level_shell(ctx, lam, n, time_center) for n in ns]
    weights = [lam ** (-n) for n in ns]
    return _run_series(
        region, ctx, shells, weights, ns, "lambda", lam,
        levels, rel_stall, tol, base_resolution, policy,
    )
