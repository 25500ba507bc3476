"""Conditioned Brownian motion run downward in time, with exact transitions.

Weighting the heat kernel by the pole function conditions the process: above,
paths form a space-time bridge pinned to the pole (gamma, 0) as t drops to 0;
below, paths drift along 2 gamma per unit of elapsed downward time forever.
Both one-step transition laws are Gaussian in closed form,

    upper:  mean gamma + (x - gamma) (tau / t),  variance 2 tau (t - tau) / t
    lower:  mean x + 2 gamma (t - tau),          variance 2 (t - tau)

per coordinate, so sampling on any grid is exact in law: no discretization
drift, only grid-sampled hitting detection.  Time grids are geometric and
accumulate at the pole, where the clustering question lives.

Randomness is counter-based: each grid step draws from its own keyed stream
(seed, step), normals via inverse transform, so ensembles are reproducible
bit for bit under any execution schedule and stable under path-count growth.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtri

from .kernel import DomainError, PoleContext, SpaceTimePoint
from .regions import Region

__all__ = [
    "GridPolicy",
    "PathEnsemble",
    "ClusterPolicy",
    "ClusterVerdict",
    "ClusterEstimate",
    "step_normals",
    "transition_parameters",
    "transition_sample",
    "simulate",
    "cluster_probability",
    "wilson_interval",
]


@dataclass(frozen=True)
class GridPolicy:
    """Geometric grid from t_start toward the pole.

    Above: times t_start * ratio^k down to t_end (0 < t_end < t_start).
    Below: magnitudes grow geometrically, t_start / ratio^k down to t_end
    (t_end < t_start < 0).
    """

    t_start: float
    t_end: float
    ratio: float = 0.9

    def times(self, ctx: PoleContext) -> np.ndarray:
        if not (0.0 < self.ratio < 1.0):
            raise ValueError("ratio must lie in (0, 1)")
        ctx.require(self.t_start)
        ctx.require(self.t_end)
        if ctx.is_upper:
            if not (self.t_end < self.t_start):
                raise ValueError("need t_end < t_start")
            k = int(np.ceil(np.log(self.t_end / self.t_start) / np.log(self.ratio)))
            ts = self.t_start * self.ratio ** np.arange(k + 1)
        else:
            if not (self.t_end < self.t_start):
                raise ValueError("need t_end < t_start (more negative)")
            k = int(np.ceil(np.log(self.t_end / self.t_start) / np.log(1.0 / self.ratio)))
            ts = self.t_start / self.ratio ** np.arange(k + 1)
        if ts.shape[0] < 2:
            raise ValueError("grid must contain at least two times")
        return ts


@dataclass(frozen=True)
class PathEnsemble:
    ctx: PoleContext
    start: SpaceTimePoint
    times: np.ndarray            # strictly decreasing
    paths: np.ndarray            # (n_paths, len(times), N)
    seed: int

    @property
    def n_paths(self) -> int:
        return self.paths.shape[0]

    def to_csv(self, path) -> None:
        """One row per (path, time): path index, t, coordinates."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["path", "t"] + [f"x{i+1}" for i in range(self.ctx.dim)])
            for p in range(self.n_paths):
                for k, t in enumerate(self.times):
                    w.writerow(
                        [p, repr(float(t))]
                        + [repr(float(v)) for v in self.paths[p, k]]
                    )


def step_normals(seed: int, step: int, n_paths: int, dim: int) -> np.ndarray:
    """Standard normals for one grid step from a keyed counter stream."""
    key = np.array([np.uint64(seed), np.uint64(step)], dtype=np.uint64)
    bg = np.random.Philox(key=key)
    raw = bg.random_raw(n_paths * dim)
    u = (raw >> np.uint64(11)).astype(np.float64) * (2.0**-53)
    u = np.clip(u, 1e-16, 1.0 - 1e-16)
    return ndtri(u).reshape(n_paths, dim)


def transition_parameters(
    ctx: PoleContext, xs: np.ndarray, t: float, next_t: float
) -> tuple[np.ndarray, float]:
    """Gaussian mean array and per-coordinate standard deviation for one step."""
    if next_t >= t:
        raise DomainError(f"downward step needs next_t < t, got {next_t} >= {t}")
    ctx.require(t)
    ctx.require(next_t)
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    g = ctx.gamma
    if ctx.is_upper:
        mean = g + (xs - g) * (next_t / t)
        var = 2.0 * next_t * (t - next_t) / t
    else:
        mean = xs + 2.0 * g * (t - next_t)
        var = 2.0 * (t - next_t)
    return mean, float(np.sqrt(var))


def transition_sample(
    current: SpaceTimePoint, next_t: float, ctx: PoleContext, rng: np.random.Generator
) -> np.ndarray:
    """One exact transition draw from a caller-supplied generator."""
    mean, std = transition_parameters(ctx, current.x[None, :], current.t, next_t)
    return mean[0] + std * rng.standard_normal(ctx.dim)


def simulate(
    start: SpaceTimePoint,
    grid: GridPolicy,
    n_paths: int,
    ctx: PoleContext,
    seed: int,
) -> PathEnsemble:
    """Exact-in-law ensemble over the grid times, reproducible from the seed."""
    if start.dim != ctx.dim:
        raise DomainError(f"start dim {start.dim} vs context dim {ctx.dim}")
    ctx.require(start.t)
    times = grid.times(ctx)
    if abs(times[0] - start.t) > 1e-12 * max(1.0, abs(start.t)):
        raise ValueError("grid must start at the start point's time")
    K = times.shape[0]
    paths = np.zeros((n_paths, K, ctx.dim))
    if n_paths == 0:
        return PathEnsemble(ctx, start, times, paths, seed)
    paths[:, 0, :] = start.x
    for k in range(K - 1):
        mean, std = transition_parameters(ctx, paths[:, k, :], float(times[k]), float(times[k + 1]))
        paths[:, k + 1, :] = mean + std * step_normals(seed, k, n_paths, ctx.dim)
    return PathEnsemble(ctx, start, times, paths, seed)


# ---------------------------------------------------------------------------
# clustering estimates
# ---------------------------------------------------------------------------

class ClusterVerdict(Enum):
    P_ONE = "p_one"
    P_ZERO = "p_zero"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class ClusterPolicy:
    p_high: float = 0.85
    p_low: float = 0.15
    z: float = 1.96
    max_halfwidth: float = 0.05  # required CI half-width at the tightest level


@dataclass(frozen=True)
class ClusterEstimate:
    deltas: tuple[float, ...]
    frequencies: tuple[float, ...]
    ci_low: tuple[float, ...]
    ci_high: tuple[float, ...]
    verdict: ClusterVerdict
    n_paths: int
    grid_times: int
    diagnostics: dict


def wilson_interval(k: int, n: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    p = k / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = (z / denom) * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    return (max(0.0, center - half), min(1.0, center + half))


def cluster_probability(
    ensemble: PathEnsemble,
    region: Optional[Region],
    deltas: Sequence[float],
    policy: ClusterPolicy = ClusterPolicy(),
) -> ClusterEstimate:
    """Frequency of grid-sampled visits to the complement set near the pole.

    For each threshold delta the event is: some grid time at or beyond delta
    (toward the pole) lands in the region.  Frequencies are nested in delta
    by construction.  The verdict extrapolates the trend toward the pole;
    abstains when the tightest confidence interval is too wide or the trend
    sits between the thresholds.  Grid resolution is reported because hitting
    is only checked at grid times (under-detection is possible, not hidden).
    """
    ctx = ensemble.ctx
    times = ensemble.times
    n_paths = ensemble.n_paths
    deltas = sorted(float(d) for d in deltas)
    if not deltas:
        raise ValueError("need at least one delta level")
    for d in deltas:
        ctx.require(d)

    if region is None or n_paths == 0:
        hit_any = np.zeros((n_paths, times.shape[0]), dtype=bool)
    else:
        flat_x = ensemble.paths.reshape(-1, ctx.dim)
        flat_t = np.repeat(times[None, :], n_paths, axis=0).reshape(-1)
        hit_any = region.contains(flat_x, flat_t, ctx).reshape(n_paths, times.shape[0])

    freqs, lo, hi = [], [], []
    for d in deltas:
        sel = times <= d
        k = int(np.sum(np.any(hit_any[:, sel], axis=1))) if np.any(sel) else 0
        f = k / n_paths if n_paths else 0.0
        a, b = wilson_interval(k, n_paths, policy.z)
        freqs.append(f)
        lo.append(a)
        hi.append(b)

    # tightest level = smallest delta above, most negative below: deltas are
    # sorted ascending, so index 0 is nearest the pole in both half-spaces
    f0, lo0, hi0 = freqs[0], lo[0], hi[0]
    halfwidth = 0.5 * (hi0 - lo0)
    diag = {"tight_halfwidth": halfwidth, "n_grid_in_tightest": int(np.sum(times <= deltas[0]))}
    if halfwidth > policy.max_halfwidth or n_paths == 0:
        verdict = ClusterVerdict.INDETERMINATE
        diag["reason"] = "confidence interval too wide"
    elif lo0 >= policy.p_high:
        verdict = ClusterVerdict.P_ONE
    elif hi0 <= policy.p_low:
        verdict = ClusterVerdict.P_ZERO
    else:
        verdict = ClusterVerdict.INDETERMINATE
        diag["reason"] = "frequency between thresholds"

    return ClusterEstimate(
        deltas=tuple(deltas),
        frequencies=tuple(freqs),
        ci_low=tuple(lo),
        ci_high=tuple(hi),
        verdict=verdict,
        n_paths=n_paths,
        grid_times=int(times.shape[0]),
        diagnostics=diag,
    )
