"""Gaussian fundamental solution, pole functions and normalized kernel ratios.

Two dual settings share one API.  In the upper half-space (t > 0) the
distinguished boundary point is the space-time pole (gamma, 0) and the pole
function ``h`` is the fundamental solution centered there; its adjoint
companion ``h_star`` solves the backward equation.  In the lower half-space
(t < 0) the distinguished point is at infinity and the pole function is the
drift exponential ``h_tilde`` with adjoint ``h_tilde_star``.

The normalized ratio F(z - w) / (weight(z) * weight_star(w)) is the only
kernel the capacity machinery consumes.  Both half-space variants admit an
algebraically equivalent form with a single non-positive exponent, which is
what the batch evaluators use: naive evaluation would subtract exponents of
order |gamma|^2 * |t| and lose everything to cancellation.

All functions are pure; values are plain floats / ndarrays and safe to share
across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

__all__ = [
    "TIME_EPS",
    "DomainError",
    "DimensionMismatchError",
    "HalfSpace",
    "PoleContext",
    "SpaceTimePoint",
    "upper_context",
    "lower_context",
    "point",
    "heat_kernel",
    "log_heat_kernel",
    "h_pole",
    "h_star",
    "h_tilde",
    "h_tilde_star",
    "log_pole_weight",
    "log_pole_weight_star",
    "kernel_ratio",
    "kernel_ratio_matrix",
    "heat_operator_fd",
    "fd_step",
]

# Time gaps below TIME_EPS fall on the vanishing branch of the kernel; this
# removes the 0 * inf ambiguity on the diagonal.
TIME_EPS = 1e-14


class DomainError(ValueError):
    """A point lies outside the half-space the operation is defined on."""


class DimensionMismatchError(ValueError):
    """Operands carry different space dimensions."""


class HalfSpace(Enum):
    UPPER = "upper"  # t > 0, pole at (gamma, 0)
    LOWER = "lower"  # t < 0, pole at infinity


@dataclass(frozen=True)
class PoleContext:
    """Ambient setting: space dimension, pole parameter gamma, half-space."""

    dim: int
    gamma: np.ndarray
    half_space: HalfSpace

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        g = np.asarray(self.gamma, dtype=float).reshape(-1)
        if g.shape != (self.dim,):
            raise DimensionMismatchError(
                f"gamma has shape {g.shape}, expected ({self.dim},)"
            )
        if not np.all(np.isfinite(g)):
            raise ValueError("gamma must be finite")
        g.flags.writeable = False
        object.__setattr__(self, "gamma", g)

    @property
    def is_upper(self) -> bool:
        return self.half_space is HalfSpace.UPPER

    def admits(self, t) -> np.ndarray:
        """Boolean mask: does time t lie strictly inside the half-space."""
        t = np.asarray(t, dtype=float)
        return t > 0.0 if self.is_upper else t < 0.0

    def require(self, t: float) -> None:
        if not bool(self.admits(t)):
            side = "t > 0" if self.is_upper else "t < 0"
            raise DomainError(f"time {t} outside half-space ({side})")

    def mirror(self) -> "PoleContext":
        other = HalfSpace.LOWER if self.is_upper else HalfSpace.UPPER
        return PoleContext(self.dim, np.array(self.gamma), other)


def upper_context(dim: int, gamma=None) -> PoleContext:
    g = np.zeros(dim) if gamma is None else gamma
    return PoleContext(dim, g, HalfSpace.UPPER)


def lower_context(dim: int, gamma=None) -> PoleContext:
    g = np.zeros(dim) if gamma is None else gamma
    return PoleContext(dim, g, HalfSpace.LOWER)


@dataclass(frozen=True)
class SpaceTimePoint:
    """A space-time point z = (x, t) with x in R^N."""

    x: np.ndarray
    t: float

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        if x.ndim != 1:
            raise ValueError("x must be a vector")
        if not (np.all(np.isfinite(x)) and np.isfinite(self.t)):
            raise ValueError("point components must be finite")
        x.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", float(self.t))

    @property
    def dim(self) -> int:
        return self.x.shape[0]


def point(x, t) -> SpaceTimePoint:
    return SpaceTimePoint(np.atleast_1d(np.asarray(x, dtype=float)), float(t))


# ---------------------------------------------------------------------------
# fundamental solution
# ---------------------------------------------------------------------------

def log_heat_kernel(sq_dist, dt, dim: int) -> np.ndarray:
    """log F for squared distance and time gap arrays; -inf where dt <= eps."""
    sq_dist = np.asarray(sq_dist, dtype=float)
    dt = np.asarray(dt, dtype=float)
    out = np.full(np.broadcast(sq_dist, dt).shape, -np.inf)
    pos = dt > TIME_EPS
    if np.any(pos):
        d = np.broadcast_to(dt, out.shape)[pos]
        s = np.broadcast_to(sq_dist, out.shape)[pos]
        out[pos] = -0.5 * dim * np.log(4.0 * np.pi * d) - s / (4.0 * d)
    return out


def heat_kernel(z: SpaceTimePoint, w: SpaceTimePoint) -> float:
    """F(z - w): the Gaussian kernel, zero unless t_z > t_w."""
    if z.dim != w.dim:
        raise DimensionMismatchError(f"dim {z.dim} vs {w.dim}")
    dt = z.t - w.t
    if dt <= TIME_EPS:
        return 0.0
    sq = float(np.sum((z.x - w.x) ** 2))
    return float(np.exp(log_heat_kernel(sq, dt, z.dim)))


# ---------------------------------------------------------------------------
# pole functions
# ---------------------------------------------------------------------------

def _check_ctx_point(z: SpaceTimePoint, ctx: PoleContext) -> None:
    if z.dim != ctx.dim:
        raise DimensionMismatchError(f"point dim {z.dim} vs context dim {ctx.dim}")
    ctx.require(z.t)


def h_pole(z: SpaceTimePoint, ctx: PoleContext) -> float:
    """Upper pole function h(x, t) = F(x - gamma, t)."""
    if not ctx.is_upper:
        raise DomainError("h_pole is an upper half-space function")
    _check_ctx_point(z, ctx)
    sq = float(np.sum((z.x - ctx.gamma) ** 2))
    return float(np.exp(log_heat_kernel(sq, z.t, ctx.dim)))


def h_star(z: SpaceTimePoint, ctx: PoleContext) -> float:
    """Adjoint pole function h_*(x, t) = (pi/t)^(N/2) exp(|x - gamma|^2 / 4t).

    Unbounded as written; h * h_star == (2t)^(-N) holds identically and is
    used as a self-test.
    """
    if not ctx.is_upper:
        raise DomainError("h_star is an upper half-space function")
    _check_ctx_point(z, ctx)
    sq = float(np.sum((z.x - ctx.gamma) ** 2))
    return float(np.exp(0.5 * ctx.dim * np.log(np.pi / z.t) + sq / (4.0 * z.t)))


def h_tilde(w: SpaceTimePoint, ctx: PoleContext) -> float:
    """Lower pole function: the drift exponential exp(<x, gamma> + |gamma|^2 t)."""
    if ctx.is_upper:
        raise DomainError("h_tilde is a lower half-space function")
    _check_ctx_point(w, ctx)
    g = ctx.gamma
    return float(np.exp(np.dot(w.x, g) + np.dot(g, g) * w.t))


def h_tilde_star(w: SpaceTimePoint, ctx: PoleContext) -> float:
    """Adjoint of h_tilde: exp(-<x, gamma> - |gamma|^2 t); their product is 1."""
    if ctx.is_upper:
        raise DomainError("h_tilde_star is a lower half-space function")
    _check_ctx_point(w, ctx)
    g = ctx.gamma
    return float(np.exp(-np.dot(w.x, g) - np.dot(g, g) * w.t))


def log_pole_weight(xs: np.ndarray, ts: np.ndarray, ctx: PoleContext) -> np.ndarray:
    """log of the z-side normalizer: log h (upper) or log h_tilde (lower)."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ts = np.asarray(ts, dtype=float)
    g = ctx.gamma
    if ctx.is_upper:
        sq = np.sum((xs - g) ** 2, axis=-1)
        return -0.5 * ctx.dim * np.log(4.0 * np.pi * ts) - sq / (4.0 * ts)
    return xs @ g + np.dot(g, g) * ts


def log_pole_weight_star(xs: np.ndarray, ts: np.ndarray, ctx: PoleContext) -> np.ndarray:
    """log of the w-side normalizer: log h_star (upper) or log h_tilde_star."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ts = np.asarray(ts, dtype=float)
    g = ctx.gamma
    if ctx.is_upper:
        sq = np.sum((xs - g) ** 2, axis=-1)
        return 0.5 * ctx.dim * np.log(np.pi / ts) + sq / (4.0 * ts)
    return -(xs @ g) - np.dot(g, g) * ts


# ---------------------------------------------------------------------------
# normalized kernel ratio
# ---------------------------------------------------------------------------

def kernel_ratio_matrix(
    zx: np.ndarray,
    zt: np.ndarray,
    wx: np.ndarray,
    wt: np.ndarray,
    ctx: PoleContext,
) -> np.ndarray:
    """Matrix of F(z - w) / (weight(z) * weight_star(w)) over rows z, cols w.

    Uses the cancellation-free closed forms.  Upper half-space:

        (pi dt / (t tau))^(-N/2) * exp(-|tau (x-g) - t (y-g)|^2 / (4 t tau dt))

    Lower half-space:

        (4 pi dt)^(-N/2) * exp(-|x - y + 2 dt gamma|^2 / (4 dt))

    Entries with t_z - t_w <= eps are exactly zero.
    """
    zx = np.atleast_2d(np.asarray(zx, dtype=float))
    wx = np.atleast_2d(np.asarray(wx, dtype=float))
    zt = np.asarray(zt, dtype=float).reshape(-1)
    wt = np.asarray(wt, dtype=float).reshape(-1)
    g = ctx.gamma
    n = ctx.dim

    dt = zt[:, None] - wt[None, :]
    pos = dt > TIME_EPS
    out = np.zeros(dt.shape)
    if not np.any(pos):
        return out

    if ctx.is_upper:
        az = zx - g  # (nz, N)
        aw = wx - g  # (nw, N)
        # |tau * az - t * aw|^2 expanded to avoid forming an (nz, nw, N) array
        sq = (
            (wt**2)[None, :] * np.sum(az**2, axis=1)[:, None]
            - 2.0 * (zt[:, None] * wt[None, :]) * (az @ aw.T)
            + (zt**2)[:, None] * np.sum(aw**2, axis=1)[None, :]
        )
        denom = 4.0 * zt[:, None] * wt[None, :] * dt
        with np.errstate(divide="ignore", invalid="ignore"):
            log_r = -0.5 * n * np.log(np.pi * dt / (zt[:, None] * wt[None, :])) - sq / denom
    else:
        sq = (
            np.sum(zx**2, axis=1)[:, None]
            - 2.0 * (zx @ wx.T)
            + np.sum(wx**2, axis=1)[None, :]
        )
        drift = zx @ g
        drift_w = wx @ g
        gg = float(np.dot(g, g))
        # |x - y + 2 dt g|^2 = |x - y|^2 + 4 dt <x - y, g> + 4 dt^2 |g|^2
        sq_adj = sq + 4.0 * dt * (drift[:, None] - drift_w[None, :]) + 4.0 * dt**2 * gg
        with np.errstate(divide="ignore", invalid="ignore"):
            log_r = -0.5 * n * np.log(4.0 * np.pi * dt) - sq_adj / (4.0 * dt)

    log_r = np.where(pos, log_r, -np.inf)
    with np.errstate(under="ignore"):
        out = np.exp(log_r)
    # entries this small are numerically dead columns for the capacity solver
    out[out < 1e-300] = 0.0
    return out


def kernel_ratio(z_ref: SpaceTimePoint, w: SpaceTimePoint, ctx: PoleContext) -> float:
    """Normalized kernel between two points of the context half-space.

    Zero whenever t_z <= t_w.  This single ratio is what potentials and heat
    balls are built from.
    """
    _check_ctx_point(z_ref, ctx)
    _check_ctx_point(w, ctx)
    m = kernel_ratio_matrix(
        z_ref.x[None, :], np.array([z_ref.t]), w.x[None, :], np.array([w.t]), ctx
    )
    return float(m[0, 0])


# ---------------------------------------------------------------------------
# finite-difference heat operator probe
# ---------------------------------------------------------------------------

def fd_step(z: SpaceTimePoint) -> float:
    """Default probe step 1e-4 * (1 + |z|)."""
    return 1e-4 * (1.0 + float(np.sqrt(np.sum(z.x**2) + z.t**2)))


def _hf_once(f: Callable[[np.ndarray, float], float], z: SpaceTimePoint, h: float) -> float:
    x, t = z.x, z.t
    ft = (f(x, t + h) - f(x, t - h)) / (2.0 * h)
    f0 = f(x, t)
    lap = 0.0
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = h
        lap += (f(x + e, t) - 2.0 * f0 + f(x - e, t)) / (h * h)
    return ft - lap


def heat_operator_fd(
    f: Callable[[np.ndarray, float], float],
    z: SpaceTimePoint,
    step: float | None = None,
    ctx: PoleContext | None = None,
    richardson: bool = True,
) -> float:
    """Central-difference probe of (d/dt - Laplacian) f at z.

    O(step^2) truncation; one Richardson pass (on by default) lifts smooth
    fields to O(step^4).  If a context is given the stencil must stay inside
    its half-space.
    """
    h = fd_step(z) if step is None else float(step)
    if h <= 0.0:
        raise ValueError("step must be positive")
    if ctx is not None:
        for tt in (z.t + h, z.t - h):
            if not bool(ctx.admits(tt)):
                raise DomainError(f"stencil time {tt} leaves the half-space")
    coarse = _hf_once(f, z, h)
    if not richardson:
        return coarse
    fine = _hf_once(f, z, 0.5 * h)
    return (4.0 * fine - coarse) / 3.0
