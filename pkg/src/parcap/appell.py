"""The space-time homeomorphism between the two half-space settings.

The point map sends (x, t) to (x / 2t, -1/4t) and exchanges the upper and
lower half-spaces, carrying the finite pole to infinity and back.  Its induced
transform on scalar fields multiplies by a Gaussian factor going forward and
by the fundamental solution coming back, and maps caloric functions to
caloric functions.  Everything here is exact transport: transformed fields
are composed lazily, never resampled, so identity tests see only rounding.

The two boundary objects (the finite pole and the point at infinity) are kept
symbolic: mapping a point with t == 0 raises instead of producing fake large
coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .kernel import (
    DomainError,
    PoleContext,
    SpaceTimePoint,
    h_pole,
    h_tilde,
    heat_operator_fd,
    point,
)
from .measures import DiscreteMeasure

__all__ = [
    "AppellDirection",
    "BoundaryTag",
    "appell_map",
    "appell_map_arrays",
    "appell_transform",
    "push_measure",
    "IdentityResidual",
    "verify_h_identities",
]

Field = Callable[[np.ndarray, float], float]


class AppellDirection(Enum):
    FORWARD = "forward"    # upper (t > 0)  ->  lower (t < 0)
    BACKWARD = "backward"  # lower (t < 0)  ->  upper (t > 0)


class BoundaryTag(Enum):
    """The two distinguished boundary objects, kept symbolic.

    They carry no coordinates; the point map exchanges them and any numeric
    use raises.
    """

    POLE = "pole"          # the finite boundary point (gamma, 0)
    INFINITY = "infinity"  # the ideal point of the lower half-space


def appell_map_arrays(xs: np.ndarray, ts: np.ndarray, direction: AppellDirection):
    """Vectorized point map; forward is (x/2t, -1/4t), backward (-x/2t, -1/4t)."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ts = np.asarray(ts, dtype=float).reshape(-1)
    if np.any(ts == 0.0):
        raise DomainError("t == 0 maps to a symbolic boundary point, not coordinates")
    sign = 1.0 if direction is AppellDirection.FORWARD else -1.0
    return sign * xs / (2.0 * ts[:, None]), -1.0 / (4.0 * ts)


def appell_map(z, direction: AppellDirection):
    """Map a point across half-spaces; boundary tags map to each other.

    Interior points with t == 0 are neither: they raise, since the images
    would not be coordinates.
    """
    if isinstance(z, BoundaryTag):
        if z is BoundaryTag.POLE and direction is AppellDirection.FORWARD:
            return BoundaryTag.INFINITY
        if z is BoundaryTag.INFINITY and direction is AppellDirection.BACKWARD:
            return BoundaryTag.POLE
        raise DomainError(f"{z.value} does not lie on the {direction.value} source side")
    xs, ts = appell_map_arrays(z.x[None, :], np.array([z.t]), direction)
    return point(xs[0], ts[0])


def appell_transform(u: Field, direction: AppellDirection) -> Field:
    """Induced transform on scalar fields, composed lazily.

    Forward takes a field on the upper half-space to one on the lower:
    v(x, t) = (-pi/t)^(N/2) exp(-|x|^2/4t) u(-x/2t, -1/4t), defined for t < 0.
    Backward takes a lower field to F(x, t) u(x/2t, -1/4t), t > 0.
    """
    if direction is AppellDirection.FORWARD:

        def v(x: np.ndarray, t: float) -> float:
            x = np.atleast_1d(np.asarray(x, dtype=float))
            if t >= 0.0:
                raise DomainError("forward-transformed field lives in t < 0")
            n = x.shape[0]
            pre = (-np.pi / t) ** (0.5 * n) * np.exp(-np.dot(x, x) / (4.0 * t))
            return pre * u(-x / (2.0 * t), -1.0 / (4.0 * t))

        return v

    def v(x: np.ndarray, t: float) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if t <= 0.0:
            raise DomainError("backward-transformed field lives in t > 0")
        n = x.shape[0]
        pre = (4.0 * np.pi * t) ** (-0.5 * n) * np.exp(-np.dot(x, x) / (4.0 * t))
        return pre * u(x / (2.0 * t), -1.0 / (4.0 * t))

    return v


def push_measure(mu: DiscreteMeasure, direction: AppellDirection) -> DiscreteMeasure:
    """Pushforward of a weighted point cloud: nodes mapped, masses copied."""
    if len(mu) == 0:
        return mu
    xs, ts = appell_map_arrays(mu.xs, mu.ts, direction)
    return DiscreteMeasure(xs, ts, np.array(mu.masses))


@dataclass(frozen=True)
class IdentityResidual:
    lhs: float
    rhs: float

    @property
    def residual(self) -> float:
        return abs(self.lhs - self.rhs)


def verify_h_identities(
    u: Field,
    z: SpaceTimePoint,
    ctx: PoleContext,
    step: float = 1e-3,
    direction: AppellDirection = AppellDirection.FORWARD,
) -> IdentityResidual:
    """Probe the transfer identity for the weighted heat operator.

    Forward: for smooth u on the upper half-space and upper point z with
    image w, compares H[h u] / h at z against 4 tau_w^2 H[h~ u(inverse)] / h~
    at w, both sides by finite differences.  Backward starts from a lower
    field and point.  The difference of the two sides is the residual.
    """
    if direction is AppellDirection.FORWARD:
        if not ctx.is_upper:
            raise DomainError("forward identity starts from an upper context")
        ctx_l = ctx.mirror()
        w = appell_map(z, AppellDirection.FORWARD)

        def hu(x, t):
            return h_pole(point(x, t), ctx) * u(x, t)

        lhs = heat_operator_fd(hu, z, step=step) / h_pole(z, ctx)

        def gtil(x, t):
            zi = appell_map(point(x, t), AppellDirection.BACKWARD)
            return h_tilde(point(x, t), ctx_l) * u(zi.x, zi.t)

        rhs = (
            4.0
            * w.t**2
            * heat_operator_fd(gtil, w, step=step)
            / h_tilde(w, ctx_l)
        )
        return IdentityResidual(lhs, rhs)

    if ctx.is_upper:
        raise DomainError("backward identity starts from a lower context")
    ctx_u = ctx.mirror()
    zu = appell_map(z, AppellDirection.BACKWARD)

    def htu(x, t):
        return h_tilde(point(x, t), ctx) * u(x, t)

    lhs = heat_operator_fd(htu, z, step=step) / h_tilde(z, ctx)

    def g(x, t):
        wi = appell_map(point(x, t), AppellDirection.FORWARD)
        return h_pole(point(x, t), ctx_u) * u(wi.x, wi.t)

    rhs = (
        4.0
        * zu.t**2
        * heat_operator_fd(g, zu, step=step)
        / h_pole(zu, ctx_u)
    )
    return IdentityResidual(lhs, rhs)
