import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import parcap as pc
from parcap.kernel import (
    DimensionMismatchError,
    DomainError,
    kernel_ratio_matrix,
    log_pole_weight,
    log_pole_weight_star,
)


def test_kernel_vanishes_unless_strictly_later():
    z = pc.point([0.0], 1.0)
    assert pc.heat_kernel(z, pc.point([3.0], 1.0)) == 0.0
    assert pc.heat_kernel(z, pc.point([3.0], 2.0)) == 0.0
    assert pc.heat_kernel(z, pc.point([3.0], 0.5)) > 0.0


@settings(max_examples=60, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-2, 2), st.floats(-2, 2))
def test_kernel_support_property(x, y, t, tau):
    v = pc.heat_kernel(pc.point([x], t), pc.point([y], tau))
    if t - tau <= pc.kernel.TIME_EPS:
        assert v == 0.0
    else:
        assert v > 0.0 or (x - y) ** 2 / (4 * (t - tau)) > 700


def test_kernel_unit_normalization_point():
    # prefactor is 1 and the exponent vanishes at coincident positions
    z = pc.point([0.7], 0.3 + 1.0 / (4.0 * np.pi))
    w = pc.point([0.7], 0.3)
    assert pc.heat_kernel(z, w) == pytest.approx(1.0, rel=1e-14)


def test_kernel_two_dim_value():
    z = pc.point([2.0, 0.0], 1.5)
    w = pc.point([0.0, 0.0], 0.5)
    assert pc.heat_kernel(z, w) == pytest.approx(np.exp(-1.0) / (4.0 * np.pi), rel=1e-14)


def test_kernel_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        pc.heat_kernel(pc.point([0.0], 1.0), pc.point([0.0, 0.0], 0.5))


def test_semigroup_normalization():
    # spatial integral of the kernel is 1 for any positive time gap
    for dim in (1, 2, 3):
        grid = np.linspace(-12.0, 12.0, 161)
        axes = np.meshgrid(*([grid] * dim), indexing="ij")
        pts = np.stack([a.ravel() for a in axes], axis=1)
        dt = 0.7
        logs = -0.5 * dim * np.log(4 * np.pi * dt) - np.sum(pts**2, axis=1) / (4 * dt)
        total = np.sum(np.exp(logs)) * (grid[1] - grid[0]) ** dim
        assert total == pytest.approx(1.0, abs=1e-6)


def test_h_pole_basics():
    ctx = pc.upper_context(1, [0.4])
    assert pc.h_pole(pc.point([0.4], 1.0 / (4 * np.pi)), ctx) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        pc.h_pole(pc.point([0.0], -1.0), ctx)
    # gamma zero reduces to the plain kernel from the origin
    ctx0 = pc.upper_context(2)
    z = pc.point([0.3, -1.0], 0.8)
    assert pc.h_pole(z, ctx0) == pytest.approx(
        pc.heat_kernel(z, pc.point([0.0, 0.0], 0.0)), rel=1e-14
    )


def test_h_pole_under_point_map():
    # h pulled back through the half-space exchange equals the drift
    # exponential times an explicit Gaussian factor
    rng = np.random.default_rng(12)
    for dim in (1, 3):
        g = rng.normal(size=dim)
        up = pc.upper_context(dim, g)
        lo = up.mirror()
        for _ in range(50):
            w = pc.point(rng.normal(size=dim), -rng.uniform(0.05, 3.0))
            zi = pc.appell_map(w, pc.AppellDirection.BACKWARD)
            lhs = pc.h_pole(zi, up)
            rhs = (
                (-np.pi / w.t) ** (-0.5 * dim)
                * np.exp(np.dot(w.x, w.x) / (4.0 * w.t))
                * pc.h_tilde(w, lo)
            )
            assert lhs == pytest.approx(rhs, rel=1e-12)


def test_h_star_values_and_product():
    ctx = pc.upper_context(1, [0.0])
    assert pc.h_star(pc.point([0.0], np.pi), ctx) == pytest.approx(1.0)
    ctx3 = pc.upper_context(3)
    z = pc.point([0.0, 0.0, 0.0], 0.5)
    assert pc.h_pole(z, ctx3) * pc.h_star(z, ctx3) == pytest.approx(1.0, rel=1e-13)


@settings(max_examples=60, deadline=None)
@given(st.floats(-2, 2), st.floats(0.05, 4.0))
def test_h_times_h_star_identity(x, t):
    ctx = pc.upper_context(1, [0.25])
    z = pc.point([x], t)
    assert pc.h_pole(z, ctx) * pc.h_star(z, ctx) == pytest.approx(
        (2.0 * t) ** -1, rel=1e-11
    )


def test_h_star_under_point_map():
    rng = np.random.default_rng(5)
    dim = 2
    g = np.array([0.8, -0.3])
    up = pc.upper_context(dim, g)
    for _ in range(50):
        w = pc.point(rng.normal(size=dim), -rng.uniform(0.05, 2.0))
        zi = pc.appell_map(w, pc.AppellDirection.BACKWARD)
        lhs = pc.h_star(zi, up)
        shifted = w.x + 2.0 * w.t * g
        rhs = (-4.0 * np.pi * w.t) ** (0.5 * dim) * np.exp(
            -np.dot(shifted, shifted) / (4.0 * w.t)
        )
        assert lhs == pytest.approx(rhs, rel=1e-12)


def test_h_tilde_basics():
    ctx0 = pc.lower_context(2)
    assert pc.h_tilde(pc.point([5.0, -3.0], -2.0), ctx0) == 1.0
    ctx = pc.lower_context(2, [1.0, 0.0])
    assert pc.h_tilde(pc.point([2.0, 0.0], -1.0), ctx) == pytest.approx(np.e, rel=1e-14)
    with pytest.raises(DomainError):
        pc.h_tilde(pc.point([0.0, 0.0], 1.0), ctx)


@settings(max_examples=60, deadline=None)
@given(st.floats(-3, 3), st.floats(-4.0, -0.01))
def test_h_tilde_product_is_one(x, t):
    ctx = pc.lower_context(1, [1.3])
    w = pc.point([x], t)
    assert pc.h_tilde(w, ctx) * pc.h_tilde_star(w, ctx) == pytest.approx(1.0, rel=1e-12)


def test_kernel_ratio_support_and_level():
    ctx = pc.upper_context(1)
    zc = pc.point([0.0], 1.0)
    assert pc.kernel_ratio(zc, pc.point([0.3], 1.0), ctx) == 0.0
    assert pc.kernel_ratio(zc, pc.point([0.3], 1.5), ctx) == 0.0
    # a point on the ball's bounding surface gives exactly the level value
    c = 1.7
    ball = pc.HeatBall(ctx, 1.0, c)
    t = 0.55
    r = float(ball.radius(np.array([t]))[0])
    w = pc.point([r], t)
    assert pc.kernel_ratio(zc, w, ctx) == pytest.approx(
        (4 * np.pi * c) ** -0.5, rel=1e-11
    )


def test_kernel_ratio_lower_gamma_zero_is_plain_kernel():
    ctx = pc.lower_context(2)
    z = pc.point([0.1, 0.4], -0.3)
    w = pc.point([-0.2, 0.0], -1.1)
    assert pc.kernel_ratio(z, w, ctx) == pytest.approx(
        pc.heat_kernel(z, w), rel=1e-13
    )


def test_ratio_matrix_matches_naive_definition():
    # stable closed forms against the literal F / (weight * weight_star)
    rng = np.random.default_rng(77)
    for make in (pc.upper_context, pc.lower_context):
        ctx = make(2, [0.5, -0.2])
        sgn = 1.0 if ctx.is_upper else -1.0
        zx = rng.normal(size=(20, 2))
        zt = sgn * rng.uniform(0.3, 2.0, 20)
        wx = rng.normal(size=(15, 2))
        wt = sgn * rng.uniform(0.3, 2.0, 15) - (0.0 if ctx.is_upper else 2.0)
        if ctx.is_upper:
            zt, wt = zt + 1.0, wt * 0.3
        m = kernel_ratio_matrix(zx, zt, wx, wt, ctx)
        lw = log_pole_weight(zx, zt, ctx)
        lws = log_pole_weight_star(wx, wt, ctx)
        for i in range(zx.shape[0]):
            for j in range(wx.shape[0]):
                naive = pc.heat_kernel(pc.point(zx[i], zt[i]), pc.point(wx[j], wt[j]))
                naive *= np.exp(-lw[i] - lws[j])
                assert m[i, j] == pytest.approx(naive, rel=1e-10, abs=1e-280)


def test_bridge_increment_exponent_identity():
    rng = np.random.default_rng(100)
    for dim in (1, 2, 3):
        x = rng.normal(size=(2000, dim))
        y = rng.normal(size=(2000, dim))
        t = rng.uniform(0.3, 3.0, 2000)
        tau = rng.uniform(0.05, 1.0, 2000) * (t - 0.2) / 3.0
        lhs = np.sum((tau[:, None] * x - t[:, None] * y) ** 2, axis=1) / (
            4 * t * tau * (t - tau)
        ) - np.sum(y**2, axis=1) / (4 * tau)
        rhs = np.sum((x - y) ** 2, axis=1) / (4 * (t - tau)) - np.sum(
            x**2, axis=1
        ) / (4 * t)
        rel = np.abs(lhs - rhs) / np.maximum.reduce([np.ones_like(lhs), np.abs(lhs), np.abs(rhs)])
        assert float(np.max(rel)) < 1e-12


def test_heat_operator_fd_calibration():
    z = pc.point([0.4, -0.2], 0.9)
    # plainly caloric fields
    f_kernel = lambda x, t: pc.heat_kernel(pc.point(x, t), pc.point([0.0, 0.0], 0.0))
    assert abs(pc.heat_operator_fd(f_kernel, z)) < 1e-8
    f_poly = lambda x, t: float(np.dot(x, x)) + 2 * 2 * t
    assert abs(pc.heat_operator_fd(f_poly, z)) < 1e-7
    assert pc.heat_operator_fd(lambda x, t: t, z) == pytest.approx(1.0, abs=1e-10)


def test_heat_operator_fd_pole_functions_are_caloric():
    up = pc.upper_context(2, [0.3, 0.3])
    lo = up.mirror()
    zu = pc.point([0.5, -0.2], 0.7)
    zl = pc.point([0.5, -0.2], -0.7)
    f_up = lambda x, t: pc.h_pole(pc.point(x, t), up)
    f_lo = lambda x, t: pc.h_tilde(pc.point(x, t), lo)
    r_coarse = abs(pc.heat_operator_fd(f_up, zu, step=2e-2, richardson=False))
    r_fine = abs(pc.heat_operator_fd(f_up, zu, step=1e-2, richardson=False))
    assert r_fine < r_coarse and r_fine < 1e-4
    r_coarse = abs(pc.heat_operator_fd(f_lo, zl, step=2e-2, richardson=False))
    r_fine = abs(pc.heat_operator_fd(f_lo, zl, step=1e-2, richardson=False))
    assert r_fine <= r_coarse + 1e-12 and r_fine < 1e-4


def test_heat_operator_fd_second_order():
    # quartic heat polynomial: plain central differences decay like step^2
    f = lambda x, t: x[0] ** 6
    z = pc.point([1.1], 0.5)
    e1 = abs(pc.heat_operator_fd(f, z, step=4e-2, richardson=False) + 30 * 1.1**4)
    e2 = abs(pc.heat_operator_fd(f, z, step=2e-2, richardson=False) + 30 * 1.1**4)
    assert e2 < e1 / 3.0


def test_heat_operator_fd_halfspace_guard():
    up = pc.upper_context(1)
    with pytest.raises(DomainError):
        pc.heat_operator_fd(lambda x, t: t, pc.point([0.0], 1e-6), step=1e-3, ctx=up)
