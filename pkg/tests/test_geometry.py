import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import parcap as pc
from parcap.geometry import (
    CompactSet,
    HeatBall,
    Resolution,
    default_time_center,
    discretize,
    sphere_directions,
)
from parcap.kernel import DomainError
from parcap.regions import (
    AppellImage,
    Complement,
    ConstProfile,
    EmptyRegion,
    FullRegion,
    HalfSpaceCut,
    Intersection,
    PowerProfile,
    SpaceBall,
    TableProfile,
    TimeSlab,
    Tube,
    Union,
    region_from_json,
    tube_profile_from_csv,
)


# ---------------------------------------------------------------------------
# regions
# ---------------------------------------------------------------------------

def test_region_primitives():
    ctx = pc.lower_context(2, [1.0, 0.0])
    xs = np.array([[0.0, 0.0], [3.0, 0.0], [0.5, 0.5]])
    ts = np.array([-1.0, -2.0, -0.5])
    assert not EmptyRegion().contains(xs, ts, ctx).any()
    assert FullRegion().contains(xs, ts, ctx).all()
    assert list(TimeSlab(-1.5, -0.4).contains(xs, ts, ctx)) == [True, False, True]
    assert list(SpaceBall([0.0, 0.0], 1.0).contains(xs, ts, ctx)) == [True, False, True]
    assert list(HalfSpaceCut([1.0, 0.0], 0.6).contains(xs, ts, ctx)) == [True, False, True]


def test_tube_axes():
    ctx = pc.lower_context(1, [1.0])
    pole_tube = Tube(ConstProfile(0.5), axis="pole")
    # pole axis sits at x = 1
    assert pole_tube.contains(np.array([[1.2]]), np.array([-3.0]), ctx)[0]
    assert not pole_tube.contains(np.array([[2.0]]), np.array([-3.0]), ctx)[0]
    drift_tube = Tube(ConstProfile(0.5), axis="drift")
    # drift axis sits at x = -2 t gamma = 6 at t=-3
    assert drift_tube.contains(np.array([[6.2]]), np.array([-3.0]), ctx)[0]
    assert not drift_tube.contains(np.array([[1.0]]), np.array([-3.0]), ctx)[0]


def test_power_and_table_profiles():
    p = PowerProfile(1.5, 0.5)
    assert p(np.array([-4.0]))[0] == pytest.approx(3.0)
    t = TableProfile([[-2.0, 1.0], [0.0, 0.0], [-1.0, 0.5]])
    assert t(np.array([-1.5]))[0] == pytest.approx(0.75)
    assert t(np.array([-5.0]))[0] == pytest.approx(1.0)  # clamped


def test_tube_profile_csv(tmp_path):
    path = tmp_path / "profile.csv"
    path.write_text("t,f\n-2.0,1.0\n-1.0,0.5\n0.0,0.0\n")
    prof = tube_profile_from_csv(path)
    assert prof(np.array([-1.5]))[0] == pytest.approx(0.75)


def test_boolean_nodes_and_json_round_trip():
    ctx = pc.lower_context(1)
    reg = Union(
        [
            Intersection([TimeSlab(-3.0, -1.0), SpaceBall([0.0], 2.0)]),
            Complement(Tube(PowerProfile(1.0, 0.5))),
        ]
    )
    clone = region_from_json(json.loads(json.dumps(reg.to_json())))
    rng = np.random.default_rng(1)
    xs = rng.normal(size=(500, 1)) * 3
    ts = -rng.uniform(0.1, 5.0, 500)
    assert np.array_equal(reg.contains(xs, ts, ctx), clone.contains(xs, ts, ctx))


def test_appell_image_region_pullback():
    up = pc.upper_context(1, [0.0])
    lower_box = Intersection([SpaceBall([0.0], 1.0), TimeSlab(-2.0, -0.5)])
    img = AppellImage(lower_box)
    rng = np.random.default_rng(6)
    xs = rng.normal(size=(300, 1))
    ts = rng.uniform(0.05, 3.0, 300)
    got = img.contains(xs, ts, up)
    ys, taus = pc.appell.appell_map_arrays(xs, ts, pc.AppellDirection.FORWARD)
    want = lower_box.contains(ys, taus, up.mirror())
    assert np.array_equal(got, want)


def test_region_json_errors():
    with pytest.raises(ValueError):
        region_from_json({"kind": "nonsense"})
    with pytest.raises(ValueError):
        region_from_json({"no_kind": 1})


# ---------------------------------------------------------------------------
# balls and shells
# ---------------------------------------------------------------------------

def test_ball_radius_endpoints_and_window():
    up = pc.upper_context(1, [0.2])
    ball = pc.HeatBall(up, 1.0, 2.0)
    lo, hi = ball.time_window
    assert lo == pytest.approx(1.0 / 9.0) and hi == 1.0
    assert pc.ball_radius(lo, ball) == 0.0
    assert pc.ball_radius(hi, ball) == 0.0
    assert pc.ball_radius(0.5, ball) > 0.0
    with pytest.raises(DomainError):
        pc.ball_radius(1.5, ball)


def test_lower_radius_value():
    # unit distance below the center with scale e gives radius sqrt(2)
    lo = pc.lower_context(1)
    ball = pc.HeatBall(lo, -0.25, np.e)
    assert pc.ball_radius(-1.25, ball) == pytest.approx(np.sqrt(2.0), rel=1e-14)


def test_lower_radius_maximum():
    lo = pc.lower_context(3, [0.1, 0.0, -0.2])
    for c in (0.4, 1.0, 5.0):
        ball = pc.HeatBall(lo, -0.25, c)
        tau_star = -0.25 - c / np.e
        rmax = pc.ball_radius(tau_star, ball)
        assert rmax == pytest.approx(np.sqrt(2 * 3 * c / np.e), rel=1e-10)
        taus = np.linspace(-0.25 - c + 1e-9, -0.25 - 1e-9, 400)
        assert float(np.max(ball.radius(taus))) <= rmax + 1e-10


def test_ball_membership_ratio_vs_closed_form():
    rng = np.random.default_rng(2024)
    for make, g in (
        (pc.upper_context, [0.0]),
        (pc.upper_context, [1.0]),
        (pc.lower_context, [0.0]),
        (pc.lower_context, [1.0]),
    ):
        ctx = make(1, g)
        ball = pc.HeatBall(ctx, default_time_center(ctx), 1.3)
        lo_t, hi_t = ball.time_window
        tested = 0
        for _ in range(2500):
            t = rng.uniform(lo_t - 0.2 * (hi_t - lo_t), hi_t + 0.02 * (hi_t - lo_t))
            if not bool(ctx.admits(t)):
                continue
            R = float(ball.radius(np.array([t]))[0])
            x = ball.axis(np.array([t]))[0] + rng.normal(size=1) * max(R, 0.3) * 1.2
            w = pc.point(x, t)
            ratio = pc.kernel_ratio(ball.center, w, ctx)
            if abs(ratio - ball.level) < 1e-10 * ball.level:
                continue  # boundary band excluded
            tested += 1
            assert (ratio > ball.level) == ball.contains_point(w)
        assert tested > 2000


def test_open_ball_excludes_center_shell_includes_it():
    up = pc.upper_context(2, [0.3, 0.3])
    shell = pc.dyadic_shell(up, 1)
    assert not shell.outer.contains_point(shell.center)
    assert shell.contains_point(shell.center)
    # time outside the window fails
    assert not shell.contains_point(pc.point(shell.center.x, 1.2))
    lo_t, _ = shell.time_window
    assert not shell.contains_point(pc.point(shell.center.x, lo_t * 0.5))


def test_shell_two_sided_condition():
    lo = pc.lower_context(1)
    shell = pc.dyadic_shell(lo, 2)
    rng = np.random.default_rng(4)
    level_in, level_out = shell.levels
    assert level_in == pytest.approx((2 * np.pi * 4.0) ** -0.5, rel=1e-14)
    assert level_out == pytest.approx((4 * np.pi * 4.0) ** -0.5, rel=1e-14)
    hits = 0
    for _ in range(2000):
        t = rng.uniform(*shell.time_window)
        R = float(shell.outer.radius(np.array([t]))[0])
        x = rng.normal(size=1) * max(R, 0.5)
        w = pc.point(x, t)
        ratio = pc.kernel_ratio(shell.center, w, lo)
        if abs(ratio - level_in) < 1e-10 * level_in or abs(ratio - level_out) < 1e-10 * level_out:
            continue
        inside = shell.contains_point(w)
        assert inside == (level_out <= ratio <= level_in)
        hits += inside
    assert hits > 100


def test_level_shell_matches_ratio_levels():
    up = pc.upper_context(2, [0.1, 0.0])
    lam, n = 1.5, 4
    shell = pc.level_shell(up, lam, n)
    level_in, level_out = shell.levels
    assert level_in == pytest.approx(lam ** (-n + 1), rel=1e-12)
    assert level_out == pytest.approx(lam ** (-n), rel=1e-12)


def test_shell_maps_onto_matching_shell_across_halfspaces():
    up = pc.upper_context(1, [0.6])
    shell = pc.dyadic_shell(up, 2)
    image = shell.appell_image()
    rng = np.random.default_rng(11)
    lo_t, hi_t = shell.time_window
    count = 0
    for _ in range(800):
        t = rng.uniform(lo_t, hi_t)
        rin, rout = shell.radius_band(np.array([t]))
        if rout[0] <= 1e-9:
            continue
        r = rng.uniform(rin[0], rout[0])
        margin = 0.02 * (rout[0] - rin[0])
        if r < rin[0] + margin or r > rout[0] - margin:
            continue
        x = shell.outer.axis(np.array([t]))[0] + np.array([r]) * (1 if rng.random() < 0.5 else -1)
        w = pc.point(x, t)
        if not shell.contains_point(w):
            continue
        count += 1
        wm = pc.appell_map(w, pc.AppellDirection.FORWARD)
        assert image.contains_point(wm)
    assert count > 300


def test_harnack_region_geometry():
    up = pc.upper_context(1)
    q = pc.harnack_region(1.0, 0.8, up)
    ball = pc.HeatBall(up, 1.0, 0.8)
    rng = np.random.default_rng(5)
    xs = rng.normal(size=(600, 1))
    ts = rng.uniform(0.01, 1.1, 600)
    in_q = q.contains(xs, ts, up)
    in_ball = ball.contains(xs, ts)
    assert np.all(~in_q | in_ball)  # truncated region is a subset
    trunc = 1.0 / (1.0 + 3.0 * 0.8)
    slice_r = ball.radius(np.array([trunc * 1.001]))[0]
    assert slice_r > 0.0  # nonempty at the truncation level
    # JSON round trip carries the heat-ball leaf
    clone = region_from_json(q.to_json())
    assert np.array_equal(clone.contains(xs, ts, up), in_q)


# ---------------------------------------------------------------------------
# discretization
# ---------------------------------------------------------------------------

def test_sphere_directions_measures():
    for dim, total in ((1, 2.0), (2, 2 * np.pi), (3, 4 * np.pi)):
        dirs, w = sphere_directions(dim, Resolution())
        assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0)
        assert float(np.sum(w)) == pytest.approx(total, rel=1e-12)


def test_discretize_empty_and_filter():
    lo = pc.lower_context(1)
    shell = pc.dyadic_shell(lo, 1)
    empty = pc.shell_complement_intersection(EmptyRegion(), shell)
    cloud = discretize(empty, Resolution())
    assert cloud.is_empty and cloud.n_candidates > 0

    tube = Tube(PowerProfile(1.0, 0.5))
    compact = pc.shell_complement_intersection(tube, shell)
    cloud = discretize(compact, Resolution(level=1))
    assert len(cloud) > 0
    assert compact.contains(cloud.xs, cloud.ts).all()
    assert np.all(cloud.volumes > 0)


def test_discretize_growth_and_determinism():
    for make, dim in ((pc.lower_context, 1), (pc.lower_context, 2)):
        ctx = make(dim)
        shell = pc.dyadic_shell(ctx, 0)
        compact = pc.shell_complement_intersection(None, shell)
        n0 = len(discretize(compact, Resolution(level=0)))
        n1 = len(discretize(compact, Resolution(level=1)))
        growth = n1 / n0
        assert 0.55 * 2 ** (dim + 1) <= growth <= 1.6 * 2 ** (dim + 1)
    ctx = pc.upper_context(1, [0.4])
    compact = pc.shell_complement_intersection(None, pc.dyadic_shell(ctx, 3))
    a = discretize(compact, Resolution(level=1))
    b = discretize(compact, Resolution(level=1))
    assert np.array_equal(a.xs, b.xs) and np.array_equal(a.ts, b.ts)
    assert np.array_equal(a.volumes, b.volumes)


def test_discretize_volume_sanity():
    # total cell volume of a full ball approximates its true volume
    lo = pc.lower_context(1)
    ball = pc.HeatBall(lo, -0.25, 1.0)
    compact = CompactSet(ball, None, lo)
    cloud = discretize(compact, Resolution(level=2))
    taus = np.linspace(*ball.time_window, 4001)[1:-1]
    true_vol = float(np.trapezoid(2.0 * ball.radius(taus), taus))
    assert float(np.sum(cloud.volumes)) == pytest.approx(true_vol, rel=0.02)
