"""Batch front door: validate a JSON config, run one task, emit reports.

Usage:  parcap run <config.json> [--emit csv|json|both] [--seed N] [--out DIR]

Exit status 0 on success, 2 when the task completed but the verdict is
inconclusive or indeterminate, 1 on errors (schema violations are listed
with JSON-pointer paths).  Reports embed the criterion statement in use,
shell time windows, resolutions, tolerances and the seed, and rerunning the
same config and seed reproduces every output byte for byte.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .appell import AppellDirection, appell_map, appell_transform, verify_h_identities
from .averaging import QuadratureSpec, harnack_check, mean_value
from .capacity import capacity_of_region
from .geometry import (
    HeatBall,
    Resolution,
    dyadic_shell,
    level_shell,
    shell_complement_intersection,
)
from .hbrownian import GridPolicy, cluster_probability, simulate
from .kernel import (
    HalfSpace,
    PoleContext,
    h_pole,
    h_tilde,
    heat_kernel,
    kernel_ratio,
    point,
)
from .regions import Region, region_from_json
from .reporting import dump_csv, dump_json
from .wiener import ClassifyPolicy, Verdict, lambda_series_terms, series_terms

CRITERION_TEXT = (
    "sum over n of weight(n) * capacity(complement intersect shell(n)):"
    " divergence <=> removable singularity <=> the conditioned process visits"
    " the complement at times clustering to the pole almost surely;"
    " convergence <=> non-removable <=> almost surely not"
)


class ConfigError(ValueError):
    def __init__(self, errors):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


# ---------------------------------------------------------------------------
# validation helpers (errors carry JSON-pointer paths)
# ---------------------------------------------------------------------------

def _err(errors, pointer, message):
    errors.append(f"{pointer}: {message}")


def _get(obj, key, pointer, errors, required=True, types=None, choices=None, default=None):
    if key not in obj:
        if required:
            _err(errors, f"{pointer}/{key}", "missing required field")
        return default
    val = obj[key]
    if types is not None and not isinstance(val, types):
        _err(errors, f"{pointer}/{key}", f"expected {types}, got {type(val).__name__}")
        return default
    if choices is not None and val not in choices:
        _err(errors, f"{pointer}/{key}", f"expected one of {sorted(choices)}, got {val!r}")
        return default
    return val


def _parse_context(cfg, errors) -> PoleContext | None:
    ctx_obj = _get(cfg, "context", "", errors, types=dict)
    if ctx_obj is None:
        return None
    dim = _get(ctx_obj, "dim", "/context", errors, types=int)
    gamma = _get(ctx_obj, "gamma", "/context", errors, required=False, types=list)
    hs = _get(
        ctx_obj, "half_space", "/context", errors, types=str,
        choices={"upper", "lower"},
    )
    if errors or dim is None or hs is None:
        return None
    if dim < 1:
        _err(errors, "/context/dim", "must be >= 1")
        return None
    g = np.zeros(dim) if gamma is None else np.asarray(gamma, dtype=float)
    if g.shape != (dim,):
        _err(errors, "/context/gamma", f"needs {dim} components")
        return None
    return PoleContext(dim, g, HalfSpace(hs))


def _parse_region(params, key, pointer, errors, required=False) -> Region | None:
    obj = params.get(key)
    if obj is None:
        if required:
            _err(errors, f"{pointer}/{key}", "missing region description")
        return None
    try:
        return region_from_json(obj)
    except (ValueError, KeyError, TypeError) as exc:
        _err(errors, f"{pointer}/{key}", f"bad region: {exc}")
        return None


def _parse_resolution(params, pointer, errors) -> Resolution:
    obj = params.get("resolution")
    if obj is None:
        return Resolution()
    try:
        return Resolution(
            level=0,
            base_time=int(obj.get("base_time", 12)),
            base_radial=int(obj.get("base_radial", 3)),
            base_angular=int(obj.get("base_angular", 8)),
            base_polar=int(obj.get("base_polar", 4)),
        )
    except (TypeError, ValueError) as exc:
        _err(errors, f"{pointer}/resolution", str(exc))
        return Resolution()


def _named_field(spec_obj, ctx, pointer, errors):
    """Closed-form pole-weighted caloric fixtures addressable from configs."""
    kind = spec_obj.get("kind") if isinstance(spec_obj, dict) else None
    g = ctx.gamma

    def weight(x, t):
        if ctx.is_upper:
            zz = point(x, t)
            return h_pole(zz, ctx)
        return h_tilde(point(x, t), ctx)

    if kind == "one":
        return (lambda x, t: 1.0), (lambda t0: 1.0)
    if kind == "caloric_quadratic":
        def v(x, t):
            return float(np.sum((x - g) ** 2)) + 2.0 * ctx.dim * t

        def u(x, t):
            return v(x, t) / weight(x, t)

        def center_val(t0):
            xc = g if ctx.is_upper else -2.0 * t0 * g
            return v(xc, t0) / weight(xc, t0)

        return u, center_val
    if kind == "caloric_mixed":
        def v(x, t):
            s = x[0] - g[0]
            return s * s + 2.0 * t + s

        def u(x, t):
            return v(x, t) / weight(x, t)

        def center_val(t0):
            xc = g if ctx.is_upper else -2.0 * t0 * g
            return v(xc, t0) / weight(xc, t0)

        return u, center_val
    _err(errors, pointer, f"unknown field fixture {kind!r}")
    return None, None


# ---------------------------------------------------------------------------
# task runners
# ---------------------------------------------------------------------------

def _audit(ctx, seed, extra):
    base = {
        "tool_version": __version__,
        "criterion": CRITERION_TEXT,
        "context": {
            "dim": ctx.dim,
            "gamma": [float(v) for v in ctx.gamma],
            "half_space": ctx.half_space.value,
        },
        "seed": seed,
    }
    base.update(extra)
    return base


def _run_capacity(ctx, params, seed, out, emit, errors):
    shell_obj = _get(params, "shell", "/parameters", errors, types=dict)
    region = _parse_region(params, "region", "/parameters", errors)
    levels = params.get("levels", [0, 1, 2])
    tol = float(params.get("tol", 1e-3))
    rel_stall = float(params.get("rel_stall", 0.02))
    tc = params.get("time_center")
    base_res = _parse_resolution(params, "/parameters", errors)
    shell = None
    if shell_obj is not None:
        kind = _get(shell_obj, "kind", "/parameters/shell", errors, types=str,
                    choices={"dyadic", "lambda", "ball"})
        if kind == "dyadic":
            n = _get(shell_obj, "n", "/parameters/shell", errors, types=int)
            if n is not None:
                shell = dyadic_shell(ctx, n, tc)
        elif kind == "lambda":
            lam = _get(shell_obj, "lam", "/parameters/shell", errors, types=(int, float))
            n = _get(shell_obj, "n", "/parameters/shell", errors, types=int)
            if lam is not None and n is not None:
                shell = level_shell(ctx, float(lam), n, tc)
        elif kind == "ball":
            sc = _get(shell_obj, "scale", "/parameters/shell", errors, types=(int, float))
            if sc is not None:
                t0 = tc if tc is not None else (1.0 if ctx.is_upper else -0.25)
                shell = HeatBall(ctx, float(t0), float(sc))
    if errors:
        raise ConfigError(errors)

    compact = shell_complement_intersection(region, shell)
    result = capacity_of_region(
        compact, ctx, levels=levels, rel_stall=rel_stall, tol=tol,
        base_resolution=base_res, probe_seed=seed,
    )
    mu = result.capacitary
    report = _audit(ctx, seed, {
        "task": "capacity",
        "value": result.value,
        "converged": result.converged,
        "max_potential": result.max_potential,
        "probe_max_potential": result.probe_max_potential,
        "comp_slack_residual": result.comp_slack_residual,
        "duality_gap": result.duality_gap,
        "tolerance": tol,
        "rel_stall": rel_stall,
        "history": [list(h) for h in result.history],
        "resolution": result.resolution.describe(),
        "shell_time_window": list(shell.time_window),
        "diagnostics": result.diagnostics,
        "measure": {
            "nodes_x": [[float(v) for v in row] for row in mu.xs],
            "nodes_t": [float(v) for v in mu.ts],
            "masses": [float(v) for v in mu.masses],
        },
    })
    if emit in ("json", "both"):
        dump_json(out / "capacity_report.json", report)
    if emit in ("csv", "both"):
        rows = [
            list(mu.xs[i]) + [mu.ts[i], mu.masses[i]]
            for i in range(len(mu))
        ]
        dump_csv(
            out / "capacity_measure.csv",
            [f"x{i+1}" for i in range(ctx.dim)] + ["t", "mass"],
            rows,
        )
    return 0


def _run_series(ctx, params, seed, out, emit, errors):
    region = _parse_region(params, "region", "/parameters", errors, required=True)
    kind = _get(params, "kind", "/parameters", errors, required=False, types=str,
                choices={"dyadic", "lambda"}) or "dyadic"
    lam = params.get("lam")
    if kind == "lambda" and not isinstance(lam, (int, float)):
        _err(errors, "/parameters/lam", "lambda series needs a numeric 'lam' > 1")
    levels = params.get("levels", [0, 1, 2])
    tol = float(params.get("tol", 1e-3))
    rel_stall = float(params.get("rel_stall", 0.02))
    base_res = _parse_resolution(params, "/parameters", errors)
    pol_obj = params.get("policy", {})
    policy = ClassifyPolicy(
        eps_slope=float(pol_obj.get("eps_slope", 0.05)),
        rho_max=float(pol_obj.get("rho_max", 0.8)),
        window=int(pol_obj.get("window", 6)),
        min_terms=int(pol_obj.get("min_terms", 6)),
    )
    if errors:
        raise ConfigError(errors)

    if kind == "dyadic":
        n_min = int(params.get("n_min", 2))
        n_max = int(params.get("n_max", 14))
        report_obj = series_terms(
            region, ctx, range(n_min, n_max + 1), levels=levels,
            rel_stall=rel_stall, tol=tol, base_resolution=base_res, policy=policy,
        )
    else:
        n_rng = None
        if "n_min" in params and "n_max" in params:
            n_rng = range(int(params["n_min"]), int(params["n_max"]) + 1)
        report_obj = lambda_series_terms(
            region, ctx, float(lam), n_rng, levels=levels,
            rel_stall=rel_stall, tol=tol, base_resolution=base_res, policy=policy,
        )

    report = _audit(ctx, seed, {
        "task": "series",
        "kind": report_obj.kind,
        "lambda": report_obj.lam,
        "verdict": report_obj.verdict.value,
        "confidence": report_obj.confidence,
        "orientation": report_obj.orientation,
        "tolerance": tol,
        "rel_stall": rel_stall,
        "refinement_levels": list(levels),
        "policy": {
            "eps_slope": policy.eps_slope,
            "rho_max": policy.rho_max,
            "window": policy.window,
            "min_terms": policy.min_terms,
        },
        "diagnostics": report_obj.diagnostics,
        "terms": [
            {
                "n": t.n,
                "capacity": t.capacity,
                "weight": t.weight,
                "term": t.term,
                "converged": t.converged,
                "time_window": list(t.time_window),
                "n_nodes": t.n_nodes,
                "level": t.level,
            }
            for t in report_obj.terms
        ],
        "partial_sums": list(report_obj.partial_sums),
    })
    if emit in ("json", "both"):
        dump_json(out / "series_report.json", report)
    if emit in ("csv", "both"):
        rows = [
            [t.n, t.capacity, t.term, s]
            for t, s in zip(report_obj.terms, report_obj.partial_sums)
        ]
        dump_csv(out / "series_table.csv", ["n", "capacity", "term", "partial_sum"], rows)
    return 2 if report_obj.verdict is Verdict.INCONCLUSIVE else 0


def _run_simulate(ctx, params, seed, out, emit, errors):
    start_obj = _get(params, "start", "/parameters", errors, types=dict)
    grid_obj = _get(params, "grid", "/parameters", errors, types=dict)
    n_paths = _get(params, "n_paths", "/parameters", errors, types=int)
    region = _parse_region(params, "region", "/parameters", errors)
    deltas = params.get("deltas")
    if errors:
        raise ConfigError(errors)
    try:
        start = point(np.asarray(start_obj["x"], dtype=float), float(start_obj["t"]))
        grid = GridPolicy(
            t_start=float(start_obj["t"]),
            t_end=float(grid_obj["t_end"]),
            ratio=float(grid_obj.get("ratio", 0.9)),
        )
        times = grid.times(ctx)
    except (KeyError, ValueError) as exc:
        raise ConfigError([f"/parameters: {exc}"]) from exc

    ens = simulate(start, grid, n_paths, ctx, seed)
    est = None
    if deltas:
        est = cluster_probability(ens, region, deltas)

    report = _audit(ctx, seed, {
        "task": "simulate",
        "n_paths": n_paths,
        "grid": {"t_start": grid.t_start, "t_end": grid.t_end, "ratio": grid.ratio,
                 "n_times": int(times.shape[0])},
        "estimate": None if est is None else {
            "deltas": list(est.deltas),
            "frequencies": list(est.frequencies),
            "ci_low": list(est.ci_low),
            "ci_high": list(est.ci_high),
            "verdict": est.verdict.value,
            "diagnostics": est.diagnostics,
        },
    })
    if emit in ("json", "both"):
        dump_json(out / "simulate_report.json", report)
    if emit in ("csv", "both"):
        ens.to_csv(out / "simulate_paths.csv")
    if est is not None and est.verdict.value == "indeterminate":
        return 2
    return 0


def _run_mean_value(ctx, params, seed, out, emit, errors):
    u_obj = _get(params, "u", "/parameters", errors, types=dict)
    c = float(params.get("c", 1.0))
    tc = params.get("time_center")
    t0 = float(tc) if tc is not None else (1.0 if ctx.is_upper else -0.25)
    quad = QuadratureSpec(tol=float(params.get("tol", 1e-3)))
    if errors:
        raise ConfigError(errors)
    u, center_val = _named_field(u_obj, ctx, "/parameters/u", errors)
    if errors:
        raise ConfigError(errors)
    ball = HeatBall(ctx, t0, c)
    got = mean_value(u, ball.center, c, ctx, quad=quad)
    expected = center_val(t0)
    report = _audit(ctx, seed, {
        "task": "mean-value",
        "c": c,
        "tolerance": quad.tol,
        "time_center": t0,
        "time_window": list(ball.time_window),
        "value": got,
        "center_value": expected,
        "abs_error": abs(got - expected),
    })
    if emit in ("json", "both"):
        dump_json(out / "mean_value_report.json", report)
    if emit in ("csv", "both"):
        dump_csv(out / "mean_value_table.csv",
                 ["c", "value", "center_value", "abs_error"],
                 [[c, got, expected, abs(got - expected)]])
    return 0


def _run_harnack(ctx, params, seed, out, emit, errors):
    u_obj = params.get("u", {"kind": "one"})
    c_values = params.get("c_values", [0.5, 1.0, 2.0])
    tc = params.get("time_center")
    t0 = float(tc) if tc is not None else (1.0 if ctx.is_upper else -0.25)
    if errors:
        raise ConfigError(errors)

    kind = u_obj.get("kind")
    c_max = max(float(c) for c in c_values)
    if kind == "one":
        u = lambda x, t: 1.0
    elif kind == "source_ratio":
        big = HeatBall(ctx, t0, 2.0 * c_max)
        lo, _ = big.time_window
        src_t = lo - (0.5 if ctx.is_upper else 1.0) * abs(lo) - (0.0 if ctx.is_upper else 1.0)
        if ctx.is_upper:
            src_t = 0.5 * lo
        src = point(big.axis(np.array([src_t]))[0] if not ctx.is_upper else ctx.gamma, src_t)

        def u(x, t):
            return kernel_ratio(point(x, t), src, ctx)
    else:
        raise ConfigError([f"/parameters/u/kind: unknown fixture {kind!r}"])

    quad = QuadratureSpec(tol=float(params.get("tol", 1e-3)))
    rows = []
    for c in c_values:
        ball = HeatBall(ctx, t0, float(c))
        res = harnack_check(u, ball.center, float(c), ctx, quad=quad)
        rows.append([float(c), res.average, res.infimum, res.ratio])
    report = _audit(ctx, seed, {
        "task": "harnack",
        "time_center": t0,
        "results": [
            {"c": r[0], "average": r[1], "infimum": r[2], "ratio": r[3]} for r in rows
        ],
        "max_ratio": max(r[3] for r in rows),
    })
    if emit in ("json", "both"):
        dump_json(out / "harnack_report.json", report)
    if emit in ("csv", "both"):
        dump_csv(out / "harnack_table.csv", ["c", "average", "infimum", "ratio"], rows)
    return 0


def _run_appell_check(ctx, params, seed, out, emit, errors):
    n_points = int(params.get("n_points", 1000))
    step = float(params.get("step", 5e-3))
    if errors:
        raise ConfigError(errors)
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    N = ctx.dim
    checks = []

    # round trip of the point map
    xs = rng.normal(size=(n_points, N))
    ts = rng.uniform(0.1, 3.0, n_points)
    worst = 0.0
    for x, t in zip(xs, ts):
        z = point(x, t)
        back = appell_map(appell_map(z, AppellDirection.FORWARD), AppellDirection.BACKWARD)
        worst = max(worst, float(np.max(np.abs(back.x - z.x))), abs(back.t - z.t))
    checks.append({"name": "round_trip", "residual": worst, "threshold": 1e-12})

    # forward transform of the upper pole function matches the drift exponential
    up = ctx if ctx.is_upper else ctx.mirror()
    lo_ctx = up.mirror()
    h_up = lambda x, t: h_pole(point(x, t), up)
    Ah = appell_transform(h_up, AppellDirection.FORWARD)
    worst = 0.0
    for x, t in zip(rng.normal(size=(200, N)), rng.uniform(-3.0, -0.05, 200)):
        a = Ah(x, t)
        b = h_tilde(point(x, t), lo_ctx)
        worst = max(worst, abs(a - b) / abs(b))
    checks.append({"name": "pole_function_transport", "residual": worst, "threshold": 1e-10})

    # kernel transport: forward transform of F(. - w) against the closed form
    worst = 0.0
    for _ in range(200):
        w = point(rng.normal(size=N), rng.uniform(0.1, 2.0))
        wt = appell_map(w, AppellDirection.FORWARD)
        x = rng.normal(size=N)
        t = wt.t - rng.uniform(0.05, 1.0)
        F_w = lambda xx, tt: heat_kernel(point(xx, tt), w)
        a = appell_transform(F_w, AppellDirection.FORWARD)(x, t)
        pre = (-4.0 * np.pi * wt.t) ** (0.5 * N) * np.exp(
            -float(np.dot(wt.x, wt.x)) / (4.0 * wt.t)
        )
        b = pre * heat_kernel(point(x, t), wt)
        if b != 0.0:
            worst = max(worst, abs(a - b) / abs(b))
    checks.append({"name": "kernel_transport", "residual": worst, "threshold": 1e-10})

    # operator transfer identity at two probe steps; halving must shrink it
    u_field = lambda x, t: float(x[0]) * t
    res_h, res_h2 = 0.0, 0.0
    for x, t in zip(rng.normal(size=(20, N)), rng.uniform(0.4, 1.5, 20)):
        z = point(x, t)
        r1 = verify_h_identities(u_field, z, up, step=step)
        r2 = verify_h_identities(u_field, z, up, step=0.5 * step)
        res_h = max(res_h, r1.residual)
        res_h2 = max(res_h2, r2.residual)
    checks.append({
        "name": "operator_transfer",
        "residual": res_h2,
        "threshold": 1e-4,
        "halving_ratio": res_h / max(res_h2, 1e-300),
    })

    ok = all(c["residual"] <= c["threshold"] for c in checks)
    report = _audit(ctx, seed, {
        "task": "appell-check",
        "n_points": n_points,
        "step": step,
        "checks": checks,
        "all_passed": ok,
    })
    if emit in ("json", "both"):
        dump_json(out / "appell_check_report.json", report)
    if emit in ("csv", "both"):
        dump_csv(out / "appell_check_table.csv",
                 ["check", "residual", "threshold"],
                 [[c["name"], c["residual"], c["threshold"]] for c in checks])
    return 0 if ok else 1


_TASKS = {
    "capacity": _run_capacity,
    "series": _run_series,
    "simulate": _run_simulate,
    "mean-value": _run_mean_value,
    "harnack": _run_harnack,
    "appell-check": _run_appell_check,
}


def run_config(config_path, emit="both", seed_override=None, out_dir=".") -> int:
    path = Path(config_path)
    try:
        cfg = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        print(f"error /: config file not found: {path}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"error /: invalid JSON: {exc}", file=sys.stderr)
        return 1

    errors: list[str] = []
    if not isinstance(cfg, dict):
        print("error /: config must be a JSON object", file=sys.stderr)
        return 1
    ctx = _parse_context(cfg, errors)
    task = _get(cfg, "task", "", errors, types=str, choices=set(_TASKS))
    params = _get(cfg, "parameters", "", errors, required=False, types=dict, default={})
    seed_val = cfg.get("seed", 20240601)
    if not isinstance(seed_val, int):
        _err(errors, "/seed", "seed must be an integer")
    if errors:
        for e in errors:
            print(f"error {e}", file=sys.stderr)
        return 1

    seed = int(seed_override) if seed_override is not None else int(seed_val)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return _TASKS[task](ctx, params, seed, out, emit, [])
    except ConfigError as exc:
        for e in exc.errors:
            print(f"error {e}", file=sys.stderr)
        return 1
    except Exception as exc:  # surface compute failures as exit 1, not tracebacks
        print(f"error /run: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="parcap",
        description="Capacity, removability-series, simulation and averaging tasks "
        "driven by a JSON config.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run one task from a config file")
    runp.add_argument("config", help="path to the task configuration (JSON)")
    runp.add_argument("--emit", choices=["csv", "json", "both"], default="both")
    runp.add_argument("--seed", type=int, default=None, help="override the config seed")
    runp.add_argument("--out", default=".", help="output directory")
    args = parser.parse_args(argv)
    if args.command == "run":
        return run_config(args.config, emit=args.emit, seed_override=args.seed, out_dir=args.out)
    parser.error(f"unknown command {args.command}")
    return 1


if __name__ == "__main__":
    sys.exit(main())
