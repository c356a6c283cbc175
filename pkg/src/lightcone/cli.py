"""Command-line interface: scenario-driven runs with plot-ready CSV output.

Subcommands: trace-cone, invert, observe, newton-limit, validate.  Every
run writes its data files plus a manifest into --out.  Output is
deterministic: floats are printed with 17 significant digits and row
order never depends on thread count.

Exit codes: 0 success, 1 validation failure, 2 config error, 3 numerical
failure.
"""

import argparse
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import newtonian as nl
from . import splitting as sp
from .charts import metric_at, riemann_ricci_at, _fd_christoffels
from .errors import ConfigError, LightconeError
from .geodesics import GeodesicIVP, integrate_geodesic
from .lorentz import ETA, Event, gram_matrix, validate_frame_of_reference
from .observers import make_inertial_observer
from .scenario import TOOL_VERSION, Scenario, apply_overrides, load_scenario


def _fmt(x):
    return format(float(x), ".17g")


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if not isinstance(v, str) else v for v in row) + "\n")


def _write_manifest(out_dir, scn, command, outputs, started, extra=None):
    lines = [
        f"scenario_hash = {scn.hash}",
        f"tool_version = {TOOL_VERSION}",
        f"command = {command}",
    ]
    for name in outputs:
        lines.append(f"output = {name}")
    for key, val in (extra or {}).items():
        lines.append(f"{key} = {val}")
    lines.append(f"wall_clock_s = {time.monotonic() - started:.3f}")
    (Path(out_dir) / "manifest.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _direction_grid(n_polar, n_azimuth):
    """Deterministic unit directions, poles avoided by half-step offsets."""
    dirs = []
    for i in range(n_polar):
        theta = np.pi * (i + 0.5) / n_polar
        for j in range(n_azimuth):
            phi = 2.0 * np.pi * j / n_azimuth
            dirs.append(np.array([
                np.sin(theta) * np.cos(phi),
                np.sin(theta) * np.sin(phi),
                np.cos(theta),
            ]))
    return dirs


def cmd_trace_cone(scn: Scenario, out_dir, threads=1):
    """Sample the past light cone of the observer at configured instants."""
    chart = scn.build_chart()
    curve = scn.build_observer(chart)
    frames = scn.build_frames(chart, curve)
    taus = scn.get("cone.tau_s", [0.0], kind=list)
    radii = scn.get("cone.radii_m", [1.0], kind=list)
    n_polar = scn.get("cone.n_polar", 4, kind=int)
    n_azimuth = scn.get("cone.n_azimuth", 8, kind=int)
    dirs = _direction_grid(n_polar, n_azimuth)

    jobs = [(tau, r, d) for tau in taus for r in radii for d in dirs]

    def run(job):
        tau, r, d = job
        x = r * d
        k = sp.cone_vector(frames, tau, x)
        q = Event(chart.name, curve.position(tau))
        sol = integrate_geodesic(chart, GeodesicIVP(q, k), 1.0)
        reached = 0 if sol.clipped else 1
        s_end = sol.s1
        pos, vel = sol.position(s_end), sol.velocity(s_end)
        g = chart.metric(pos)
        residual = abs(float(vel @ g @ vel)) / max(r * r, 1e-30)
        return (tau, *x, *pos, reached, residual)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run, jobs))
    else:
        rows = [run(j) for j in jobs]

    header = ["tau_s", "x1_m", "x2_m", "x3_m", "k0_m", "k1", "k2", "k3",
              "reach_flag", "lightlike_residual"]
    _write_csv(Path(out_dir) / "cone.csv", header, rows)
    return ["cone.csv"], {"rows": len(rows)}


def _read_targets(path):
    events = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line or line.startswith("k0"):
                    continue
                parts = [p for p in line.replace(",", " ").split() if p]
                if len(parts) != 4:
                    raise ConfigError(f"target needs 4 coordinates, got {raw.strip()!r}",
                                      line=lineno)
                events.append(np.array([float(p) for p in parts]))
    except OSError as exc:
        raise ConfigError(f"cannot read targets file {path}: {exc}") from exc
    return events


def cmd_invert(scn: Scenario, targets_path, out_dir, threads=1):
    """Invert the observer map for every target event in the input file."""
    chart = scn.build_chart()
    curve = scn.build_observer(chart)
    frames = scn.build_frames(chart, curve)
    search = scn.build_search(curve)
    targets = _read_targets(targets_path)

    def run(tgt):
        res = sp.invert_observer_map(chart, frames, Event(chart.name, tgt), search)
        rows = []
        for p, resid, cond, reg in zip(res.preimages, res.residuals, res.conds, res.regular):
            rows.append((*tgt, p.tau, *p.x, resid, cond, int(reg)))
        return rows, len(res) == 0

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run, targets))
    else:
        outcomes = [run(t) for t in targets]

    rows = [row for out, _ in outcomes for row in out]
    misses = sum(1 for _, empty in outcomes if empty)
    header = ["k0_m", "k1", "k2", "k3", "tau_s", "x1_m", "x2_m", "x3_m",
              "residual", "cond", "regular"]
    _write_csv(Path(out_dir) / "preimages.csv", header, rows)
    return ["preimages.csv"], {"targets": len(targets), "rows": len(rows),
                               "targets_without_preimage": misses}


def _build_worldline(scn: Scenario, chart, frames):
    kind = scn.get("observe.kind", "inertial", kind=str)
    if kind == "inertial":
        q0 = np.array(scn.get("observe.q0_m", kind=list))
        w = np.array(scn.get("observe.w_m_per_s", [0, 0, 0], kind=list))
        u0 = np.concatenate([[chart.c], w])
        lo, hi = frames.curve.interval
        return make_inertial_observer(chart, Event(chart.name, q0), u0,
                                      (lo - 1.0, hi + 1.0))
    if kind == "comoving":
        x = np.array(scn.get("observe.x_m", kind=list))
        return sp.comoving_worldline(chart, frames, x)
    raise ConfigError(f"unknown observed worldline kind {kind!r}")


def cmd_observe(scn: Scenario, out_dir, threads=1):
    """Track an observed worldline: relative position, velocity, acceleration."""
    chart = scn.build_chart()
    curve = scn.build_observer(chart)
    frames = scn.build_frames(chart, curve)
    search = scn.build_search(curve)
    worldline = _build_worldline(scn, chart, frames)
    s_lo = scn.get("observe.s_min_s", 0.0)
    s_hi = scn.get("observe.s_max_s", 1.0)
    n = scn.get("observe.n_samples", 11, kind=int)
    samples = sp.observe_curve(chart, frames, worldline, np.linspace(s_lo, s_hi, n), search)

    rows = [
        (smp.s, smp.tau, *smp.x, smp.tau_dot, *smp.v, *smp.dv_dtau,
         smp.character, int(smp.not_an_observer), int(smp.ambiguous))
        for smp in samples
    ]
    header = ["s_s", "tau_s", "x1_m", "x2_m", "x3_m", "tau_dot",
              "v1_m_per_s", "v2_m_per_s", "v3_m_per_s",
              "a1_m_per_s2", "a2_m_per_s2", "a3_m_per_s2",
              "character", "not_an_observer", "ambiguous"]
    _write_csv(Path(out_dir) / "observed.csv", header, rows)
    truncated = len(samples) < n
    return ["observed.csv"], {"samples": len(samples), "branch_lost": int(truncated)}


def run_limit_scenario(scn: Scenario, c):
    """One Newtonian-limit measurement at a given speed of light.

    Rebuilds the whole splitting with the scenario's spacetime at speed c
    and observes the configured worldline; returns samples paired with
    their force breakdowns (force-free observed motion).
    """
    values = dict(scn.values)
    values["spacetime.c_m_per_s"] = repr(float(c))
    scn_c = Scenario(values=values, source_text=scn.source_text)
    chart = scn_c.build_chart()
    curve = scn_c.build_observer(chart)
    frames = scn_c.build_frames(chart, curve)
    search = scn_c.build_search(curve)
    worldline = _build_worldline(scn_c, chart, frames)
    s_lo = scn_c.get("observe.s_min_s", 0.0)
    s_hi = scn_c.get("observe.s_max_s", 1.0)
    n = scn_c.get("observe.n_samples", 5, kind=int)
    mass = scn_c.get("mass_kg", 1.0)
    samples = sp.observe_curve(chart, frames, worldline,
                               np.linspace(s_lo, s_hi, n), search)
    breakdowns = []
    for smp in samples:
        if smp.not_an_observer or not np.all(np.isfinite(smp.dv_dtau)):
            breakdowns.append(None)
            continue
        breakdowns.append(sp.relative_force(mass, chart, frames, smp, np.zeros(3)))
    return samples, breakdowns


def cmd_newton_limit(scn: Scenario, c_values, out_dir, threads=1):
    """Sweep c and report clock-rate and force residual scaling."""
    report = nl.newtonian_limit_report(
        lambda c: run_limit_scenario(scn, c), c_values,
        scenario_id=scn.get("spacetime.name", kind=str),
        m=scn.get("mass_kg", 1.0),
    )
    rows = [
        (row.c, row.max_tau_dot_dev, row.max_pseudo_force,
         row.tau_dot_series_residual, row.force_series_residual,
         row.first_order_max)
        for row in report.rows
    ]
    header = ["c_m_per_s", "max_tau_dot_dev", "max_pseudo_force",
              "tau_dot_series_residual", "force_series_residual",
              "first_order_max"]
    _write_csv(Path(out_dir) / "limit_residuals.csv", header, rows)

    bound = scn.get("newton.first_order_bound", 0.0)
    lines = [
        f"scenario_id = {report.scenario_id}",
        f"tau_dot_slope = {_fmt(report.tau_dot_slope)}",
        f"force_slope = {_fmt(report.force_slope)}",
        f"pseudo_force_slope = {_fmt(report.pseudo_force_slope)}",
        f"newton_law_residual = {_fmt(report.newton_law_residual)}",
        f"below_noise = {int(report.below_noise)}",
    ]
    if bound > 0.0:
        worst = max(row.first_order_max for row in report.rows)
        lines.append(f"first_order_bound = {_fmt(bound)}")
        lines.append(f"first_order_max = {_fmt(worst)}")
        lines.append(f"first_order_bound_satisfied = {int(worst <= bound)}")
    (Path(out_dir) / "limit_report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return ["limit_residuals.csv", "limit_report.txt"], {"c_values": len(rows)}


def _validate_checks(scn: Scenario, rng):
    """Yield (name, measured, bound) for every invariant check."""
    chart = scn.build_chart()
    curve = scn.build_observer(chart)
    frames = scn.build_frames(chart, curve)
    lo, hi = curve.interval
    taus = np.linspace(lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo), 7)

    # frame admissibility at sampled instants
    worst = 0.0
    ok = True
    for tau in taus:
        pos = curve.position(tau)
        g = metric_at(chart, pos)
        m = frames.matrix(tau)
        worst = max(worst, float(np.max(np.abs(gram_matrix(g, m) - ETA))))
        ok = ok and validate_frame_of_reference(
            g, curve.velocity(tau), chart.reference_frame(pos), m)
    yield "frame_gram_eta", worst, scn.get("tol.frame_gram", 1e-8)
    yield "frame_admissible", 0.0 if ok else 1.0, 0.5

    # geodesic norm conservation on random cone rays
    drift = 0.0
    for _ in range(5):
        tau = rng.uniform(taus[0], taus[-1])
        x = rng.uniform(-2.0, 2.0, size=3)
        if np.linalg.norm(x) < 0.1:
            x = np.array([1.0, 0.5, 0.2])
        k = sp.cone_vector(frames, tau, x)
        q = Event(chart.name, curve.position(tau))
        sol = integrate_geodesic(chart, GeodesicIVP(q, k), 1.0)
        if sol.clipped:
            continue
        g0 = chart.metric(sol.position(0.0))
        n0 = float(sol.velocity(0.0) @ g0 @ sol.velocity(0.0))
        for s in np.linspace(0, sol.s1, 9):
            gs = chart.metric(sol.position(s))
            ns = float(sol.velocity(s) @ gs @ sol.velocity(s))
            drift = max(drift, abs(ns - n0) / (1.0 + abs(n0)))
    yield "geodesic_norm_drift", drift, scn.get("tol.norm_drift", 1e-9)

    # Fermi-Walker frame Gram drift over the interval
    gram_drift = 0.0
    for tau in taus:
        g = metric_at(chart, curve.position(tau))
        gram_drift = max(gram_drift,
                         float(np.max(np.abs(gram_matrix(g, frames.matrix(tau)) - ETA))))
    yield "fw_gram_drift", gram_drift, scn.get("tol.fw_gram", 1e-8)

    # Jacobi pairing affinity on a random ray
    from .geodesics import integrate_jacobi

    tau = float(taus[len(taus) // 2])
    k = sp.cone_vector(frames, tau, np.array([1.2, -0.4, 0.8]))
    q = Event(chart.name, curve.position(tau))
    sol = integrate_geodesic(chart, GeodesicIVP(q, k), 1.0)
    j0, dj0 = rng.normal(size=4), rng.normal(size=4)
    jac = integrate_jacobi(chart, sol, j0, dj0)
    g0 = metric_at(chart, q.coords)
    a = float(dj0 @ g0 @ k)
    b = float(j0 @ g0 @ k)
    res = 0.0
    for s in np.linspace(0, sol.s1, 9):
        gs = chart.metric(sol.position(s))
        res = max(res, abs(float(jac.value(s) @ gs @ sol.velocity(s)) - (a * s + b)))
    yield "jacobi_pairing_affinity", res, scn.get("tol.jacobi_affinity", 1e-7)

    if chart.name == "schwarzschild":
        radius = chart.params["R"]
        rs = np.linspace(1.5 * radius, 12.0 * radius, 5)
        ths = np.linspace(0.3, np.pi - 0.3, 4)
        ricci = 0.0
        gam_dev = 0.0
        pts = [(r, th) for r in rs for th in ths]
        for r, th in pts[:20]:
            coords = np.array([0.0, r, th, 0.4])
            ricci = max(ricci, float(np.max(np.abs(riemann_ricci_at(chart, coords).ricci))))
            gam_dev = max(gam_dev, float(np.max(np.abs(
                _fd_christoffels(chart, coords, 1e-5) - chart.christoffels(coords)))))
        yield "schwarzschild_ricci_flat", ricci, scn.get("tol.ricci", 1e-5)
        yield "christoffel_fd_vs_analytic", gam_dev, scn.get("tol.christoffel_fd", 1e-6)


def cmd_validate(scn: Scenario, out_dir, seed=0):
    """Run the invariant suite; nonzero exit iff any check fails."""
    rng = np.random.default_rng(seed)
    lines = []
    failed = 0
    for name, measured, bound in _validate_checks(scn, rng):
        ok = measured <= bound
        failed += 0 if ok else 1
        lines.append(f"{name}: measured={_fmt(measured)} bound={_fmt(bound)} "
                     f"{'PASS' if ok else 'FAIL'}")
    text = "\n".join(lines) + "\n"
    (Path(out_dir) / "validate.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return ["validate.txt"], {"checks_failed": failed}, failed == 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lightcone",
        description="Observer splitting of relativistic spacetimes: "
                    "cone tracing, map inversion, relative motion, Newtonian limits.",
    )
    parser.add_argument("--scenario", required=True, help="scenario file path")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--tol-override", action="append", default=[],
                        metavar="KEY=VAL", help="override a tol.* setting")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for random invariant sampling")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("trace-cone", help="sample past light cones")
    p_inv = sub.add_parser("invert", help="invert the observer map for target events")
    p_inv.add_argument("--targets", required=True, help="file of events, 4 columns")
    sub.add_parser("observe", help="track an observed worldline")
    p_nl = sub.add_parser("newton-limit", help="sweep c and fit residual scaling")
    p_nl.add_argument("--c-list", required=True,
                      help="comma-separated speeds of light to sweep")
    sub.add_parser("validate", help="run the invariant suite")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.monotonic()
    try:
        scn = apply_overrides(load_scenario(args.scenario), args.tol_override)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "trace-cone":
            outputs, extra = cmd_trace_cone(scn, out_dir, args.threads)
        elif args.command == "invert":
            outputs, extra = cmd_invert(scn, args.targets, out_dir, args.threads)
        elif args.command == "observe":
            outputs, extra = cmd_observe(scn, out_dir, args.threads)
        elif args.command == "newton-limit":
            c_values = [float(p) for p in args.c_list.split(",")]
            outputs, extra = cmd_newton_limit(scn, c_values, out_dir, args.threads)
        elif args.command == "validate":
            outputs, extra, ok = cmd_validate(scn, out_dir, args.seed)
            _write_manifest(out_dir, scn, args.command, outputs, started, extra)
            return 0 if ok else 1
        else:  # pragma: no cover
            parser.error(f"unknown command {args.command}")
        _write_manifest(out_dir, scn, args.command, outputs, started, extra)
        return 0
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except LightconeError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
