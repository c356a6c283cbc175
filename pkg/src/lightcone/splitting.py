"""Static and kinematic observer mappings and relative kinematics.

The observer mapping sends observer coordinates (c*tau, x) to the
spacetime event seen in direction x at proper time tau: the endpoint of
the past-pointing lightlike geodesic with initial vector
-|x| X_0 + x^a X_a.  This module computes the map, its differential
through Jacobi fields, a multistart damped-Newton inverse, the tracked
relative motion of observed worldlines, the pulled-back metric, and the
relative-force decomposition into actual and pseudo parts.

Observer coordinates carry x^0 = c*tau internally; reports expose tau in
seconds.  The coordinate origin x = 0 (the observer itself) is excluded.
"""

import math
from dataclasses import dataclass, replace
from typing import List, Optional

import numpy as np

from .charts import Chart, metric_at
from .errors import (
    CriticalPointError,
    IllPosedForceError,
    InvalidInputError,
    LightconeError,
    SuperluminalError,
    UnreachableDirectionError,
)
from .geodesics import REL_TOL, ABS_TOL, integrate_batch
from .lorentz import Event, Frame4, CausalCharacter, causal_character, projectors
from .observers import FrameField


@dataclass(frozen=True)
class ObservedEvent:
    """Observer coordinates (tau, x) of a seen event; x = 0 is excluded."""

    tau: float
    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.shape != (3,) or not np.all(np.isfinite(x)):
            raise InvalidInputError("observed position must be 3 finite reals")
        if np.max(np.abs(x)) == 0.0:
            raise InvalidInputError("observed position x = 0 is excluded (observer's own point)")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "tau", float(self.tau))


@dataclass(frozen=True)
class InversionResult:
    preimages: List[ObservedEvent]
    residuals: np.ndarray
    conds: np.ndarray
    regular: np.ndarray
    n_starts: int
    n_converged: int
    origin_excluded: bool = False

    def __len__(self):
        return len(self.preimages)


@dataclass(frozen=True)
class RelativeMotionSample:
    s: float
    tau: float
    x: np.ndarray
    tau_dot: float
    v: np.ndarray         # dx/dtau
    dv_dtau: np.ndarray
    tau_ddot: float       # d^2 tau / ds^2 along the worldline parameter
    character: str
    not_an_observer: bool = False
    ambiguous: bool = False


@dataclass(frozen=True)
class ForceBreakdown:
    """Relative force split into the actual force and the four pseudo terms."""

    total: np.ndarray
    actual_part: np.ndarray
    pseudo_time_time: np.ndarray   # -m c^2 Ups^c_00
    pseudo_clock: np.ndarray       # -m (tau''/tau'^2) v^c
    pseudo_mixed: np.ndarray       # -2 m c Ups^c_0a v^a
    pseudo_quadratic: np.ndarray   # -m Ups^c_ab v^a v^b

    @property
    def pseudo_parts(self):
        return (self.pseudo_time_time, self.pseudo_clock,
                self.pseudo_mixed, self.pseudo_quadratic)


@dataclass(frozen=True)
class MultistartConfig:
    """Start grid and Newton controls for observer-map inversion."""

    tau_range: tuple
    x_halfwidth: float
    x_center: tuple = (0.0, 0.0, 0.0)
    n_tau: int = 9
    n_x: int = 9
    top_k: int = 16
    max_iter: int = 50
    inv_tol: float = 1e-10
    merge_tol: float = 1e-6
    cond_max: float = 1e8


# -- map evaluation ----------------------------------------------------------

def cone_vector(frames: FrameField, tau, x):
    """Past-lightlike initial vector -|x| X_0 + x^a X_a in chart components."""
    x = np.asarray(x, dtype=float)
    m = frames.matrix(tau)
    return m @ np.concatenate([[-np.linalg.norm(x)], x])


def static_observer_map(chart: Chart, frame: Frame4, x) -> Event:
    """World event seen in direction x by the frozen frame at one event."""
    x = np.asarray(x, dtype=float)
    if np.max(np.abs(x)) == 0.0:
        raise InvalidInputError("x = 0 excluded from the observer mapping domain")
    k = frame.matrix @ np.concatenate([[-np.linalg.norm(x)], x])
    from .geodesics import exp_map
    from .errors import NotInExpDomainError

    try:
        return exp_map(chart, frame.base, k)
    except NotInExpDomainError as exc:
        raise UnreachableDirectionError(str(exc)) from exc


def static_distance(g, x0_col, k, kprime):
    """Spatial distance between two seen directions at one event.

    Orthogonally projects k - k' away from the observer vector and takes
    the (positive definite) spatial norm.  Equals |x - x'| in the
    observer coordinates induced by any frame completing x0_col.
    """
    _, p_perp = projectors(g, np.asarray(x0_col, dtype=float))
    d = p_perp @ (np.asarray(k, dtype=float) - np.asarray(kprime, dtype=float))
    q = float(d @ np.asarray(g) @ d)
    return math.sqrt(max(0.0, -q))


def _map_states(frames: FrameField, points, with_jacobian):
    """Initial batch states for map (width 8) or map+differential (width 40)."""
    c = frames.curve.c
    n = len(points)
    width = 40 if with_jacobian else 8
    y0 = np.zeros((n, width))
    for i, (tau, x) in enumerate(points):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x)
        m = frames.matrix(tau)
        q = frames.curve.position(tau)
        k = m @ np.concatenate([[-r], x])
        y0[i, 0:4] = q
        y0[i, 4:8] = k
        if with_jacobian:
            # temporal column: J(0) = gamma'/c, W(0) from the frame's
            # covariant derivatives; spatial columns: J(0)=0, W(0) per
            # the light-cone chart directions.
            d = frames.cov_deriv(tau)
            y0[i, 8:12] = m[:, 0]
            y0[i, 12:16] = (d @ np.concatenate([[-r], x])) / c
            xhat = x / r
            for a in range(3):
                w0 = m @ np.concatenate([[-xhat[a]], np.eye(3)[a]])
                base = 16 + 8 * a
                y0[i, base + 4:base + 8] = w0
    return y0


def _eval_batch(chart, frames, points, with_jacobian, rel_tol=REL_TOL, abs_tol=ABS_TOL):
    """Map (and optionally Jacobian) for many observer-coordinate points.

    Returns (events (n,4), jacobians (n,4,4) or None).  Jacobian columns
    are derivatives with respect to (c*tau, x^1, x^2, x^3).
    """
    y0 = _map_states(frames, points, with_jacobian)
    interp, _ = integrate_batch(chart, y0, n_jac=4 if with_jacobian else 0,
                                s_end=1.0, rel_tol=rel_tol, abs_tol=abs_tol)
    out = interp(1.0)
    events = out[:, 0:4]
    if not with_jacobian:
        return events, None
    jac = np.empty((len(points), 4, 4))
    jac[:, :, 0] = out[:, 8:12]
    for a in range(3):
        base = 16 + 8 * a
        jac[:, :, a + 1] = out[:, base:base + 4]
    return events, jac


def kinematic_observer_map(chart: Chart, frames: FrameField, p: ObservedEvent,
                           rel_tol=REL_TOL, abs_tol=ABS_TOL) -> Event:
    """Spacetime event seen at observer coordinates (tau, x)."""
    from .geodesics import exp_map
    from .errors import NotInExpDomainError

    k = cone_vector(frames, p.tau, p.x)
    try:
        return exp_map(chart, frames.curve.event(p.tau), k, rel_tol, abs_tol)
    except NotInExpDomainError as exc:
        raise UnreachableDirectionError(str(exc)) from exc


def observer_map_jacobian(chart: Chart, frames: FrameField, p: ObservedEvent,
                          rel_tol=REL_TOL, abs_tol=ABS_TOL) -> np.ndarray:
    """Differential of the kinematic map at p, columns d phi / d(c tau, x^a).

    Each column is the endpoint value of a Jacobi field along the seen
    light ray; the temporal column carries the frame's covariant
    derivatives in its initial data, the spatial ones the light-cone
    chart directions.
    """
    _, jac = _eval_batch(chart, frames, [(p.tau, p.x)], True, rel_tol, abs_tol)
    return jac[0]


# -- inversion ---------------------------------------------------------------

def _start_grid(cfg: MultistartConfig):
    taus = np.linspace(cfg.tau_range[0], cfg.tau_range[1], cfg.n_tau)
    axes = [np.linspace(c - cfg.x_halfwidth, c + cfg.x_halfwidth, cfg.n_x)
            for c in cfg.x_center]
    pts = []
    for tau in taus:
        for x1 in axes[0]:
            for x2 in axes[1]:
                for x3 in axes[2]:
                    x = np.array([x1, x2, x3])
                    if np.linalg.norm(x) < 1e-9 * max(1.0, cfg.x_halfwidth):
                        continue
                    pts.append((tau, x))
    return pts


def _tau_bounds(frames):
    lo, hi = frames.interval
    pad = 1e-9 * (hi - lo)
    return lo + pad, hi - pad


def _newton_polish(chart, frames, targets, states, cfg,
                   rel_tol=REL_TOL, abs_tol=ABS_TOL):
    """Damped Newton on a batch of (target, state) pairs.

    states: (m, 4) rows (tau, x1, x2, x3).  Returns (states, residual_norm,
    converged mask); members that leave the admissible region or fail to
    reduce the residual are dropped from the active set.
    """
    c = frames.curve.c
    tau_lo, tau_hi = _tau_bounds(frames)
    m = len(states)
    states = np.array(states, dtype=float)
    targets = np.asarray(targets, dtype=float)
    scale = 1.0 + np.max(np.abs(targets), axis=1)
    guard = 1e-13 * max(1.0, float(np.max(scale)))

    def admissible(st):
        return (
            (st[:, 0] >= tau_lo) & (st[:, 0] <= tau_hi)
            & (np.linalg.norm(st[:, 1:], axis=1) > guard)
        )

    def forward(st, idx):
        pts = [(st[i, 0], st[i, 1:]) for i in range(len(st))]
        ev, _ = _eval_batch(chart, frames, pts, False, rel_tol, abs_tol)
        return ev - targets[idx]

    active = np.flatnonzero(admissible(states))
    resid = np.full((m, 4), np.inf)
    if len(active):
        resid[active] = forward(states[active], active)
    rnorm = np.linalg.norm(resid, axis=1)
    converged = rnorm <= cfg.inv_tol * scale
    active = np.array([i for i in active if not converged[i]])

    for _ in range(cfg.max_iter):
        if len(active) == 0:
            break
        pts = [(states[i, 0], states[i, 1:]) for i in active]
        _, jacs = _eval_batch(chart, frames, pts, True, rel_tol, abs_tol)
        # solve J dxi = -r in (c tau, x) variables
        ok = np.abs(np.linalg.det(jacs)) > 1e-300
        steps = np.zeros((len(active), 4))
        if np.any(ok):
            steps[ok] = np.linalg.solve(jacs[ok], -resid[active][ok][:, :, None])[:, :, 0]
        steps[:, 0] /= c  # first slot of the state is tau, not c*tau
        steps[~ok] = 0.0

        lam = np.ones(len(active))
        improved = np.zeros(len(active), dtype=bool)
        trial_states = states[active].copy()
        trial_resid = resid[active].copy()
        for _halve in range(25):
            todo = ~improved & (np.abs(lam) > 1e-12) & ok
            if not np.any(todo):
                break
            cand = states[active][todo] + lam[todo, None] * steps[todo]
            cand_ok = admissible(cand)
            rows = np.flatnonzero(todo)
            if np.any(cand_ok):
                sub = rows[cand_ok]
                rr = forward(cand[cand_ok], active[sub])
                better = np.linalg.norm(rr, axis=1) < np.linalg.norm(resid[active][sub], axis=1)
                good = sub[better]
                trial_states[good] = cand[cand_ok][better]
                trial_resid[good] = rr[better]
                improved[good] = True
            lam[~improved] *= 0.5

        if not np.any(improved):
            break
        keep = np.flatnonzero(improved)
        states[active[keep]] = trial_states[keep]
        resid[active[keep]] = trial_resid[keep]
        rnorm = np.linalg.norm(resid, axis=1)
        converged = rnorm <= cfg.inv_tol * scale
        active = active[keep]
        active = np.array([i for i in active if not converged[i]], dtype=int)

    return states, rnorm, converged


def _near_worldline(frames, target, tol):
    curve = frames.curve
    lo, hi = curve.interval
    taus = np.linspace(lo, hi, 101)
    d = min(np.max(np.abs(curve.position(t) - target)) for t in taus)
    return d < tol


def invert_observer_map(chart: Chart, frames: FrameField, target: Event,
                        search: MultistartConfig,
                        rel_tol=REL_TOL, abs_tol=ABS_TOL) -> InversionResult:
    """All observer-coordinate preimages of a spacetime event in a box.

    Damped Newton from a grid of starts (pruned to the most promising by
    initial forward residual), converged roots deduplicated and sorted by
    coordinates so the outcome does not depend on start order.  An empty
    result is diagnostic, not an error: the event may be outside the seen
    region, or on the worldline itself (origin excluded).
    """
    starts = _start_grid(search)
    tgt = target.coords
    n_starts = len(starts)

    ev, _ = _eval_batch(chart, frames, starts, False, rel_tol, abs_tol)
    score = np.linalg.norm(ev - tgt[None, :], axis=1)
    order = np.argsort(score, kind="stable")[: search.top_k]
    seeds = np.array([[starts[i][0], *starts[i][1]] for i in order])

    return _finish_inversion(chart, frames, tgt, seeds, search, n_starts,
                             rel_tol, abs_tol)


def invert_many(chart: Chart, frames: FrameField, targets, search: MultistartConfig,
                seeds_per_target=4, chunk=512,
                rel_tol=REL_TOL, abs_tol=ABS_TOL) -> List[InversionResult]:
    """Invert the observer map for many targets sharing one start grid.

    The start grid is mapped forward once; each target keeps its best
    seeds and all Newton iterations run as chunked batches.  Results are
    identical in content to per-target invert_observer_map with top_k =
    seeds_per_target.
    """
    targets = np.asarray(targets, dtype=float)
    starts = _start_grid(search)
    ev, _ = _eval_batch(chart, frames, starts, False, rel_tol, abs_tol)
    start_arr = np.array([[s[0], *s[1]] for s in starts])

    results: List[Optional[InversionResult]] = [None] * len(targets)
    cfg = replace(search, top_k=seeds_per_target)
    for base in range(0, len(targets), chunk):
        tgt_chunk = targets[base:base + chunk]
        # per-target seed selection by forward residual
        d = np.linalg.norm(ev[None, :, :] - tgt_chunk[:, None, :], axis=2)
        picks = np.argsort(d, axis=1, kind="stable")[:, :seeds_per_target]
        flat_states = start_arr[picks.ravel()]
        flat_targets = np.repeat(tgt_chunk, seeds_per_target, axis=0)
        states, rnorm, converged = _newton_polish(
            chart, frames, flat_targets, flat_states, cfg, rel_tol, abs_tol
        )
        for i in range(len(tgt_chunk)):
            rows = slice(i * seeds_per_target, (i + 1) * seeds_per_target)
            seeds = states[rows][converged[rows]]
            res = _collect_roots(chart, frames, tgt_chunk[i], seeds,
                                 rnorm[rows][converged[rows]], cfg, len(starts),
                                 rel_tol, abs_tol)
            results[base + i] = res
    return results


def _collect_roots(chart, frames, tgt, roots, rres, search, n_starts, rel_tol, abs_tol):
    """Dedup, origin-filter and grade already-converged roots."""
    origin = False
    roots = np.asarray(roots, dtype=float).reshape(-1, 4)
    rres = np.asarray(rres, dtype=float)
    if len(roots):
        at_origin = np.linalg.norm(roots[:, 1:], axis=1) <= search.merge_tol
        origin = bool(np.any(at_origin))
        roots, rres = roots[~at_origin], rres[~at_origin]
    if len(roots) == 0:
        origin = origin or _near_worldline(frames, tgt, 1e-6 * (1.0 + np.max(np.abs(tgt))))
        return InversionResult([], np.empty(0), np.empty(0),
                               np.empty(0, dtype=bool), n_starts, 0,
                               origin_excluded=origin)
    order = np.lexsort((roots[:, 3], roots[:, 2], roots[:, 1], roots[:, 0]))
    roots, rres = roots[order], rres[order]
    keep, keep_res = [], []
    for row, res in zip(roots, rres):
        if any(np.max(np.abs(row - k)) <= search.merge_tol for k in keep):
            continue
        keep.append(row)
        keep_res.append(res)
    pts = [(row[0], row[1:]) for row in keep]
    _, jacs = _eval_batch(chart, frames, pts, True, rel_tol, abs_tol)
    conds = np.array([np.linalg.cond(j) for j in jacs])
    regular = conds < search.cond_max
    preimages = [ObservedEvent(row[0], row[1:]) for row in keep]
    return InversionResult(preimages, np.asarray(keep_res), conds, regular,
                           n_starts, len(keep), origin_excluded=origin)


def _finish_inversion(chart, frames, tgt, seeds, search, n_starts, rel_tol, abs_tol):
    m = len(seeds)
    states, rnorm, converged = _newton_polish(
        chart, frames, np.tile(tgt, (m, 1)), seeds, search, rel_tol, abs_tol
    )
    return _collect_roots(chart, frames, tgt, states[converged], rnorm[converged],
                          search, n_starts, rel_tol, abs_tol)


# -- relative motion ---------------------------------------------------------

class MappedCurve:
    """Forward image of a fixed observer-coordinate point: s -> phi(c s, x).

    position and velocity are both computed through the map machinery;
    the tangent is the push-forward of d/d tau, whose causal character
    decides whether a physical observer can sit at x at all.
    """

    def __init__(self, chart, frames, x, rel_tol=REL_TOL, abs_tol=ABS_TOL):
        self.chart = chart
        self.frames = frames
        self.x = np.asarray(x, dtype=float)
        self.interval = frames.interval
        self._tols = (rel_tol, abs_tol)

    def _both(self, s):
        ev, jac = _eval_batch(self.chart, self.frames, [(s, self.x)], True, *self._tols)
        return ev[0], self.chart.c * jac[0][:, 0]  # phi_* d/dtau = c * column 0

    def position(self, s):
        ev, _ = _eval_batch(self.chart, self.frames, [(s, self.x)], False, *self._tols)
        return ev[0]

    def velocity(self, s):
        return self._both(s)[1]


def comoving_worldline(chart: Chart, frames: FrameField, x) -> MappedCurve:
    return MappedCurve(chart, frames, x)


def _warm_invert(chart, frames, target, seed, cfg, rel_tol, abs_tol):
    """Single-start Newton from a known nearby preimage."""
    states, rnorm, conv = _newton_polish(
        chart, frames, target[None, :], seed[None, :], cfg, rel_tol, abs_tol
    )
    if conv[0]:
        return states[0]
    return None


def observe_curve(chart: Chart, frames: FrameField, worldline, s_samples,
                  search: MultistartConfig, stencil_h=None,
                  rel_tol=REL_TOL, abs_tol=ABS_TOL) -> List[RelativeMotionSample]:
    """Track a worldline through the observer's eyes.

    Inverts the observer map at every sample of the worldline parameter,
    follows the preimage branch that stays closest to the previous sample
    (ties within merge_tol are flagged ambiguous, never silently picked:
    lensing makes multiple branches physical), and differentiates the
    tracked coordinates to relative velocity and acceleration.  Branch
    loss truncates the report rather than failing.

    tau' and dx/ds come from the inverse Jacobian applied to the
    worldline tangent; the second derivatives use a five-point stencil of
    half-width stencil_h on the tracked functions.
    """
    s_samples = np.asarray(s_samples, dtype=float)
    if stencil_h is None:
        span = s_samples[-1] - s_samples[0] if len(s_samples) > 1 else 1.0
        stencil_h = max(1e-4, 0.02 * span / max(1, len(s_samples) - 1) * 5)

    samples: List[RelativeMotionSample] = []
    prev = None
    for s in s_samples:
        target = np.asarray(worldline.position(s), dtype=float)
        ambiguous = False
        if prev is None:
            res = invert_observer_map(chart, frames, Event(chart.name, target), search,
                                      rel_tol, abs_tol)
            if len(res) == 0:
                break
            rows = np.array([[p.tau, *p.x] for p in res.preimages])
            ambiguous = len(res) > 1
            state = rows[0]
        else:
            state = _warm_invert(chart, frames, target, prev, search, rel_tol, abs_tol)
            if state is None:
                res = invert_observer_map(chart, frames, Event(chart.name, target), search,
                                          rel_tol, abs_tol)
                if len(res) == 0:
                    break
                rows = np.array([[p.tau, *p.x] for p in res.preimages])
                dists = np.max(np.abs(rows - prev), axis=1)
                best = np.argmin(dists)
                near = np.sum(dists <= dists[best] + search.merge_tol)
                ambiguous = near > 1
                state = rows[best]
        prev = state

        first = _first_derivatives(chart, frames, worldline, s, state, rel_tol, abs_tol)
        tau_dot, dx_ds, char = first
        v = dx_ds / tau_dot if tau_dot != 0.0 else np.full(3, np.nan)

        # stencil for second derivatives
        vs, tds = [], []
        offsets = (-2, -1, 1, 2)
        stencil_ok = True
        for k in offsets:
            sk = s + k * stencil_h
            tk = np.asarray(worldline.position(sk), dtype=float)
            stk = _warm_invert(chart, frames, tk, state, search, rel_tol, abs_tol)
            if stk is None:
                stencil_ok = False
                break
            td_k, dxds_k, _ = _first_derivatives(chart, frames, worldline, sk, stk,
                                                 rel_tol, abs_tol)
            tds.append(td_k)
            vs.append(dxds_k / td_k if td_k != 0.0 else np.full(3, np.nan))
        if stencil_ok and tau_dot != 0.0:
            w = np.array([1.0, -8.0, 8.0, -1.0]) / (12.0 * stencil_h)
            dv_ds = sum(wi * vi for wi, vi in zip(w, vs))
            tau_ddot = float(np.dot(w, tds))
            dv_dtau = dv_ds / tau_dot
        else:
            dv_dtau = np.full(3, np.nan)
            tau_ddot = float("nan")

        not_obs = char in (CausalCharacter.SPACELIKE, CausalCharacter.ZERO)
        if char is CausalCharacter.TIMELIKE and tau_dot <= 0.0:
            raise LightconeError(
                f"time consistency violated: tau'={tau_dot} for a timelike worldline"
            )
        samples.append(RelativeMotionSample(
            s=float(s), tau=float(state[0]), x=state[1:].copy(),
            tau_dot=float(tau_dot), v=v, dv_dtau=dv_dtau, tau_ddot=tau_ddot,
            character=char.value, not_an_observer=not_obs, ambiguous=ambiguous,
        ))
    return samples


def _first_derivatives(chart, frames, worldline, s, state, rel_tol, abs_tol):
    """(tau', dx/ds, causal character) at one tracked sample."""
    c = frames.curve.c
    p = ObservedEvent(state[0], state[1:])
    jac = observer_map_jacobian(chart, frames, p, rel_tol, abs_tol)
    lam = np.asarray(worldline.velocity(s), dtype=float)
    xi_dot = np.linalg.solve(jac, lam)  # d(c tau, x)/ds
    g = metric_at(chart, np.asarray(worldline.position(s), dtype=float))
    char = causal_character(g, lam, tol=1e-9 * max(1.0, float(np.max(np.abs(lam)))**2))
    return xi_dot[0] / c, xi_dot[1:], char


# -- pulled-back metric and forces --------------------------------------------

def pullback_metric(chart: Chart, frames: FrameField, p: ObservedEvent,
                    rel_tol=REL_TOL, abs_tol=ABS_TOL) -> np.ndarray:
    """Components of the pulled-back spacetime metric in observer coordinates."""
    pts = [(p.tau, p.x)]
    ev, jac = _eval_batch(chart, frames, pts, True, rel_tol, abs_tol)
    g = metric_at(chart, ev[0])
    j = jac[0]
    return j.T @ g @ j


def tau_dot(alpha, v, c) -> float:
    """Clock rate of the observed clock against the observer's clock.

    1/sqrt(alpha_00 + 2 alpha_0a v^a/c + alpha_ab v^a v^b / c^2); raises
    when the radicand is not positive (superluminal or degenerate data).
    """
    alpha = np.asarray(alpha, dtype=float)
    v = np.asarray(v, dtype=float)
    rad = (
        alpha[0, 0]
        + 2.0 * float(alpha[0, 1:] @ v) / c
        + float(v @ alpha[1:, 1:] @ v) / c**2
    )
    if rad <= 0.0:
        raise SuperluminalError(f"clock-rate radicand {rad:.3e} is not positive")
    return 1.0 / math.sqrt(rad)


def force_zero_component(alpha, v, c, inv_jacobian, f_spatial) -> float:
    """Time component of a force four-vector from orthogonality to the motion.

    Solves g(gamma', F') = 0 for F'^0 given the spatial chart components,
    using only observer-coordinate data: the pulled-back metric and the
    columns of the inverse map Jacobian.
    """
    alpha = np.asarray(alpha, dtype=float)
    w = np.asarray(inv_jacobian, dtype=float)
    f_spatial = np.asarray(f_spatial, dtype=float)
    v = np.asarray(v, dtype=float)
    u = alpha[0, :] + (v @ alpha[1:, :]) / c
    uw = u @ w
    if abs(uw[0]) < 1e-300:
        raise IllPosedForceError("zero-component reconstruction has vanishing denominator")
    return float(-(uw[1:] @ f_spatial) / uw[0])


def transformed_christoffels(chart: Chart, frames: FrameField, p: ObservedEvent,
                             method="jacobian", fd_step=1e-4,
                             rel_tol=REL_TOL, abs_tol=ABS_TOL) -> np.ndarray:
    """Connection coefficients of the spacetime metric in observer coordinates.

    method="jacobian" transforms the chart coefficients with the map
    Jacobian plus a finite-difference Hessian of the map; "pullback"
    differentiates the pulled-back metric directly.  Both differentiate in
    (x^0 = c*tau, x^a) with central step fd_step.
    """
    c = frames.curve.c
    base = np.array([c * p.tau, *p.x])

    def at(xi):
        return (xi[0] / c, xi[1:])

    if method == "pullback":
        alpha0 = pullback_metric(chart, frames, p, rel_tol, abs_tol)
        dal = np.empty((4, 4, 4))
        for l in range(4):
            h = np.zeros(4)
            h[l] = fd_step
            ap = pullback_metric(chart, frames, ObservedEvent(*at(base + h)), rel_tol, abs_tol)
            am = pullback_metric(chart, frames, ObservedEvent(*at(base - h)), rel_tol, abs_tol)
            dal[:, :, l] = (ap - am) / (2.0 * fd_step)
        try:
            ainv = np.linalg.inv(alpha0)
        except np.linalg.LinAlgError as exc:
            raise CriticalPointError("pulled-back metric is singular here") from exc
        term = dal + np.einsum("lji->lij", dal) - np.einsum("ijl->lij", dal)
        return 0.5 * np.einsum("cl,lij->cij", ainv, term)

    if method != "jacobian":
        raise InvalidInputError(f"unknown method {method!r}")

    ev, jac = _eval_batch(chart, frames, [(p.tau, p.x)], True, rel_tol, abs_tol)
    j = jac[0]
    det = np.linalg.det(j)
    if abs(det) < 1e-12:
        raise CriticalPointError("observer map is singular at this point")
    w = np.linalg.inv(j)
    gam = chart.christoffels(ev[0])
    hess = np.empty((4, 4, 4))  # hess[l, i, j] = d^2 kappa^l / dx^i dx^j
    for i in range(4):
        h = np.zeros(4)
        h[i] = fd_step
        _, jp = _eval_batch(chart, frames, [at(base + h)], True, rel_tol, abs_tol)
        _, jm = _eval_batch(chart, frames, [at(base - h)], True, rel_tol, abs_tol)
        hess[:, i, :] = (jp[0] - jm[0]) / (2.0 * fd_step)
    hess = 0.5 * (hess + hess.transpose(0, 2, 1))
    ups = np.einsum("cl,lmn,mi,nj->cij", w, gam, j, j) + np.einsum("cl,lij->cij", w, hess)
    return ups


def relative_force(m, chart: Chart, frames: FrameField, sample: RelativeMotionSample,
                   f_spatial, tau_ddot=None, method="jacobian",
                   rel_tol=REL_TOL, abs_tol=ABS_TOL) -> ForceBreakdown:
    """Decompose the relative force on an observed point mass.

    Combines the actual force (mapped to observer coordinates and scaled
    by the clock rate) with the four geometric pseudo-force terms built
    from the transformed connection, the clock-rate derivative and the
    relative velocity.  The parts sum to total by construction.
    """
    c = frames.curve.c
    p = ObservedEvent(sample.tau, sample.x)
    alpha = pullback_metric(chart, frames, p, rel_tol, abs_tol)
    jac = observer_map_jacobian(chart, frames, p, rel_tol, abs_tol)
    w = np.linalg.inv(jac)
    ups = transformed_christoffels(chart, frames, p, method, rel_tol=rel_tol, abs_tol=abs_tol)
    v = sample.v
    td = sample.tau_dot
    tdd = sample.tau_ddot if tau_ddot is None else float(tau_ddot)

    f_spatial = np.asarray(f_spatial, dtype=float)
    f0 = force_zero_component(alpha, v, c, w, f_spatial)
    f_full = np.concatenate([[f0], f_spatial])

    actual = (w[1:, :] @ f_full) / td**2
    pseudo_tt = -m * c**2 * ups[1:, 0, 0]
    pseudo_clock = -m * (tdd / td**2) * v
    pseudo_mixed = -2.0 * m * c * (ups[1:, 0, 1:] @ v)
    pseudo_quad = -m * np.einsum("cab,a,b->c", ups[1:, 1:, 1:], v, v)
    total = actual + pseudo_tt + pseudo_clock + pseudo_mixed + pseudo_quad
    return ForceBreakdown(total=total, actual_part=actual,
                          pseudo_time_time=pseudo_tt, pseudo_clock=pseudo_clock,
                          pseudo_mixed=pseudo_mixed, pseudo_quadratic=pseudo_quad)
