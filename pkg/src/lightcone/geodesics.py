"""Geodesics, parallel transport, Jacobi fields and the exponential map.

The integrator is scipy's embedded Runge-Kutta 5(4) pair with dense output
(solve_ivp, method="RK45"); defaults rel_tol=1e-10, abs_tol=1e-12.  Chart
exit terminates integration early and returns the maximal partial solution
flagged as clipped, so cone tracing can report per-ray reach.

A private batched entry point integrates many rays (optionally with their
Jacobi columns) as one stacked system; the public single-ray operations
are thin wrappers over the same right-hand sides.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .charts import Chart, riemann_ricci_at
from .errors import (
    EmptySolutionError,
    IntegrationError,
    InvalidInputError,
    NotInExpDomainError,
    OutOfChartError,
)
from .lorentz import Event

REL_TOL = 1e-10
ABS_TOL = 1e-12


@dataclass(frozen=True)
class GeodesicIVP:
    start: Event
    velocity: np.ndarray  # d kappa / d s components

    def __post_init__(self):
        v = np.asarray(self.velocity, dtype=float)
        if v.shape != (4,) or not np.all(np.isfinite(v)) or np.max(np.abs(v)) == 0.0:
            raise InvalidInputError("geodesic velocity must be 4 finite reals, not all zero")
        object.__setattr__(self, "velocity", v)


class DenseSolution:
    """Interpolable solution of one integrated system over [s0, s1].

    The parameter interval is oriented (s1 may be below s0 for backward
    integration); evaluation outside it raises.  `clipped` marks runs that
    were cut short by chart exit.
    """

    def __init__(self, interp, s0, s1, steps, clipped, n_state):
        self._interp = interp
        self.s0 = float(s0)
        self.s1 = float(s1)
        self.steps = int(steps)
        self.clipped = bool(clipped)
        self.n_state = int(n_state)

    def _check(self, s):
        lo, hi = sorted((self.s0, self.s1))
        if np.any(np.asarray(s) < lo - 1e-12) or np.any(np.asarray(s) > hi + 1e-12):
            raise InvalidInputError(f"parameter {s} outside solution interval [{lo}, {hi}]")

    def state(self, s):
        self._check(s)
        return self._interp(np.clip(s, *sorted((self.s0, self.s1))))


class GeodesicSolution(DenseSolution):
    def position(self, s):
        st = self.state(s)  # (n_state,) scalar s, (n_state, len(s)) array s
        return st[:4] if st.ndim == 1 else st[:4].T

    def velocity(self, s):
        st = self.state(s)
        return st[4:8] if st.ndim == 1 else st[4:8].T


class TransportSolution(DenseSolution):
    """Vector (or stacked vectors) carried along a stored path."""

    def __init__(self, interp, s0, s1, steps, clipped, n_state, along):
        super().__init__(interp, s0, s1, steps, clipped, n_state)
        self.along = along

    def vector(self, s):
        return self.state(s)[:4]


class JacobiSolution(DenseSolution):
    """Jacobi field J and its covariant derivative along a geodesic."""

    def __init__(self, interp, s0, s1, steps, clipped, along):
        super().__init__(interp, s0, s1, steps, clipped, 8)
        self.along = along

    def value(self, s):
        return self.state(s)[:4]

    def derivative(self, s):
        """Covariant derivative of J along the geodesic at s."""
        return self.state(s)[4:]


def _const_interp(y0):
    y0 = np.array(y0, dtype=float)

    def interp(s):
        s = np.asarray(s)
        if s.ndim == 0:
            return y0.copy()
        return np.tile(y0[:, None], (1, s.size))  # scipy layout: (n_state, ns)

    return interp


def _solve(chart, rhs, y0, s_end, rel_tol, abs_tol, events=None):
    if s_end == 0.0:
        return _const_interp(y0), 0.0, 0, False
    sol = solve_ivp(
        rhs,
        (0.0, s_end),
        np.asarray(y0, dtype=float),
        method="RK45",
        dense_output=True,
        rtol=rel_tol,
        atol=abs_tol,
        events=events,
    )
    if sol.status == -1:
        raise IntegrationError(f"integrator failed on {chart.name}: {sol.message}")
    clipped = sol.status == 1
    s1 = sol.t[-1]
    if clipped and abs(s1) <= 1e-14 * max(1.0, abs(s_end)):
        raise EmptySolutionError("trajectory leaves the chart domain immediately")
    return sol.sol, s1, len(sol.t) - 1, clipped


def _domain_event(chart):
    """Terminal event a hair inside the boundary.

    Chart boundaries are typically coordinate-singular (the metric blows
    up there), so integrating to the exact boundary stalls the stepper.
    Firing at a small margin keeps the clipped solution well-conditioned.
    """
    if chart.boundary_fn is None:
        return None
    margin = 1e-6 * max(1.0, abs(chart.params.get("R", 1.0)))

    def event(s, y):
        return chart.boundary_distance(y[:4]) - margin

    event.terminal = True
    event.direction = -1
    return event


def integrate_geodesic(chart: Chart, ivp: GeodesicIVP, s_end, rel_tol=REL_TOL,
                       abs_tol=ABS_TOL) -> GeodesicSolution:
    """Solve the autoparallel equation from the given initial data.

    Integrates kappa'' ^k + Gamma^k_ij kappa'^i kappa'^j = 0 up to s_end
    with adaptive step control.  If the trajectory exits the chart the
    partial solution up to the boundary is returned with clipped=True.
    """
    if ivp.start.chart_id != chart.name:
        raise InvalidInputError(f"event belongs to chart {ivp.start.chart_id!r}, not {chart.name!r}")
    if rel_tol <= 0 or abs_tol <= 0:
        raise InvalidInputError("tolerances must be positive")
    q0 = ivp.start.coords
    if not chart.contains(q0):
        raise OutOfChartError(f"start {q0} outside {chart.name} domain")
    bd = chart.boundary_distance(q0)
    if bd is not None and bd <= 1e-12 * max(1.0, abs(chart.params.get("R", 1.0))):
        raise EmptySolutionError("start point touches the chart boundary")

    if chart.flat:
        def rhs(s, y):
            return np.concatenate([y[4:], np.zeros(4)])
    else:
        def rhs(s, y):
            gam = chart.christoffels(y[:4])
            acc = -np.einsum("kij,i,j->k", gam, y[4:], y[4:])
            return np.concatenate([y[4:], acc])

    y0 = np.concatenate([q0, ivp.velocity])
    interp, s1, steps, clipped = _solve(chart, rhs, y0, s_end, rel_tol, abs_tol,
                                        events=_domain_event(chart))
    return GeodesicSolution(interp, 0.0, s1, steps, clipped, 8)


def exp_map(chart: Chart, q: Event, tangent, rel_tol=REL_TOL, abs_tol=ABS_TOL) -> Event:
    """Endpoint of the geodesic with initial velocity `tangent` at unit parameter."""
    sol = integrate_geodesic(chart, GeodesicIVP(q, tangent), 1.0, rel_tol, abs_tol)
    if sol.clipped:
        raise NotInExpDomainError(
            f"geodesic leaves {chart.name} at parameter {sol.s1:.6g} < 1"
        )
    return Event(chart.name, sol.position(1.0))


def parallel_transport(chart: Chart, along: GeodesicSolution, v0,
                       rel_tol=REL_TOL, abs_tol=ABS_TOL) -> TransportSolution:
    """Transport v0 along the stored path: v'^k + Gamma^k_ij kappa'^i v^j = 0.

    The path's stored velocity is reused instead of re-differentiating the
    position interpolant.
    """
    v0 = np.asarray(v0, dtype=float)
    if v0.shape != (4,) or not np.all(np.isfinite(v0)):
        raise InvalidInputError("transported vector must be 4 finite reals")

    if chart.flat:
        def rhs(s, v):
            return np.zeros(4)
    else:
        def rhs(s, v):
            state = along.state(s)
            gam = chart.christoffels(state[:4])
            return -np.einsum("kij,i,j->k", gam, state[4:8], v)

    interp, s1, steps, clipped = _solve(chart, rhs, v0, along.s1, rel_tol, abs_tol)
    return TransportSolution(interp, 0.0, s1, steps, clipped, 4, along)


def integrate_jacobi(chart: Chart, geodesic: GeodesicSolution, j0, dj0,
                     rel_tol=REL_TOL, abs_tol=ABS_TOL) -> JacobiSolution:
    """Solve the geodesic deviation equation along a stored geodesic.

    First-order system in (J, W) with W the covariant derivative of J:
        J'^k = W^k - Gamma^k_ij kappa'^i J^j
        W'^k = -Gamma^k_ij kappa'^i W^j - R^k_{l i j} J^i kappa'^j kappa'^l
    """
    j0 = np.asarray(j0, dtype=float)
    dj0 = np.asarray(dj0, dtype=float)

    if chart.flat:
        def rhs(s, y):
            return np.concatenate([y[4:], np.zeros(4)])
    else:
        def rhs(s, y):
            state = geodesic.state(s)
            kdot = state[4:8]
            curv = riemann_ricci_at(chart, state[:4])
            jj, ww = y[:4], y[4:]
            jdot = ww - np.einsum("kij,i,j->k", curv.gamma, kdot, jj)
            force = -np.einsum("klij,i,j,l->k", curv.riemann, jj, kdot, kdot)
            wdot = force - np.einsum("kij,i,j->k", curv.gamma, kdot, ww)
            return np.concatenate([jdot, wdot])

    y0 = np.concatenate([j0, dj0])
    interp, s1, steps, clipped = _solve(chart, rhs, y0, geodesic.s1, rel_tol, abs_tol)
    return JacobiSolution(interp, 0.0, s1, steps, clipped, geodesic)


def exp_differential(chart: Chart, q: Event, tangent, base_dir, fiber_dir,
                     rel_tol=REL_TOL, abs_tol=ABS_TOL) -> np.ndarray:
    """Differential of the exponential map as a Jacobi endpoint value.

    Returns J(1) for the Jacobi field along s -> exp(s*tangent) whose
    initial value is the base-point direction and whose initial covariant
    derivative is the fiber direction; linear in both.
    """
    exp_map(chart, q, tangent, rel_tol, abs_tol)  # validates reachability
    y0 = np.concatenate([
        q.coords, np.asarray(tangent, dtype=float),
        np.asarray(base_dir, dtype=float), np.asarray(fiber_dir, dtype=float),
    ])[None, :]
    interp, _ = integrate_batch(chart, y0, n_jac=1, s_end=1.0,
                                rel_tol=rel_tol, abs_tol=abs_tol)
    return interp(1.0)[0, 8:12]


@dataclass(frozen=True)
class ConjugateScan:
    """Conjugate parameter values found along one geodesic (best effort)."""

    values: tuple
    low_resolution: bool
    s_reached: float


def _orthogonal_triple(g, k):
    """Three independent directions orthogonal to k (pivot elimination)."""
    w = np.asarray(g) @ np.asarray(k, dtype=float)
    pivot = int(np.argmax(np.abs(w)))
    dirs = []
    for mu in range(4):
        if mu == pivot:
            continue
        v = np.zeros(4)
        v[mu] = 1.0
        v[pivot] = -w[mu] / w[pivot]
        dirs.append(v)
    return dirs


def detect_conjugate(chart: Chart, q: Event, tangent, s_max, grid_n,
                     rel_tol=REL_TOL, abs_tol=ABS_TOL) -> ConjugateScan:
    """Scan a geodesic for conjugate parameter values.

    Integrates three Jacobi fields vanishing at the start whose initial
    derivatives span the orthogonal complement of the initial velocity,
    together with a parallel-transported transversal vector.  Conjugate
    values show up as zeros of det([N, J^1, J^2, J^3]) / s^3: the
    normalization removes the trivial triple zero at the start, and the
    transported transversal keeps the determinant honest when the
    orthogonal complement is degenerate (lightlike rays).  Sign changes
    are refined by bisection on the dense output; the scan is a detector,
    not a proof, so an empty result only means none found at this
    resolution.
    """
    tangent = np.asarray(tangent, dtype=float)
    g0 = chart.metric(q.coords)
    dirs = _orthogonal_triple(g0, tangent)
    # transversal: any vector with g(N, K) != 0 survives transport as such
    gk = g0 @ tangent
    n0 = np.zeros(4)
    n0[int(np.argmax(np.abs(gk)))] = 1.0

    if chart.flat:
        def rhs(s, y):
            out = np.zeros(36)
            out[0:4] = y[4:8]
            for col in range(3):
                base = 12 + 8 * col
                out[base:base + 4] = y[base + 4:base + 8]
            return out
    else:
        def rhs(s, y):
            pos, vel = y[0:4], y[4:8]
            curv = riemann_ricci_at(chart, pos)
            out = np.zeros(36)
            out[0:4] = vel
            out[4:8] = -np.einsum("kij,i,j->k", curv.gamma, vel, vel)
            out[8:12] = -np.einsum("kij,i,j->k", curv.gamma, vel, y[8:12])
            for col in range(3):
                base = 12 + 8 * col
                jj, ww = y[base:base + 4], y[base + 4:base + 8]
                out[base:base + 4] = ww - np.einsum("kij,i,j->k", curv.gamma, vel, jj)
                out[base + 4:base + 8] = (
                    -np.einsum("klij,i,j,l->k", curv.riemann, jj, vel, vel)
                    - np.einsum("kij,i,j->k", curv.gamma, vel, ww)
                )
            return out

    y0 = np.concatenate([q.coords, tangent, n0]
                        + [np.concatenate([np.zeros(4), d]) for d in dirs])
    interp, s1, steps, clipped = _solve(chart, rhs, y0, s_max, rel_tol, abs_tol,
                                        events=_domain_event(chart))

    if grid_n < 2:
        return ConjugateScan((), True, s1)

    def det_at(s):
        y = interp(s)
        cols = np.stack([y[8:12]] + [y[12 + 8 * c:16 + 8 * c] for c in range(3)], axis=1)
        return float(np.linalg.det(cols)) / s**3

    grid = np.linspace(s1 / grid_n, s1, grid_n)
    vals = np.array([det_at(s) for s in grid])
    zeros = []
    for i in range(len(grid) - 1):
        if vals[i] == 0.0:
            zeros.append(grid[i])
            continue
        if vals[i] * vals[i + 1] < 0.0:
            lo, hi = grid[i], grid[i + 1]
            flo = vals[i]
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                fm = det_at(mid)
                if fm == 0.0:
                    lo = hi = mid
                    break
                if flo * fm < 0.0:
                    hi = mid
                else:
                    lo, flo = mid, fm
            zeros.append(0.5 * (lo + hi))
    return ConjugateScan(tuple(zeros), False, s1)


# ---------------------------------------------------------------------------
# Batched geodesic + Jacobi-column systems
#
# State per member: kappa (4), kappa' (4), then n_jac columns of (J, W).
# Used by the splitting layer, where thousands of rays with their map
# differentials are integrated per call.  No chart-exit events here; the
# caller is responsible for keeping batches inside the domain (a freeze
# guard stops runaway members from stalling the shared step control).
# ---------------------------------------------------------------------------

def _batch_rhs(chart: Chart, n_jac: int):
    width = 8 + 8 * n_jac

    if chart.flat:
        def rhs(s, y):
            m = y.reshape(-1, width)
            out = np.zeros_like(m)
            out[:, 0:4] = m[:, 4:8]
            for c in range(n_jac):
                base = 8 + 8 * c
                out[:, base:base + 4] = m[:, base + 4:base + 8]
            return out.ravel()

        return rhs

    def rhs(s, y):
        m = y.reshape(-1, width)
        out = np.zeros_like(m)
        pos, vel = m[:, 0:4], m[:, 4:8]
        inside = _inside_guard(chart, pos)
        safe_pos = np.where(inside[:, None], pos, _fallback_point(chart))
        gam = chart.christoffels(safe_pos)  # (n,4,4,4)
        out[:, 0:4] = vel
        out[:, 4:8] = -np.einsum("nkij,ni,nj->nk", gam, vel, vel)
        if n_jac:
            riem = _batch_riemann(chart, safe_pos)
            for col in range(n_jac):
                base = 8 + 8 * col
                jj = m[:, base:base + 4]
                ww = m[:, base + 4:base + 8]
                out[:, base:base + 4] = ww - np.einsum("nkij,ni,nj->nk", gam, vel, jj)
                out[:, base + 4:base + 8] = (
                    -np.einsum("nklij,ni,nj,nl->nk", riem, jj, vel, vel)
                    - np.einsum("nkij,ni,nj->nk", gam, vel, ww)
                )
        out[~inside] = 0.0  # freeze members that left the domain
        return out.ravel()

    return rhs


def _inside_guard(chart: Chart, pos):
    if chart.boundary_fn is None:
        return np.ones(pos.shape[0], dtype=bool)
    margin = 1e-9 * max(1.0, abs(chart.params.get("R", 1.0)))
    return chart.boundary_distance(pos) > margin


def _fallback_point(chart: Chart):
    if chart.name == "schwarzschild":
        return np.array([0.0, 2.0 * chart.params["R"], np.pi / 2.0, 0.0])
    return np.zeros(4)


def _batch_riemann(chart: Chart, pos, fd_step=1e-5):
    """Riemann components for a batch of points via fd of the connection."""
    if chart.riemann_fn is not None:
        return chart.riemann_fn(pos)
    n = pos.shape[0]
    gamma = chart.christoffels(pos)
    dgam = np.empty((n, 4, 4, 4, 4))
    for mu in range(4):
        h = np.zeros(4)
        h[mu] = fd_step
        dgam[..., mu] = (chart.christoffels(pos + h) - chart.christoffels(pos - h)) / (2 * fd_step)
    return (
        np.einsum("nkjli->nklij", dgam)
        - np.einsum("nkilj->nklij", dgam)
        + np.einsum("nkim,nmjl->nklij", gamma, gamma)
        - np.einsum("nkjm,nmil->nklij", gamma, gamma)
    )


def integrate_batch(chart: Chart, y0, n_jac=0, s_end=1.0,
                    rel_tol=REL_TOL, abs_tol=ABS_TOL):
    """Integrate n stacked geodesic(+Jacobi) systems over one interval.

    y0: (n, 8 + 8*n_jac) initial states.  Returns a callable interp(s)
    giving states shaped (n, width), plus the step count.
    """
    y0 = np.asarray(y0, dtype=float)
    n, width = y0.shape
    if width != 8 + 8 * n_jac:
        raise InvalidInputError("batch state width does not match n_jac")
    rhs = _batch_rhs(chart, n_jac)
    if s_end == 0.0:
        flat_interp = _const_interp(y0.ravel())
        return (lambda s: flat_interp(s).reshape(n, width)), 0

    sol = solve_ivp(rhs, (0.0, s_end), y0.ravel(), method="RK45",
                    dense_output=True, rtol=rel_tol, atol=abs_tol)
    if sol.status != 0:
        raise IntegrationError(f"batched integration failed: {sol.message}")
    dense = sol.sol

    def interp(s):
        return dense(s).reshape(n, width)

    return interp, len(sol.t) - 1
