"""Observer worldlines and moving frames of reference.

An ObserverCurve is a proper-time parametrized, future-directed timelike
worldline with g(gamma', gamma') = c^2.  A FrameField attaches an
orthonormal, right-handed frame to every instant, with the zeroth column
pinned to gamma'/c.  Frames propagate by Fermi-Walker transport (the
non-rotating law); rotating variants post-multiply the spatial columns by
a time-dependent rotation.

Analytic curves carry exact tangents and accelerations; numerically
integrated ones interpolate the solver's dense output.  The two kinds are
never mixed inside one FrameField.
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .charts import Chart, metric_at
from .errors import CausalDomainError, IntegrationError, InvalidInputError
from .lorentz import Event, Frame4, causal_character, CausalCharacter, gram_matrix
from .geodesics import REL_TOL, ABS_TOL, GeodesicIVP, integrate_geodesic


@dataclass(frozen=True)
class ObserverCurve:
    """Worldline parametrized by proper time on a fixed chart."""

    chart: Chart
    interval: tuple
    position_fn: Callable[[float], np.ndarray]
    velocity_fn: Callable[[float], np.ndarray]       # gamma' components
    acceleration_fn: Callable[[float], np.ndarray]   # covariant acceleration
    kind: str = "generic"

    @property
    def c(self):
        return self.chart.c

    def _check_tau(self, tau):
        lo, hi = self.interval
        if tau < lo - 1e-12 or tau > hi + 1e-12:
            raise InvalidInputError(f"tau={tau} outside observer interval [{lo}, {hi}]")

    def position(self, tau):
        self._check_tau(tau)
        return self.position_fn(tau)

    def velocity(self, tau):
        self._check_tau(tau)
        return self.velocity_fn(tau)

    def acceleration(self, tau):
        """Covariant acceleration (the proper acceleration vector)."""
        self._check_tau(tau)
        return self.acceleration_fn(tau)

    def event(self, tau) -> Event:
        return Event(self.chart.name, self.position(tau))


@dataclass(frozen=True)
class FrameField:
    """Frame of reference field along an observer.

    matrix(tau) returns the 4x4 component matrix whose columns are the
    frame vectors; column 0 equals gamma'(tau)/c.  cov_deriv(tau) returns
    the covariant derivatives of the columns, which the splitting layer
    needs for the temporal column of the observer-map differential.
    tau_range may be narrower than the curve's interval when the frame
    was transported over a sub-range.
    """

    curve: ObserverCurve
    matrix_fn: Callable[[float], np.ndarray]
    cov_deriv_fn: Callable[[float], np.ndarray]
    kind: str = "fermi-walker"
    tau_range: tuple = None

    @property
    def interval(self):
        return self.curve.interval if self.tau_range is None else self.tau_range

    def matrix(self, tau):
        return self.matrix_fn(tau)

    def cov_deriv(self, tau):
        return self.cov_deriv_fn(tau)

    def frame(self, tau) -> Frame4:
        return Frame4(self.curve.event(tau), self.matrix(tau))


def normalize_observer_velocity(chart: Chart, coords, u0):
    """Scale u0 to g(u, u) = c^2; reject non-timelike directions."""
    u0 = np.asarray(u0, dtype=float)
    g = metric_at(chart, coords)
    q = float(u0 @ g @ u0)
    if q <= 0.0 or causal_character(g, u0) is not CausalCharacter.TIMELIKE:
        raise CausalDomainError("observer velocity must be timelike")
    if u0[0] <= 0.0:
        raise CausalDomainError("observer velocity must be future-directed")
    return u0 * (chart.c / math.sqrt(q))


def make_inertial_observer(chart: Chart, q0: Event, u0, interval=(-10.0, 10.0),
                           rel_tol=REL_TOL, abs_tol=ABS_TOL) -> ObserverCurve:
    """Geodesic observer through q0 with (normalized) initial velocity u0."""
    u = normalize_observer_velocity(chart, q0.coords, u0)
    lo, hi = float(interval[0]), float(interval[1])
    if chart.flat:
        p0 = q0.coords.copy()

        return ObserverCurve(
            chart=chart,
            interval=(lo, hi),
            position_fn=lambda tau: p0 + tau * u,
            velocity_fn=lambda tau: u.copy(),
            acceleration_fn=lambda tau: np.zeros(4),
            kind="inertial",
        )

    fwd = integrate_geodesic(chart, GeodesicIVP(q0, u), hi, rel_tol, abs_tol) if hi > 0 else None
    bwd = integrate_geodesic(chart, GeodesicIVP(q0, u), lo, rel_tol, abs_tol) if lo < 0 else None
    for sol, want in ((fwd, hi), (bwd, lo)):
        if sol is not None and sol.clipped:
            raise IntegrationError(
                f"observer worldline exits the chart at tau={sol.s1:.6g} (wanted {want})"
            )

    def pick(tau):
        return fwd if tau >= 0 else bwd

    return ObserverCurve(
        chart=chart,
        interval=(lo, hi),
        position_fn=lambda tau: pick(tau).position(tau),
        velocity_fn=lambda tau: pick(tau).velocity(tau),
        acceleration_fn=lambda tau: np.zeros(4),
        kind="inertial",
    )


def make_uniformly_accelerated_observer(a, c=1.0, interval=(-10.0, 10.0)) -> ObserverCurve:
    """Constantly accelerating observer in flat spacetime (closed form).

    Worldline (c^2/a sinh(a tau/c), c^2/a (cosh(a tau/c) - 1), 0, 0),
    starting at rest at the origin and accelerating along axis 1 with
    constant proper acceleration a > 0.
    """
    from .charts import minkowski

    a = float(a)
    if a <= 0.0:
        raise CausalDomainError("proper acceleration must be positive")
    chart = minkowski(c)
    c = float(c)

    def position_fn(tau):
        w = a * tau / c
        return np.array([c**2 / a * math.sinh(w), c**2 / a * (math.cosh(w) - 1.0), 0.0, 0.0])

    def velocity_fn(tau):
        w = a * tau / c
        return np.array([c * math.cosh(w), c * math.sinh(w), 0.0, 0.0])

    def acceleration_fn(tau):
        w = a * tau / c
        return np.array([a * math.sinh(w), a * math.cosh(w), 0.0, 0.0])

    return ObserverCurve(
        chart=chart,
        interval=(float(interval[0]), float(interval[1])),
        position_fn=position_fn,
        velocity_fn=velocity_fn,
        acceleration_fn=acceleration_fn,
        kind="uniformly-accelerated",
    )


def make_programmed_observer(chart: Chart, q0: Event, frame0, accel_program,
                             interval=(-10.0, 10.0), rel_tol=REL_TOL,
                             abs_tol=ABS_TOL) -> tuple:
    """Observer driven by an accelerometer program.

    accel_program(tau) gives the spatial proper-acceleration components in
    the instantaneous (Fermi-Walker transported) frame basis.  The
    worldline, its tangent and the non-rotating frame are integrated as one
    coupled system; returns (ObserverCurve, FrameField).
    """
    c = chart.c
    x0 = np.asarray(frame0.matrix if isinstance(frame0, Frame4) else frame0, dtype=float)
    y0 = np.concatenate([q0.coords, c * x0[:, 0], x0[:, 1:].ravel(order="F")])

    def rhs(tau, y):
        pos, vel = y[:4], y[4:8]
        cols = y[8:20].reshape(4, 3, order="F")
        g = chart.metric(pos)
        gam = chart.christoffels(pos)
        acc_frame = np.asarray(accel_program(tau), dtype=float)
        accel = cols @ acc_frame  # spatial frame components -> chart components
        dvel = accel - np.einsum("kij,i,j->k", gam, vel, vel)
        gv = g @ vel
        ga = g @ accel
        # Fermi-Walker transport of the spatial columns
        dcols = (
            -np.einsum("kij,i,jm->km", gam, vel, cols)
            + (np.outer(accel, gv @ cols) - np.outer(vel, ga @ cols)) / c**2
        )
        return np.concatenate([vel, dvel, dcols.ravel(order="F")])

    curve, field = _integrate_frame_system(chart, rhs, y0, interval, rel_tol, abs_tol,
                                           kind="programmed")
    return curve, field


def proper_acceleration(curve: ObserverCurve, tau):
    """(A, a): covariant acceleration vector and its magnitude."""
    acc = curve.acceleration(tau)
    g = metric_at(curve.chart, curve.position(tau))
    q = float(acc @ g @ acc)
    return acc, math.sqrt(max(0.0, -q))


def fermi_walker_derivative(curve: ObserverCurve, field, tau, field_deriv=None, h=1e-6):
    """Fermi-Walker derivative of a vector field along the observer.

    field(tau) gives chart components of Y; field_deriv(tau), when known
    analytically, gives dY/dtau and avoids the central-difference fallback.
    """
    c = curve.c
    y = np.asarray(field(tau), dtype=float)
    if field_deriv is not None:
        ydot = np.asarray(field_deriv(tau), dtype=float)
    else:
        ydot = (np.asarray(field(tau + h)) - np.asarray(field(tau - h))) / (2.0 * h)
    pos = curve.position(tau)
    vel = curve.velocity(tau)
    acc = curve.acceleration(tau)
    g = metric_at(curve.chart, pos)
    gam = curve.chart.christoffels(pos)
    nabla_y = ydot + np.einsum("kij,i,j->k", gam, vel, y)
    return nabla_y - (float(vel @ g @ y) * acc - float(acc @ g @ y) * vel) / c**2


def fermi_walker_derivative_projector_form(curve: ObserverCurve, field, tau,
                                           field_deriv=None, h=1e-6):
    """Same derivative through the parallel/orthogonal projector split.

    Kept as an independent oracle: it evaluates the defining projector
    formula numerically instead of the observer-adapted expression.
    """
    from .lorentz import projectors

    pos = curve.position(tau)
    vel = curve.velocity(tau)
    g = metric_at(curve.chart, pos)
    gam = curve.chart.christoffels(pos)

    def nabla(fn, dfn):
        y = np.asarray(fn(tau), dtype=float)
        if dfn is not None:
            ydot = np.asarray(dfn(tau), dtype=float)
        else:
            ydot = (np.asarray(fn(tau + h)) - np.asarray(fn(tau - h))) / (2.0 * h)
        return ydot + np.einsum("kij,i,j->k", gam, vel, y)

    def project(which):
        def fn(t):
            p_par, p_perp = projectors(metric_at(curve.chart, curve.position(t)),
                                       curve.velocity(t))
            p = p_par if which == "par" else p_perp
            return p @ np.asarray(field(t), dtype=float)

        return fn

    p_par, p_perp = projectors(g, vel)
    return p_par @ nabla(project("par"), None) + p_perp @ nabla(project("perp"), None)


def _fw_cov_deriv_matrix(curve: ObserverCurve, tau, mat):
    """Covariant derivatives of FW-transported columns: the transport law."""
    c = curve.c
    vel = curve.velocity(tau)
    acc = curve.acceleration(tau)
    g = metric_at(curve.chart, curve.position(tau))
    return (np.outer(acc, (g @ vel) @ mat) - np.outer(vel, (g @ acc) @ mat)) / c**2


def fermi_walker_transport(curve: ObserverCurve, frame0, tau_range=None,
                           rel_tol=REL_TOL, abs_tol=ABS_TOL) -> FrameField:
    """Propagate a frame of reference along the observer without rotation.

    The zeroth column is pinned to gamma'/c analytically; the three
    spatial columns solve the Fermi-Walker transport equation.  frame0
    must be a valid frame at tau=tau0 (midpoint convention: tau0 is
    tau_range[0] unless the range straddles it).
    """
    chart = curve.chart
    c = curve.c
    if tau_range is None:
        tau_range = curve.interval
    lo, hi = float(tau_range[0]), float(tau_range[1])
    tau0 = 0.0 if lo <= 0.0 <= hi else lo
    x0 = np.asarray(frame0.matrix if isinstance(frame0, Frame4) else frame0, dtype=float)
    if np.max(np.abs(x0[:, 0] - curve.velocity(tau0) / c)) > 1e-8:
        raise CausalDomainError("frame column 0 must equal the observer tangent / c")
    g0 = metric_at(chart, curve.position(tau0))
    from .lorentz import ETA

    if np.max(np.abs(gram_matrix(g0, x0) - ETA)) > 1e-8:
        raise CausalDomainError("initial frame is not orthonormal")

    def rhs(tau, y):
        cols = y.reshape(4, 3, order="F")
        pos = curve.position(tau)
        vel = curve.velocity(tau)
        acc = curve.acceleration(tau)
        g = chart.metric(pos)
        gam = chart.christoffels(pos)
        dcols = (
            -np.einsum("kij,i,jm->km", gam, vel, cols)
            + (np.outer(acc, (g @ vel) @ cols) - np.outer(vel, (g @ acc) @ cols)) / c**2
        )
        return dcols.ravel(order="F")

    y0 = x0[:, 1:].ravel(order="F")
    interps = {}
    for target in (lo, hi):
        if target == tau0:
            continue
        sol = solve_ivp(rhs, (tau0, target), y0, method="RK45", dense_output=True,
                        rtol=rel_tol, atol=abs_tol)
        if sol.status != 0:
            raise IntegrationError(f"frame transport failed: {sol.message}")
        interps["fwd" if target > tau0 else "bwd"] = sol.sol

    def spatial_cols(tau):
        if tau < lo - 1e-12 or tau > hi + 1e-12:
            raise InvalidInputError(f"tau={tau} outside transported range [{lo}, {hi}]")
        if abs(tau - tau0) < 1e-300:
            return x0[:, 1:].copy()
        key = "fwd" if tau > tau0 else "bwd"
        if key not in interps:
            raise InvalidInputError(f"tau={tau} outside transported range [{lo}, {hi}]")
        return interps[key](tau).reshape(4, 3, order="F")

    def matrix_fn(tau):
        m = np.empty((4, 4))
        m[:, 0] = curve.velocity(tau) / c
        m[:, 1:] = spatial_cols(tau)
        return m

    def cov_deriv_fn(tau):
        return _fw_cov_deriv_matrix(curve, tau, matrix_fn(tau))

    return FrameField(curve=curve, matrix_fn=matrix_fn, cov_deriv_fn=cov_deriv_fn,
                      kind="fermi-walker", tau_range=(lo, hi))


def rotation_block(omega, axis, tau):
    """SO(3) block rotating about the given spatial axis by omega*tau."""
    ang = omega * tau
    cs, sn = math.cos(ang), math.sin(ang)
    rot = np.eye(3)
    i, j = [(1, 2), (2, 0), (0, 1)][axis - 1]
    rot[i, i] = cs
    rot[i, j] = -sn
    rot[j, i] = sn
    rot[j, j] = cs
    return rot


def rotating_frame(base: FrameField, omega, axis=1) -> FrameField:
    """Spin the spatial columns of a frame field about one of its axes.

    The spatial columns are post-multiplied by a rotation through angle
    omega*tau about the given axis (1, 2 or 3).  omega = 0 returns the
    base field unchanged.
    """
    if axis not in (1, 2, 3):
        raise InvalidInputError("rotation axis must be 1, 2 or 3")
    omega = float(omega)
    if omega == 0.0:
        return base

    def matrix_fn(tau):
        m = base.matrix(tau).copy()
        m[:, 1:] = m[:, 1:] @ rotation_block(omega, axis, tau)
        return m

    def cov_deriv_fn(tau):
        rot = rotation_block(omega, axis, tau)
        # d/dtau of the rotation block
        ang = omega * tau
        cs, sn = math.cos(ang), math.sin(ang)
        drot = np.zeros((3, 3))
        i, j = [(1, 2), (2, 0), (0, 1)][axis - 1]
        drot[i, i] = -sn * omega
        drot[i, j] = -cs * omega
        drot[j, i] = cs * omega
        drot[j, j] = -sn * omega
        base_m = base.matrix(tau)
        base_d = base.cov_deriv(tau)
        d = np.empty((4, 4))
        d[:, 0] = base_d[:, 0]
        d[:, 1:] = base_d[:, 1:] @ rot + base_m[:, 1:] @ drot
        return d

    return FrameField(curve=base.curve, matrix_fn=matrix_fn,
                      cov_deriv_fn=cov_deriv_fn, kind=f"rotating(axis={axis})",
                      tau_range=base.tau_range)


def _integrate_frame_system(chart, rhs, y0, interval, rel_tol, abs_tol, kind):
    """Shared machinery for coupled worldline+frame integrations."""
    lo, hi = float(interval[0]), float(interval[1])
    tau0 = 0.0 if lo <= 0.0 <= hi else lo
    interps = {}
    for target in (lo, hi):
        if target == tau0:
            continue
        sol = solve_ivp(rhs, (tau0, target), y0, method="RK45", dense_output=True,
                        rtol=rel_tol, atol=abs_tol)
        if sol.status != 0:
            raise IntegrationError(f"worldline integration failed: {sol.message}")
        interps["fwd" if target > tau0 else "bwd"] = sol.sol

    def state(tau):
        if abs(tau - tau0) < 1e-300:
            return np.asarray(y0, dtype=float).copy()
        key = "fwd" if tau > tau0 else "bwd"
        if key not in interps:
            raise InvalidInputError(f"tau={tau} outside interval [{lo}, {hi}]")
        return interps[key](tau)

    c = chart.c

    def accel_of(tau):
        y = state(tau)
        dy = rhs(tau, y)
        gam = chart.christoffels(y[:4])
        return dy[4:8] + np.einsum("kij,i,j->k", gam, y[4:8], y[4:8])

    curve = ObserverCurve(
        chart=chart,
        interval=(lo, hi),
        position_fn=lambda tau: state(tau)[:4],
        velocity_fn=lambda tau: state(tau)[4:8],
        acceleration_fn=accel_of,
        kind=kind,
    )

    def matrix_fn(tau):
        y = state(tau)
        m = np.empty((4, 4))
        m[:, 0] = y[4:8] / c
        m[:, 1:] = y[8:20].reshape(4, 3, order="F")
        return m

    def cov_deriv_fn(tau):
        return _fw_cov_deriv_matrix(curve, tau, matrix_fn(tau))

    field = FrameField(curve=curve, matrix_fn=matrix_fn, cov_deriv_fn=cov_deriv_fn,
                       kind="fermi-walker")
    return curve, field


def standard_inertial_frame(curve: ObserverCurve) -> FrameField:
    """Frame field completing an inertial observer's tangent in a flat chart.

    Builds an orthonormal right-handed completion of gamma'/c once and
    carries it unchanged, which in a flat chart is the Fermi-Walker
    transported field.
    """
    if not curve.chart.flat:
        raise InvalidInputError("standard inertial frames require a flat chart")
    c = curve.c
    u = curve.velocity(curve.interval[0])  # constant for inertial flat curves
    m = _complete_orthonormal(curve.chart.metric(curve.position(curve.interval[0])), u / c)
    zero = np.zeros((4, 4))
    return FrameField(curve=curve, matrix_fn=lambda tau: m.copy(),
                      cov_deriv_fn=lambda tau: zero.copy(), kind="fermi-walker")


def _complete_orthonormal(g, e0):
    """Gram-Schmidt completion of a unit timelike vector to a frame.

    Signature (+,-,-,-): spatial columns are normalized to g(e,e) = -1.
    Orientation is fixed to match the coordinate basis.
    """
    cols = [np.asarray(e0, dtype=float)]
    for seed in np.eye(4):
        v = seed.copy()
        for w in cols:
            q = float(w @ g @ w)
            v = v - (float(w @ g @ v) / q) * w
        nv = float(v @ g @ v)
        if abs(nv) < 1e-12:
            continue
        cols.append(v / math.sqrt(abs(nv)))
        if len(cols) == 4:
            break
    m = np.stack(cols, axis=1)
    if np.linalg.det(m) < 0:
        m[:, 3] = -m[:, 3]
    return m
