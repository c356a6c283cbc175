"""Chart-based spacetime models and their curvature.

A Chart bundles a single coordinate patch with its metric components,
optional analytic connection coefficients, a domain predicate and the
designated right-handed orthonormal reference frame used for orientation
checks.  Two analytic models ship built in (flat Minkowski and exterior
Schwarzschild); anything else goes through the finite-difference path.

All evaluators are vectorized over a leading batch axis: coords may be
shaped (4,) or (n, 4).
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateMetricError, InvalidInputError, OutOfChartError
from .lorentz import ETA


@dataclass(frozen=True)
class Chart:
    """One coordinate patch of a spacetime model.

    Coordinates are stored as lengths (coordinate 0 is c*t), so the speed
    of light c enters only when converting to and from seconds.  Chart
    exit is an error condition, not a transition: there is no atlas.
    """

    name: str
    c: float
    metric_fn: Callable[[np.ndarray], np.ndarray]
    domain_fn: Callable[[np.ndarray], np.ndarray]
    reference_frame_fn: Callable[[np.ndarray], np.ndarray]
    christoffel_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    riemann_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    boundary_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    flat: bool = False
    params: dict = field(default_factory=dict)

    def metric(self, coords):
        return self.metric_fn(np.asarray(coords, dtype=float))

    def contains(self, coords):
        return self.domain_fn(np.asarray(coords, dtype=float))

    def reference_frame(self, coords):
        return self.reference_frame_fn(np.asarray(coords, dtype=float))

    def christoffels(self, coords, fd_step=1e-5):
        if self.christoffel_fn is not None:
            return self.christoffel_fn(np.asarray(coords, dtype=float))
        return _fd_christoffels(self, np.asarray(coords, dtype=float), fd_step)

    def boundary_distance(self, coords):
        """Positive inside the domain, crossing zero at the boundary."""
        if self.boundary_fn is None:
            return None
        return self.boundary_fn(np.asarray(coords, dtype=float))


@dataclass(frozen=True)
class CurvatureSample:
    """Connection and curvature components at one chart point."""

    gamma: np.ndarray    # (4,4,4), gamma[k,i,j] symmetric in (i,j)
    riemann: np.ndarray  # (4,4,4,4), riemann[k,l,i,j] antisymmetric in (i,j)
    ricci: np.ndarray    # (4,4)


def minkowski(c=1.0) -> Chart:
    """Flat spacetime in standard coordinates (ct, y1, y2, y3)."""

    def metric_fn(coords):
        coords = np.asarray(coords, dtype=float)
        out = np.empty(coords.shape[:-1] + (4, 4))
        out[...] = ETA
        return out

    def domain_fn(coords):
        coords = np.asarray(coords)
        return np.all(np.isfinite(coords), axis=-1)

    def frame_fn(coords):
        return np.eye(4)

    return Chart(
        name="minkowski",
        c=float(c),
        metric_fn=metric_fn,
        domain_fn=domain_fn,
        reference_frame_fn=frame_fn,
        christoffel_fn=lambda coords: np.zeros(np.asarray(coords).shape[:-1] + (4, 4, 4)),
        riemann_fn=lambda coords: np.zeros(np.asarray(coords).shape[:-1] + (4, 4, 4, 4)),
        boundary_fn=None,
        flat=True,
        params={"c": float(c)},
    )


def schwarzschild(radius, c=1.0) -> Chart:
    """Exterior region r > R in coordinates (ct, r, theta, phi).

    The polar seam is excluded from the domain rather than handled:
    theta must stay strictly inside (0, pi).  phi is left unbounded
    because every metric component is phi-independent; this sidesteps the
    2*pi wrap without changing any geometry.
    """
    radius = float(radius)
    if radius <= 0.0:
        raise InvalidInputError("Schwarzschild radius must be positive")

    def metric_fn(coords):
        coords = np.asarray(coords, dtype=float)
        single = coords.ndim == 1
        pts = np.atleast_2d(coords)
        r, th = pts[:, 1], pts[:, 2]
        f = 1.0 - radius / r
        g = np.zeros((pts.shape[0], 4, 4))
        g[:, 0, 0] = f
        g[:, 1, 1] = -1.0 / f
        g[:, 2, 2] = -(r**2)
        g[:, 3, 3] = -(r**2) * np.sin(th) ** 2
        return g[0] if single else g

    def domain_fn(coords):
        coords = np.asarray(coords, dtype=float)
        pts = np.atleast_2d(coords)
        ok = (
            np.all(np.isfinite(pts), axis=-1)
            & (pts[:, 1] > radius)
            & (pts[:, 2] > 0.0)
            & (pts[:, 2] < np.pi)
        )
        return ok[0] if coords.ndim == 1 else ok

    def boundary_fn(coords):
        coords = np.asarray(coords, dtype=float)
        pts = np.atleast_2d(coords)
        d = np.minimum(pts[:, 1] - radius, np.minimum(pts[:, 2], np.pi - pts[:, 2]))
        return d[0] if coords.ndim == 1 else d

    def frame_fn(coords):
        coords = np.asarray(coords, dtype=float)
        r, th = coords[1], coords[2]
        f = 1.0 - radius / r
        return np.diag([f**-0.5, f**0.5, 1.0 / r, 1.0 / (r * np.sin(th))])

    def christoffel_fn(coords):
        coords = np.asarray(coords, dtype=float)
        single = coords.ndim == 1
        pts = np.atleast_2d(coords)
        r, th = pts[:, 1], pts[:, 2]
        f = 1.0 - radius / r
        fp = radius / r**2  # df/dr
        sin, cos = np.sin(th), np.cos(th)
        gam = np.zeros((pts.shape[0], 4, 4, 4))
        gam[:, 0, 0, 1] = gam[:, 0, 1, 0] = fp / (2.0 * f)
        gam[:, 1, 0, 0] = f * fp / 2.0
        gam[:, 1, 1, 1] = -fp / (2.0 * f)
        gam[:, 1, 2, 2] = -f * r
        gam[:, 1, 3, 3] = -f * r * sin**2
        gam[:, 2, 1, 2] = gam[:, 2, 2, 1] = 1.0 / r
        gam[:, 2, 3, 3] = -sin * cos
        gam[:, 3, 1, 3] = gam[:, 3, 3, 1] = 1.0 / r
        gam[:, 3, 2, 3] = gam[:, 3, 3, 2] = cos / sin
        return gam[0] if single else gam

    return Chart(
        name="schwarzschild",
        c=float(c),
        metric_fn=metric_fn,
        domain_fn=domain_fn,
        reference_frame_fn=frame_fn,
        christoffel_fn=christoffel_fn,
        riemann_fn=None,
        boundary_fn=boundary_fn,
        flat=False,
        params={"c": float(c), "R": radius},
    )


def metric_at(chart: Chart, coords) -> np.ndarray:
    """Metric components at a single chart point (with domain check)."""
    coords = np.asarray(coords, dtype=float)
    if coords.shape != (4,):
        raise InvalidInputError("metric_at expects a single coordinate 4-tuple")
    if not chart.contains(coords):
        raise OutOfChartError(f"{coords} lies outside the {chart.name} chart domain")
    return chart.metric(coords)


def _fd_christoffels(chart: Chart, coords, fd_step):
    """Levi-Civita coefficients from central differences of the metric."""
    g = chart.metric(coords)
    try:
        ginv = np.linalg.inv(g)
    except np.linalg.LinAlgError as exc:
        raise DegenerateMetricError(f"metric not invertible at {coords}") from exc
    dg = np.empty((4, 4, 4))  # dg[l, i, j] = d g_li / d x^j
    for j in range(4):
        h = np.zeros(4)
        h[j] = fd_step
        dg[:, :, j] = (chart.metric(coords + h) - chart.metric(coords - h)) / (2.0 * fd_step)
    # gamma^k_ij = 1/2 g^{kl} (g_{li,j} + g_{lj,i} - g_{ij,l})
    term = dg + np.einsum("lji->lij", dg) - np.einsum("ijl->lij", dg)
    return 0.5 * np.einsum("kl,lij->kij", ginv, term)


def christoffels_at(chart: Chart, coords, fd_step=1e-5) -> np.ndarray:
    coords = np.asarray(coords, dtype=float)
    if not chart.contains(coords):
        raise OutOfChartError(f"{coords} lies outside the {chart.name} chart domain")
    return chart.christoffels(coords, fd_step)


def riemann_ricci_at(chart: Chart, coords, fd_step=1e-5) -> CurvatureSample:
    """Curvature components from central differences of the connection.

    riemann[k, l, i, j] are the components of R(e_i, e_j) e_l in the
    commutator convention nabla_i nabla_j - nabla_j nabla_i - nabla_[i,j];
    ricci is the contraction of the upper index with the first lower
    curvature slot, ricci[l, j] = riemann[k, l, k, j].
    """
    coords = np.asarray(coords, dtype=float)
    if not chart.contains(coords):
        raise OutOfChartError(f"{coords} lies outside the {chart.name} chart domain")
    gamma = chart.christoffels(coords, fd_step)
    if chart.riemann_fn is not None:
        riem = chart.riemann_fn(coords)
    else:
        dgam = np.empty((4, 4, 4, 4))  # dgam[k, i, j, m] = d gamma^k_ij / d x^m
        for m in range(4):
            h = np.zeros(4)
            h[m] = fd_step
            dgam[:, :, :, m] = (
                chart.christoffels(coords + h, fd_step) - chart.christoffels(coords - h, fd_step)
            ) / (2.0 * fd_step)
        # R^k_{l ij} = d_i gamma^k_jl - d_j gamma^k_il
        #             + gamma^k_im gamma^m_jl - gamma^k_jm gamma^m_il
        riem = (
            np.einsum("kjli->klij", dgam)
            - np.einsum("kilj->klij", dgam)
            + np.einsum("kim,mjl->klij", gamma, gamma)
            - np.einsum("kjm,mil->klij", gamma, gamma)
        )
    ricci = np.einsum("klkj->lj", riem)
    return CurvatureSample(gamma=gamma, riemann=riem, ricci=ricci)
