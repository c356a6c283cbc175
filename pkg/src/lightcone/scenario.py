"""Scenario ingestion: a flat dotted-key text format and its builders.

One line per setting, `section.key = value`; `#` starts a comment; values
are scalars, bare words, or comma-separated lists.  Physical quantities
carry their unit in the key name (c_m_per_s, a_m_per_s2, omega_rad_per_s)
and are converted exactly once here; everything downstream works in
meters, with coordinate 0 stored as c*t.

The canonical form (sorted non-comment lines, normalized whitespace)
feeds the manifest hash, so cosmetic edits never change it.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .charts import Chart, minkowski, schwarzschild
from .errors import ConfigError
from .lorentz import Event
from .observers import (
    FrameField,
    ObserverCurve,
    fermi_walker_transport,
    make_inertial_observer,
    make_uniformly_accelerated_observer,
    rotating_frame,
    standard_inertial_frame,
)
from .splitting import MultistartConfig

TOOL_VERSION = "0.1.0"

_KNOWN_PREFIXES = (
    "spacetime.", "observer.", "frame.", "cone.", "invert.", "observe.",
    "newton.", "tol.", "validate.", "mass_kg",
)


def parse_scenario_text(text):
    """Parse scenario text into an ordered {dotted_key: value} dict."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not key or not val:
            raise ConfigError(f"empty key or value in {raw.strip()!r}", line=lineno)
        if not key.startswith(_KNOWN_PREFIXES):
            raise ConfigError(f"unknown setting {key!r}", line=lineno)
        if key in values:
            raise ConfigError(f"duplicate setting {key!r}", line=lineno)
        values[key] = val
    return values


def canonical_text(values) -> str:
    return "\n".join(f"{k} = {values[k]}" for k in sorted(values)) + "\n"


def scenario_hash(values) -> str:
    return hashlib.sha256(canonical_text(values).encode()).hexdigest()


def _floats(raw):
    if raw.strip() == "none":  # explicit empty list
        return []
    try:
        return [float(p) for p in raw.split(",")]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {raw!r}") from exc


@dataclass
class Scenario:
    """Validated scenario: raw values plus constructed model objects."""

    values: dict
    source_text: str

    def get(self, key, default=None, kind=float):
        if key not in self.values:
            if default is None:
                raise ConfigError(f"missing required setting {key!r}")
            return default
        raw = self.values[key]
        if kind is float:
            return float(raw)
        if kind is int:
            return int(raw)
        if kind is str:
            return raw
        if kind is list:
            return _floats(raw)
        raise ConfigError(f"unsupported kind for {key!r}")

    @property
    def hash(self):
        return scenario_hash(self.values)

    # -- builders ------------------------------------------------------------

    def build_chart(self) -> Chart:
        name = self.get("spacetime.name", kind=str)
        c = self.get("spacetime.c_m_per_s", 1.0)
        if c <= 0:
            raise ConfigError("spacetime.c_m_per_s must be positive")
        if name == "minkowski":
            return minkowski(c)
        if name == "schwarzschild":
            radius = self.get("spacetime.R_m")
            return schwarzschild(radius, c)
        raise ConfigError(f"unknown spacetime {name!r}")

    def build_observer(self, chart: Chart) -> ObserverCurve:
        kind = self.get("observer.kind", "inertial", kind=str)
        lo = self.get("observer.tau_min_s", -10.0)
        hi = self.get("observer.tau_max_s", 10.0)
        if hi <= lo:
            raise ConfigError("observer.tau_max_s must exceed observer.tau_min_s")
        if kind == "inertial":
            q0 = np.array(self.get("observer.q0_m", [0, 0, 0, 0], kind=list))
            u0 = np.array(self.get("observer.u0", [1, 0, 0, 0], kind=list))
            return make_inertial_observer(chart, Event(chart.name, q0), u0, (lo, hi))
        if kind == "uniformly_accelerated":
            if chart.name != "minkowski":
                raise ConfigError("uniformly accelerated observers need the flat chart")
            a = self.get("observer.a_m_per_s2")
            return make_uniformly_accelerated_observer(a, chart.c, (lo, hi))
        if kind == "programmed":
            # constant accelerometer reading in the instantaneous frame basis;
            # arbitrary programs are an API-level feature
            curve, field = self._programmed(chart, lo, hi)
            self._programmed_frames = field
            return curve
        raise ConfigError(f"unknown observer kind {kind!r}")

    def _programmed(self, chart, lo, hi):
        from .observers import make_programmed_observer

        q0 = np.array(self.get("observer.q0_m", [0, 0, 0, 0], kind=list))
        accel = np.array(self.get("observer.accel_m_per_s2", kind=list))
        if accel.shape != (3,):
            raise ConfigError("observer.accel_m_per_s2 needs 3 components")
        frame0 = _initial_frame_at(chart, q0)
        return make_programmed_observer(chart, Event(chart.name, q0), frame0,
                                        lambda tau: accel, interval=(lo, hi))

    def build_frames(self, chart: Chart, curve: ObserverCurve) -> FrameField:
        kind = self.get("frame.kind", "fermi_walker", kind=str)
        if kind == "explicit":
            cols = np.array(self.get("frame.columns", kind=list)).reshape(4, 4, order="F")
            zero = np.zeros((4, 4))
            return FrameField(curve=curve, matrix_fn=lambda tau: cols.copy(),
                              cov_deriv_fn=lambda tau: zero.copy(), kind="explicit")
        if curve.kind == "programmed":
            base = self._programmed_frames
            if kind == "fermi_walker":
                return base
            if kind == "rotating":
                return rotating_frame(base, self.get("frame.omega_rad_per_s"),
                                      self.get("frame.axis", 1, kind=int))
            raise ConfigError(f"unknown frame kind {kind!r}")
        if curve.kind == "inertial" and chart.flat:
            base = standard_inertial_frame(curve)
        else:
            x0 = _initial_frame(chart, curve)
            base = fermi_walker_transport(curve, x0, curve.interval)
        if kind == "fermi_walker":
            return base
        if kind == "rotating":
            omega = self.get("frame.omega_rad_per_s")
            axis = self.get("frame.axis", 1, kind=int)
            return rotating_frame(base, omega, axis)
        raise ConfigError(f"unknown frame kind {kind!r}")

    def build_search(self, curve: ObserverCurve) -> MultistartConfig:
        lo = self.get("invert.tau_min_s", curve.interval[0])
        hi = self.get("invert.tau_max_s", curve.interval[1])
        center = self.get("invert.x_center_m", [0.0, 0.0, 0.0], kind=list)
        return MultistartConfig(
            tau_range=(lo, hi),
            x_halfwidth=self.get("invert.x_box_m", 6.0),
            x_center=tuple(center),
            n_tau=self.get("invert.n_tau", 9, kind=int),
            n_x=self.get("invert.n_x", 9, kind=int),
            top_k=self.get("invert.top_k", 16, kind=int),
            max_iter=self.get("invert.max_newton", 50, kind=int),
            inv_tol=self.get("tol.inv", 1e-10),
            merge_tol=self.get("tol.merge", 1e-6),
            cond_max=self.get("tol.cond_max", 1e8),
        )


def _initial_frame(chart, curve):
    """Orthonormal right-handed completion of the tangent at the base instant."""
    from .observers import _complete_orthonormal

    lo, hi = curve.interval
    tau0 = 0.0 if lo <= 0.0 <= hi else lo
    g = chart.metric(curve.position(tau0))
    return _complete_orthonormal(g, curve.velocity(tau0) / chart.c)


def _initial_frame_at(chart, coords):
    from .observers import _complete_orthonormal

    g = chart.metric(np.asarray(coords, dtype=float))
    ref = chart.reference_frame(np.asarray(coords, dtype=float))
    return _complete_orthonormal(g, ref[:, 0])


def load_scenario(path) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc
    return Scenario(values=parse_scenario_text(text), source_text=text)


def apply_overrides(scn: Scenario, overrides):
    """CLI overrides KEY=VAL; only tolerance keys may be overridden."""
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not KEY=VAL")
        key, _, val = item.partition("=")
        key, val = key.strip(), val.strip()
        if not key.startswith("tol."):
            raise ConfigError(f"only tol.* settings may be overridden, not {key!r}")
        scn.values[key] = val
    return scn
