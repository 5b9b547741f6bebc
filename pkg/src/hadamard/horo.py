"""Busemann functions, horospheres and horoballs.

A horoball here is a sublevel set {B < level} (open) or {B <= level}
(closed) of the Busemann function B of a unit-speed ray, normalized so that
B vanishes at the ray's base point.  B decreases at unit rate along its ray,
so the forward ray of a vector lies inside its stable horoball.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import geodesy
from . import manifold as mf
from .errors import ConvergenceError, DimensionError, IntegrationError, RangeError
from .manifold import TangentVector

BUSEMANN_TOL = 1e-5
T0 = 8.0
T_MAX = 1024.0


@dataclass(frozen=True)
class BusemannFunctional:
    """Busemann function of the ray t -> exp(t v), normalized at v.base."""

    direction: TangentVector
    mode: str = "auto"

    @property
    def base(self):
        return self.direction.base

    def reversed(self):
        return BusemannFunctional(-self.direction, self.mode)

    def to_json(self):
        return {"base": self.direction.base.tolist(),
                "dir": self.direction.components.tolist()}

    def __hash__(self):
        return hash((tuple(self.direction.base), tuple(self.direction.components), self.mode))

    def __eq__(self, other):
        return (isinstance(other, BusemannFunctional)
                and np.array_equal(self.direction.base, other.direction.base)
                and np.array_equal(self.direction.components, other.direction.components)
                and self.mode == other.mode)


@dataclass(frozen=True, eq=False)
class HoroballSpec:
    functional: BusemannFunctional
    level: float = 0.0
    open: bool = True

    def to_json(self):
        return {"type": "horoball", "ray": self.functional.to_json(),
                "level": self.level, "open": self.open}

    def __hash__(self):
        return hash((self.functional, self.level, self.open))

    def __eq__(self, other):
        return (isinstance(other, HoroballSpec) and self.functional == other.functional
                and self.level == other.level and self.open == other.open)


class BusemannValue(NamedTuple):
    value: float
    gap: float
    horizon: float


def functional(model, base, direction, mode="auto"):
    """Busemann functional of the ray leaving ``base`` along ``direction``."""
    return BusemannFunctional(geodesy.unit_tangent(model, base, direction), mode)


def ideal_point(model, v):
    """Forward endpoint of the geodesic ray of v in the chart's ideal boundary.

    Returns None for the point at infinity of the half-space model, a
    boundary-plane point (last coordinate 0) otherwise, or a unit vector for
    the ball model.
    """
    p = np.asarray(v.base, dtype=float)
    u = np.asarray(v.components, dtype=float)
    u = u / np.linalg.norm(u)
    if model.kind == mf.HALF_PLANE:
        horiz = u[:-1]
        hn = np.linalg.norm(horiz)
        if hn <= 1e-15 * abs(u[-1]):
            if u[-1] > 0:
                return None
            xi = p.copy()
            xi[-1] = 0.0
            return xi
        e = horiz / hn
        s = p[-1] * u[-1] / hn
        radius = np.hypot(s, p[-1])
        xi = np.zeros_like(p)
        xi[:-1] = p[:-1] + (s + radius) * e
        return xi
    if model.kind == mf.DISK:
        a1 = u
        w = p - (p @ a1) * a1
        if np.linalg.norm(w) <= 1e-14:
            # radial ray along a diameter
            pu = p @ u
            return p + (pu + np.sqrt(pu * pu - p @ p + 1.0)) * u
        a2 = w / np.linalg.norm(w)
        p1, p2 = p @ a1, p @ a2
        # circle orthogonal to the unit circle, tangent to a1 at (p1, p2)
        c = np.array([p1, (1.0 + p2 * p2 - p1 * p1) / (2.0 * p2)])
        radius = abs(c[1] - p2)
        theta_p = np.arctan2(p2 - c[1], 0.0)
        sigma = 1.0 if -np.sin(theta_p) > 0 else -1.0
        theta_c = np.arctan2(c[1], c[0])
        spread = np.arccos(np.clip(-radius / np.linalg.norm(c), -1.0, 1.0))
        best = min((theta_c + spread, theta_c - spread),
                   key=lambda th: (sigma * (th - theta_p)) % (2 * np.pi))
        q = c + radius * np.array([np.cos(best), np.sin(best)])
        xi = q[0] * a1 + q[1] * a2
        return xi / np.linalg.norm(xi)
    if model.kind == mf.EUCLIDEAN:
        return u
    raise ValueError(f"no ideal-point formula for {model.kind}")


def _closed_form_raw(model, xi, x):
    x = np.asarray(x, dtype=float)
    if model.kind == mf.HALF_PLANE:
        if xi is None:
            return -np.log(x[..., -1])
        return np.log(np.sum((x - xi) ** 2, axis=-1) / x[..., -1])
    if model.kind == mf.DISK:
        return np.log(np.sum((x - xi) ** 2, axis=-1) / (1.0 - np.sum(x * x, axis=-1)))
    raise ValueError(model.kind)


def busemann_closed_form(model, f, x):
    """Exact Busemann function on euclidean and hyperbolic charts; broadcasts."""
    x = np.asarray(x, dtype=float)
    v = f.direction
    if model.kind == mf.EUCLIDEAN:
        u = v.components / np.linalg.norm(v.components)
        return -np.sum((x - v.base) * u, axis=-1)
    if not model.is_hyperbolic:
        raise ValueError(f"no closed-form Busemann function for {model.kind}")
    xi = ideal_point(model, v)
    return _closed_form_raw(model, xi, x) - _closed_form_raw(model, xi, v.base)


def _neville_zero(hs, fs):
    p = list(fs)
    m = len(hs)
    for k in range(1, m):
        for i in range(m - k):
            p[i] = (hs[i + k] * p[i] - hs[i] * p[i + 1]) / (hs[i + k] - hs[i])
    return p[0]


def _ray_stations(model, v, schedule):
    """Yield (T, gamma(T)) along the schedule, integrating stage by stage.

    Stops early where the ray leaves the chart (one last station just
    inside the exit, if it extends the schedule by more than one unit) or
    where the chart coordinates stop being finite.
    """
    x, w = v.base[None], v.components[None]
    t_prev = 0.0
    for T in schedule:
        try:
            with np.errstate(over="raise", invalid="raise"):
                x, w = geodesy.integrate(model, x, w, T - t_prev)
        except IntegrationError as exc:
            if exc.exit_time is None:
                return
            step = exc.exit_time * (1.0 - 1e-3)
            if step > 1.0:
                x, w = geodesy.integrate(model, x, w, step)
                yield t_prev + step, x[0]
            return
        except FloatingPointError:
            return
        t_prev = T
        yield T, x[0]


def busemann_numeric(model, f, x, tol=BUSEMANN_TOL, t0=T0, t_max=T_MAX):
    """B(x) = lim [d(x, gamma(T)) - T] on a doubling schedule of T.

    Stops when two successive truncations differ by less than ``tol``; on
    flat stretches where the truncation error only decays like 1/T the
    same test is applied to a three-point Richardson extrapolation in 1/T.
    The schedule is clipped where the ray leaves the chart domain and, when
    distances need shooting, at the distance cap (with a ratio sqrt(2)
    schedule instead of doubling).
    """
    x = mf.check_point(model, x)
    v = f.direction
    schedule = [t0]
    while schedule[-1] * 2 <= t_max:
        schedule.append(schedule[-1] * 2)
    if not model.has_closed_form:
        # shooting caps the usable horizon, so sample it more densely
        limit = geodesy.DISTANCE_CAP - geodesy.distance(model, x, v.base) - 1.0
        schedule = [t for t in t0 / 2 * np.sqrt(2.0) ** np.arange(40) if t <= limit] or [limit]
    times, raw, extrap = [], [], []
    last_gap = np.inf
    for T, p in _ray_stations(model, v, schedule):
        times.append(T)
        raw.append(geodesy.distance(model, x, p) - T)
        if len(raw) >= 2:
            gap = abs(raw[-1] - raw[-2])
            last_gap = min(last_gap, gap)
            if gap < tol:
                return BusemannValue(float(raw[-1]), float(gap), float(T))
        if len(raw) >= 3:
            hs = [1.0 / t for t in times[-3:]]
            extrap.append(_neville_zero(hs, raw[-3:]))
            if len(extrap) >= 2:
                gap = abs(extrap[-1] - extrap[-2])
                last_gap = min(last_gap, gap)
                if gap < tol:
                    return BusemannValue(float(extrap[-1]), float(gap), float(T))
    raise ConvergenceError(
        f"Busemann truncation did not converge (last gap {last_gap:.3g})", residual=last_gap)


def busemann(model, f, x):
    """Dispatch on the functional's mode; returns (value, gap)."""
    if f.mode != "numeric" and model.has_closed_form:
        return busemann_closed_form(model, f, x), 0.0
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        r = busemann_numeric(model, f, x)
        return r.value, r.gap
    flat = x.reshape(-1, x.shape[-1])
    vals = [busemann_numeric(model, f, p) for p in flat]
    return (np.array([r.value for r in vals]).reshape(x.shape[:-1]),
            max(r.gap for r in vals))


def stable_horoball(model, v):
    """Open horoball of the forward ray of v: {B_v < 0}."""
    geodesy.check_unit(model, v)
    return HoroballSpec(BusemannFunctional(v), 0.0, True)


def unstable_horoball(model, v):
    """Open horoball of the backward ray of v: {B_{-v} < 0}."""
    geodesy.check_unit(model, v)
    return HoroballSpec(BusemannFunctional(-v), 0.0, True)


def horoball_contains(model, ball, x):
    b, _ = busemann(model, ball.functional, x)
    return b < ball.level if ball.open else b <= ball.level


def tangent_horosphere(model, plane, normal_sign=1):
    """Horosphere through plane.base whose tangent space there is the plane.

    Its defining ray leaves the base along the riemannian unit normal of the
    plane, oriented by ``normal_sign``.  Returned as a closed horoball whose
    boundary {B = 0} is the horosphere.
    """
    if model.dimension != 3:
        raise DimensionError("tangent_horosphere is defined for n = 3 only")
    normal = np.cross(plane.u, plane.v)
    if np.linalg.norm(normal) <= 1e-12:
        raise DimensionError("tangent plane is degenerate")
    w = geodesy.unit_tangent(model, plane.base, normal_sign * normal)
    return HoroballSpec(BusemannFunctional(w), 0.0, False)


def ray_point(model, f, s):
    x, _ = geodesy.exp_ivp(model, f.direction, s)
    return x


def check_range(model, f, x, cap=geodesy.DISTANCE_CAP):
    if geodesy.distance(model, x, f.base) > cap:
        raise RangeError("point is beyond the distance cap from the ray")
