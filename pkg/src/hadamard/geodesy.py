"""Geodesics: initial-value integration, shooting, distances and barycenters."""

from dataclasses import dataclass
from typing import List

import numpy as np
from scipy.integrate import solve_ivp

from . import manifold as mf
from .errors import (ConvergenceError, DegenerateError, IntegrationError,
                     RangeError)
from .manifold import TangentVector

DEFAULT_TOL = 1e-10
DISTANCE_CAP = 50.0
UNIT_TOL = 1e-10
JACOBIAN_STEP = 1e-7
ENDPOINT_TOL = 1e-8


@dataclass
class GeodesicPath:
    """Constant-speed geodesic sampled on the time interval [0, 1].

    ``initial_velocity`` is the chart velocity at time 0, so the riemannian
    speed equals ``length``.
    """

    times: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    length: float
    initial_velocity: np.ndarray
    residual: float = 0.0

    def speeds(self, model):
        return mf.scale(model, self.points) * np.linalg.norm(self.velocities, axis=-1)

    def to_json(self):
        return {
            "length": self.length,
            "residual": self.residual,
            "samples": [
                {"t": float(t), "point": p.tolist(), "velocity": v.tolist()}
                for t, p, v in zip(self.times, self.points, self.velocities)
            ],
        }


def _domain_event(model):
    n = model.dimension
    if model.kind == mf.HALF_PLANE:
        def event(t, y):
            pts = y.reshape(-1, 2 * n)[:, n - 1]
            return float(np.min(pts) - mf.HALF_PLANE_FLOOR)
    elif model.kind == mf.DISK:
        def event(t, y):
            pts = y.reshape(-1, 2 * n)[:, :n]
            return float((1.0 - mf.DISK_MARGIN) ** 2 - np.max(np.sum(pts * pts, axis=1)))
    else:
        return None
    event.terminal = True
    event.direction = -1
    return event


def integrate(model, x0, v0, t, tol=DEFAULT_TOL, t_eval=None):
    """Integrate a batch of geodesics sharing one adaptive step sequence.

    x0 and v0 have shape (m, n).  Returns (x, v) at time t, or stacks of
    shape (len(t_eval), m, n) when t_eval is given.  Raises IntegrationError
    (with the exit time) if any trajectory leaves the chart domain.
    """
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    v0 = np.atleast_2d(np.asarray(v0, dtype=float))
    m, n = x0.shape
    if t == 0.0:
        if t_eval is not None:
            return (np.broadcast_to(x0, (len(t_eval), m, n)).copy(),
                    np.broadcast_to(v0, (len(t_eval), m, n)).copy())
        return x0.copy(), v0.copy()
    if model.kind == mf.EUCLIDEAN:
        ts = np.array([t] if t_eval is None else t_eval, dtype=float)
        xs = x0[None] + ts[:, None, None] * v0[None]
        vs = np.broadcast_to(v0, xs.shape).copy()
        return (xs[0], vs[0]) if t_eval is None else (xs, vs)

    def rhs(_, y):
        s = y.reshape(m, 2 * n)
        x, v = s[:, :n], s[:, n:]
        return np.concatenate([v, mf.geodesic_acceleration(model, x, v)], axis=1).ravel()

    y0 = np.concatenate([x0, v0], axis=1).ravel()
    event = _domain_event(model)
    # DOP853 with rtol = tol bounds local error per unit time at the tolerance
    sol = solve_ivp(rhs, (0.0, t), y0, method="DOP853", rtol=tol, atol=tol * 1e-2,
                    t_eval=t_eval, events=event)
    if sol.status == 1:
        raise IntegrationError(
            f"geodesic left the {model.kind} chart domain at t={sol.t_events[0][0]:.6g}",
            exit_time=float(sol.t_events[0][0]))
    if sol.status != 0:
        raise IntegrationError(f"geodesic integration failed: {sol.message}")
    ys = sol.y.T.reshape(-1, m, 2 * n)
    if t_eval is None:
        return ys[-1, :, :n].copy(), ys[-1, :, n:].copy()
    return ys[:, :, :n].copy(), ys[:, :, n:].copy()


def exp_ivp(model, v, t, tol=DEFAULT_TOL):
    """Return (gamma(t), gamma'(t)) for the geodesic with initial vector v."""
    base = mf.check_point(model, v.base)
    x, w = integrate(model, base[None], v.components[None], t, tol)
    return x[0], TangentVector(x[0], w[0])


def unit_tangent(model, base, direction):
    """Rescale a chart direction to riemannian unit length at base."""
    base = mf.check_point(model, base)
    direction = np.asarray(direction, dtype=float)
    nrm = mf.norm(model, base, direction)
    if nrm == 0.0:
        raise DegenerateError("zero direction")
    return TangentVector(base, direction / nrm)


def check_unit(model, v):
    err = abs(mf.norm(model, v.base, v.components) - 1.0)
    if err > UNIT_TOL:
        raise DegenerateError(f"tangent vector is not unit (|v|-1 = {err:.3g})")


def geodesic_flow(model, v, t, tol=DEFAULT_TOL):
    """The geodesic flow phi_t on the unit tangent bundle."""
    check_unit(model, v)
    x, w = exp_ivp(model, v, t, tol)
    drift = abs(mf.norm(model, x, w.components) - 1.0)
    if drift > 1e-8:
        raise IntegrationError(f"speed drifted by {drift:.3g} before renormalizing")
    return unit_tangent(model, x, w.components)


def distance_closed_form(model, x, y):
    """Closed-form distance for euclidean and hyperbolic charts; broadcasts."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    chord = np.sqrt(np.sum((x - y) ** 2, axis=-1))
    if model.kind == mf.EUCLIDEAN:
        return chord
    if model.kind == mf.HALF_PLANE:
        return 2.0 * np.arcsinh(chord / (2.0 * np.sqrt(x[..., -1] * y[..., -1])))
    if model.kind == mf.DISK:
        sx = 1.0 - np.sum(x * x, axis=-1)
        sy = 1.0 - np.sum(y * y, axis=-1)
        return 2.0 * np.arcsinh(chord / np.sqrt(sx * sy))
    raise ValueError(f"no closed-form distance for {model.kind}")


def _circle_tangent(x, y, w):
    """Unit tangent at x of the circle through x, y, w, pointing toward y.

    Falls back to the chord direction when the three points are collinear.
    """
    a, b = y - x, w - x
    aa, bb, ab = a @ a, b @ b, a @ b
    det = aa * bb - ab * ab
    chord = a / np.sqrt(aa)
    # below sin^2 = 1e-20 the arc and the chord agree to ~1e-10 in direction
    if det <= 1e-20 * aa * bb:
        return chord
    # circumcenter c = x + alpha a + beta b
    alpha = bb * (aa - ab) / (2.0 * det)
    beta = aa * (bb - ab) / (2.0 * det)
    r = -(alpha * a + beta * b)
    rn = np.linalg.norm(r)
    if not np.isfinite(rn) or rn == 0.0:
        return chord
    r /= rn
    t = a - (a @ r) * r
    return t / np.linalg.norm(t)


def log_closed_form(model, x, y):
    """Initial chart velocity of the unit-time geodesic from x to y.

    Hyperbolic geodesics are circles orthogonal to the ideal boundary, so the
    circle through x, y and the mirror image of x (reflection across the
    boundary plane, or inversion in the unit sphere) gives the direction.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if model.kind == mf.EUCLIDEAN:
        return y - x
    d = float(distance_closed_form(model, x, y))
    if d == 0.0:
        return np.zeros_like(x)
    if model.kind == mf.HALF_PLANE:
        mirror = x.copy()
        mirror[-1] = -mirror[-1]
    elif model.kind == mf.DISK:
        r2 = x @ x
        mirror = x / r2 if r2 > 1e-30 else None
    else:
        raise ValueError(f"no closed-form log map for {model.kind}")
    direction = (y - x) / np.linalg.norm(y - x) if mirror is None else _circle_tangent(x, y, mirror)
    return d * direction / mf.scale(model, x)


def _shoot(model, x, y, v, tol, max_iter=40):
    n = model.dimension
    eye = np.eye(n)

    def endpoint(vs):
        return integrate(model, np.broadcast_to(x, vs.shape), vs, 1.0, tol)[0]

    def residual_of(vv):
        try:
            return endpoint(vv[None])[0] - y
        except IntegrationError:
            return None

    res = residual_of(v)
    if res is None:
        v = y - x
        res = residual_of(v)
        if res is None:
            raise ConvergenceError("shooting seed leaves the chart domain")
    rnorm = np.linalg.norm(res)
    scale_y = max(1.0, np.linalg.norm(y))
    for _ in range(max_iter):
        if rnorm <= 1e-11 * scale_y:
            break
        h = JACOBIAN_STEP * max(1.0, np.linalg.norm(v))
        pts = endpoint(np.vstack([v[None], v[None] + h * eye]))
        jac = (pts[1:] - pts[0]).T / h
        step = np.linalg.solve(jac, -(pts[0] - y))
        lam = 1.0
        improved = False
        while lam > 1e-4:
            trial = v + lam * step
            r = residual_of(trial)
            if r is not None and np.linalg.norm(r) < rnorm:
                v, res, rnorm = trial, r, np.linalg.norm(r)
                improved = True
                break
            lam *= 0.5
        if not improved:
            break
    if rnorm > ENDPOINT_TOL:
        raise ConvergenceError(
            f"shooting did not converge (residual {rnorm:.3g})", residual=float(rnorm))
    return v, float(rnorm)


def connect_bvp(model, x, y, samples=33, tol=DEFAULT_TOL):
    """Geodesic segment from x to y by Newton shooting on the initial velocity.

    The seed is the chart straight line, or the closed-form hyperbolic
    solution when one exists.
    """
    x = mf.check_point(model, x)
    y = mf.check_point(model, y)
    if np.array_equal(x, y):
        raise DegenerateError("connect_bvp needs x != y")
    seed = log_closed_form(model, x, y) if model.has_closed_form else y - x
    limit = DISTANCE_CAP if model.has_closed_form else DISTANCE_CAP * 1.5
    if mf.norm(model, x, seed) > limit:
        raise RangeError("points are beyond the distance cap")
    v, res = _shoot(model, x, y, seed, tol)
    length = mf.norm(model, x, v)
    if length > DISTANCE_CAP:
        raise RangeError(f"distance {length:.6g} exceeds the cap {DISTANCE_CAP}")
    times = np.linspace(0.0, 1.0, max(2, samples))
    xs, vs = integrate(model, x[None], v[None], 1.0, tol, t_eval=times)
    pts = xs[:, 0]
    pts[-1] = y
    return GeodesicPath(times, pts, vs[:, 0], length, v, res)


def distance(model, x, y, method="auto"):
    """Riemannian distance.

    ``method="auto"`` uses the closed form on euclidean and hyperbolic
    charts and shooting otherwise; ``"shoot"`` forces the boundary-value
    route.
    """
    x = mf.check_point(model, x)
    y = mf.check_point(model, y)
    if np.array_equal(x, y):
        return 0.0
    if method == "auto" and model.has_closed_form:
        return float(distance_closed_form(model, x, y))
    return connect_bvp(model, x, y, samples=2).length


def initial_velocity(model, x, y, method="auto"):
    """Unit-time initial velocity from x toward y (the riemannian log map)."""
    x = mf.check_point(model, x)
    y = mf.check_point(model, y)
    if np.array_equal(x, y):
        return np.zeros_like(x)
    if method == "auto" and model.has_closed_form:
        return log_closed_form(model, x, y)
    return connect_bvp(model, x, y, samples=2).initial_velocity


def barycenter(model, x, y, t, method="auto"):
    """The point (1-t)x + ty at arc-length fraction t along [x, y]."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"barycenter parameter {t} outside [0, 1]")
    x = mf.check_point(model, x)
    y = mf.check_point(model, y)
    if t == 0.0 or np.array_equal(x, y):
        return x.copy()
    if t == 1.0:
        return y.copy()
    v = initial_velocity(model, x, y, method)
    return integrate(model, x[None], v[None], t)[0][0]


def barycenters(model, x, y, ts, method="auto"):
    """Points at several arc-length fractions along [x, y]; one integration."""
    x = mf.check_point(model, x)
    y = mf.check_point(model, y)
    ts = np.asarray(ts, dtype=float)
    if np.array_equal(x, y):
        return np.broadcast_to(x, (len(ts), len(x))).copy()
    v = initial_velocity(model, x, y, method)
    order = np.argsort(ts)
    xs, _ = integrate(model, x[None], v[None], float(ts[order][-1]) or 1.0,
                      t_eval=ts[order])
    out = np.empty((len(ts), len(x)))
    out[order] = xs[:, 0]
    out[ts == 0.0] = x
    out[ts == 1.0] = y
    return out


def sample_path(model, v, t_end, count) -> List[np.ndarray]:
    xs, _ = integrate(model, v.base[None], v.components[None], t_end,
                      t_eval=np.linspace(0.0, t_end, count))
    return xs[:, 0]
