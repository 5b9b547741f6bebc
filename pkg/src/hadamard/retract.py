"""The retraction P onto a weakly convex set and the homotopy H(x, t).

H(x, t) slides x along the geodesic toward its projection, so H(., 0) is
the identity, H(., 1) = P and points of G never move.
"""

from dataclasses import dataclass

import numpy as np

from . import geodesy
from . import manifold as mf
from . import sets as S


@dataclass
class HomotopyTrace:
    start: np.ndarray
    ts: np.ndarray
    points: np.ndarray
    endpoint: np.ndarray

    def to_json(self):
        return {
            "start": self.start.tolist(),
            "endpoint": self.endpoint.tolist(),
            "samples": [{"t": float(t), "point": p.tolist()}
                        for t, p in zip(self.ts, self.points)],
        }


def retraction_P(model, s, x, search):
    x = mf.check_point(model, x)
    if S.contains(model, s, x):
        return x.copy()
    return S.project(model, s, x, search)


def homotopy_H(model, s, x, t, search):
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"homotopy parameter {t} outside [0, 1]")
    x = mf.check_point(model, x)
    if S.contains(model, s, x):
        return x.copy()
    foot = S.project(model, s, x, search)
    return geodesy.barycenter(model, x, foot, t)


def retract_trace(model, s, x, steps, search):
    if steps < 2:
        raise ValueError("a trace needs at least 2 steps")
    x = mf.check_point(model, x)
    ts = np.linspace(0.0, 1.0, steps)
    if S.contains(model, s, x):
        pts = np.broadcast_to(x, (steps, len(x))).copy()
        return HomotopyTrace(x.copy(), ts, pts, x.copy())
    foot = S.project(model, s, x, search)
    pts = geodesy.barycenters(model, x, foot, ts)
    return HomotopyTrace(x.copy(), ts, pts, foot)


def ball_samples(model, x, eps, count, seed=0):
    """Seeded points strictly inside the geodesic ball B(x, eps)."""
    x = mf.check_point(model, x)
    n = len(x)
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((count, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = eps * rng.uniform(0.0, 1.0, count) ** (1.0 / n) * (1.0 - 1e-9)
    vel = dirs * (radii / mf.scale(model, x))[:, None]
    pts, _ = geodesy.integrate(model, np.broadcast_to(x, vel.shape), vel, 1.0)
    return pts


def continuity_probe(model, s, x, eps, sample_count, search, seed=0):
    """max d(P(y), P(x)) over seeded y in B(x, eps), for x on the boundary.

    Continuity of P at boundary points rests on d(P(y), x) <=
    d(pi(y), y) + d(y, x) < 2 eps, so the result should stay below 2 eps.
    """
    x = mf.check_point(model, x)
    px = retraction_P(model, s, x, search)
    worst = 0.0
    for y in ball_samples(model, x, eps, sample_count, seed):
        worst = max(worst, geodesy.distance(model, retraction_P(model, s, y, search), px))
    return worst
