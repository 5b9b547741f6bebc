"""Closed subsets of the chart and the metric projection onto them.

A closed set is an expression tree over a few primitives.  Every leaf has a
smooth signed function whose sublevel set {s <= 0} is the leaf (or whose
zero set is the leaf, for two-sided sublevels); intersections take the max
of the children's defects and unions the min.  The distance to a set is
found by scanning leaf boundaries on a grid, keeping every near-optimal
seed, and polishing each seed with SLSQP against the leaf constraints that
are active where the seed sits.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Tuple

import numpy as np
from scipy.optimize import minimize

from . import geodesy, horo
from . import manifold as mf
from .errors import EmptySetError, HadamardError, NonUniqueProjection, RangeError

DELTA_BOUNDARY = 1e-9
SEP_MIN = 1e-3
TOL_PROJ = 1e-6
BISECT_STEPS = 64


def _vec(x):
    return tuple(float(c) for c in x)


# -- catalog of smooth chart functions for Sublevel leaves -------------------

def _unit_disk(p):
    return np.sum(p * p, axis=-1) - 1.0


def _parabola(p):
    return p[..., 0] ** 2 - p[..., -1]


def _ellipse(p):
    return (p[..., 0] / 2.0) ** 2 + p[..., 1] ** 2 - 1.0


SUBLEVEL_CATALOG = {
    "unit_disk": _unit_disk,
    "parabola": _parabola,
    "ellipse": _ellipse,
}


# -- expression tree ---------------------------------------------------------

class ClosedSet:
    """Base class; subclasses are frozen, hashable dataclasses."""

    def defect(self, model, pts):
        raise NotImplementedError

    def leaves(self):
        return [self]

    def local_conjunction(self, model, y):
        """Leaves whose constraints describe the set near a member point y."""
        return [self]


class Leaf(ClosedSet):
    two_sided = False

    def signed(self, model, pts):
        raise NotImplementedError

    def defect(self, model, pts):
        s = self.signed(model, pts)
        return np.abs(s) if self.two_sided else s


@dataclass(frozen=True)
class Ball(Leaf):
    """Closed geodesic ball d(center, .) <= radius."""

    center: Tuple[float, ...]
    radius: float

    def signed(self, model, pts):
        pts = np.asarray(pts, dtype=float)
        c = np.asarray(self.center)
        if model.has_closed_form:
            return geodesy.distance_closed_form(model, c, pts) - self.radius
        flat = pts.reshape(-1, pts.shape[-1])
        out = np.array([geodesy.distance(model, c, q) for q in flat])
        return out.reshape(pts.shape[:-1]) - self.radius

    def to_json(self):
        return {"type": "ball", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class HoroballComplement(Leaf):
    """Closed complement {B >= level} of an open horoball."""

    ball: horo.HoroballSpec

    def signed(self, model, pts):
        return self.ball.level - horo.busemann(model, self.ball.functional, pts)[0]

    def to_json(self):
        out = self.ball.to_json()
        out["type"] = "horoball-complement"
        return out


@dataclass(frozen=True)
class ClosedHoroball(Leaf):
    """Closed horoball {B <= level}."""

    ball: horo.HoroballSpec

    def signed(self, model, pts):
        return horo.busemann(model, self.ball.functional, pts)[0] - self.ball.level

    def to_json(self):
        out = self.ball.to_json()
        out["type"] = "closed-horoball"
        return out


@dataclass(frozen=True)
class HalfSpace(Leaf):
    """Chart half-space a . x <= b (a is normalized on construction)."""

    a: Tuple[float, ...]
    b: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        nrm = np.linalg.norm(a)
        if nrm == 0:
            raise ValueError("half-space normal must be nonzero")
        object.__setattr__(self, "a", _vec(a / nrm))
        object.__setattr__(self, "b", float(self.b / nrm))

    def signed(self, model, pts):
        return np.asarray(pts, dtype=float) @ np.asarray(self.a) - self.b

    def to_json(self):
        return {"type": "halfspace", "a": list(self.a), "b": self.b}


@dataclass(frozen=True)
class Sublevel(Leaf):
    """Catalog function f: the set {f <= 0}, or {f = 0} when two_sided."""

    f: str
    two_sided: bool = False

    def signed(self, model, pts):
        return SUBLEVEL_CATALOG[self.f](np.asarray(pts, dtype=float))

    def to_json(self):
        return {"type": "sublevel", "f": self.f, "two_sided": self.two_sided}


@dataclass(frozen=True)
class Intersect(ClosedSet):
    args: Tuple[ClosedSet, ...]

    def defect(self, model, pts):
        return np.max([a.defect(model, pts) for a in self.args], axis=0)

    def leaves(self):
        return [leaf for a in self.args for leaf in a.leaves()]

    def local_conjunction(self, model, y):
        return [leaf for a in self.args for leaf in a.local_conjunction(model, y)]

    def to_json(self):
        return {"op": "intersect", "args": [a.to_json() for a in self.args]}


@dataclass(frozen=True)
class Union(ClosedSet):
    args: Tuple[ClosedSet, ...]

    def defect(self, model, pts):
        return np.min([a.defect(model, pts) for a in self.args], axis=0)

    def leaves(self):
        return [leaf for a in self.args for leaf in a.leaves()]

    def local_conjunction(self, model, y):
        best = min(self.args, key=lambda a: float(a.defect(model, y)))
        return best.local_conjunction(model, y)

    def to_json(self):
        return {"op": "union", "args": [a.to_json() for a in self.args]}


def intersect(*args):
    return Intersect(tuple(args))


def union(*args):
    return Union(tuple(args))


def horosphere(ball):
    """The horosphere {B = level} as the intersection of two closed pieces."""
    closed = horo.HoroballSpec(ball.functional, ball.level, False)
    opened = horo.HoroballSpec(ball.functional, ball.level, True)
    return intersect(ClosedHoroball(closed), HoroballComplement(opened))


# -- membership --------------------------------------------------------------

def contains(model, s, x):
    x = mf.check_point(model, x)
    return bool(s.defect(model, x) <= DELTA_BOUNDARY)


def members(model, s, pts):
    """Vectorized membership over the leading axes of pts."""
    return s.defect(model, pts) <= DELTA_BOUNDARY


# -- search configuration ----------------------------------------------------

@dataclass(frozen=True)
class Search:
    lo: Tuple[float, ...]
    hi: Tuple[float, ...]
    resolution: int = 128
    refine_iters: int = 200

    @classmethod
    def box(cls, lo, hi, resolution=128, refine_iters=200):
        return cls(_vec(lo), _vec(hi), int(resolution), int(refine_iters))

    def with_resolution(self, resolution):
        return Search(self.lo, self.hi, int(resolution), self.refine_iters)

    @property
    def cell(self):
        return (np.asarray(self.hi) - np.asarray(self.lo)) / (self.resolution - 1)

    def grid(self):
        axes = [np.linspace(a, b, self.resolution) for a, b in zip(self.lo, self.hi)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def to_json(self):
        return {"min": list(self.lo), "max": list(self.hi), "resolution": self.resolution}


@dataclass
class ProjectionResult:
    distance: float
    minimizers: List[np.ndarray]
    unique: bool
    # distinct refined local minima (sep_min apart) with their distances
    candidates: List[Tuple[np.ndarray, float]] = field(default_factory=list)
    degraded: bool = False

    @property
    def uniqueness_margin(self):
        """Distance gap to the best competing local minimum (inf if none)."""
        others = [d for p, d in self.candidates
                  if min(np.linalg.norm(p - m) for m in self.minimizers) >= SEP_MIN]
        return (min(others) - self.distance) if others else np.inf

    def to_json(self):
        return {"distance": self.distance, "unique": self.unique,
                "minimizers": [m.tolist() for m in self.minimizers],
                "degraded": self.degraded}


# -- boundary sampling -------------------------------------------------------

def _bisect(leaf, model, a, b, sa):
    """Vectorized bisection of leaf.signed on segments [a, b]."""
    for _ in range(BISECT_STEPS):
        mid = 0.5 * (a + b)
        sm = leaf.signed(model, mid)
        left = np.sign(sm) == np.sign(sa)
        a = np.where(left[:, None], mid, a)
        sa = np.where(left, sm, sa)
        b = np.where(left[:, None], b, mid)
    return 0.5 * (a + b)


@lru_cache(maxsize=64)
def _boundary_cached(model, s, search):
    grid = search.grid()
    n = grid.shape[-1]
    chunks = []
    for leaf in s.leaves():
        vals = leaf.signed(model, grid)
        on = np.abs(vals) <= 1e-12
        if np.any(on):
            chunks.append(grid[on])
        for axis in range(n):
            lo = [slice(None)] * n
            hi = [slice(None)] * n
            lo[axis] = slice(0, -1)
            hi[axis] = slice(1, None)
            va, vb = vals[tuple(lo)], vals[tuple(hi)]
            cross = (va * vb < 0)
            if not np.any(cross):
                continue
            a = grid[tuple(lo)][cross]
            b = grid[tuple(hi)][cross]
            chunks.append(_bisect(leaf, model, a, b, va[cross]))
    if not chunks:
        return np.empty((0, n))
    pts = np.concatenate(chunks)
    keep = s.defect(model, pts) <= 1e-8
    pts = pts[keep]
    return pts[np.lexsort(pts.T[::-1])] if len(pts) else pts


def boundary_sample(model, s, search):
    """Points of the boundary of s found by bisecting leaf sign changes."""
    if search.resolution < 8:
        raise ValueError("boundary sampling needs resolution >= 8 per axis")
    pts = _boundary_cached(model, s, search)
    if len(pts) == 0:
        raise EmptySetError("no boundary points of the set inside the region")
    return pts


def member_sample(model, s, search):
    """Grid members together with boundary samples."""
    grid = search.grid().reshape(-1, len(search.lo))
    inside = grid[members(model, s, grid)]
    try:
        bd = boundary_sample(model, s, search)
    except EmptySetError:
        bd = np.empty((0, len(search.lo)))
    out = np.concatenate([inside, bd])
    if len(out) == 0:
        raise EmptySetError("set has no members in the region")
    return out


# -- projection --------------------------------------------------------------

def _distances(model, x, pts):
    if model.has_closed_form:
        return geodesy.distance_closed_form(model, x, pts)
    return np.array([geodesy.distance(model, x, p) for p in pts])


def _cluster(points, radius):
    """Single-linkage clusters of points; returns a list of index arrays."""
    m = len(points)
    labels = -np.ones(m, dtype=int)
    current = 0
    for i in range(m):
        if labels[i] >= 0:
            continue
        labels[i] = current
        stack = [i]
        while stack:
            j = stack.pop()
            near = np.where((labels < 0) & (np.linalg.norm(points - points[j], axis=1) <= radius))[0]
            labels[near] = current
            stack.extend(near.tolist())
        current += 1
    return [np.where(labels == c)[0] for c in range(current)]


def _grad(fun, y, h=1e-7):
    g = np.empty_like(y)
    for i in range(len(y)):
        e = np.zeros_like(y)
        e[i] = h * max(1.0, abs(y[i]))
        g[i] = (fun(y + e) - fun(y - e)) / (2 * e[i])
    return g


def _snap(model, s, y, steps=4):
    """Newton steps on the defect to pull an SLSQP point (feasible only to
    the optimizer's tolerance) into the set itself."""
    def fun(z):
        return float(s.defect(model, z))
    for _ in range(steps):
        d = fun(y)
        if d <= 0.1 * DELTA_BOUNDARY or d > 1e-6:
            break
        g = _grad(fun, y)
        gg = float(g @ g)
        if gg == 0.0:
            break
        y = y - 2.0 * d * g / gg
    return y


def _refine(model, s, x, seed, search):
    leaves = s.local_conjunction(model, seed)
    cons = []
    for leaf in leaves:
        def fun(y, leaf=leaf):
            return -float(leaf.signed(model, y))
        if leaf.two_sided:
            cons.append({"type": "eq", "fun": fun, "jac": lambda y, f=fun: _grad(f, y)})
        else:
            cons.append({"type": "ineq", "fun": fun, "jac": lambda y, f=fun: _grad(f, y)})

    def obj(y):
        return float(_distances(model, x, y[None])[0])

    lo = np.asarray(search.lo, dtype=float)
    hi = np.asarray(search.hi, dtype=float)
    if model.kind == mf.HALF_PLANE:
        lo[-1] = max(lo[-1], 2 * mf.HALF_PLANE_FLOOR)
    res = minimize(obj, seed, jac=lambda y: _grad(obj, y), method="SLSQP",
                   bounds=list(zip(lo, hi)), constraints=cons,
                   options={"maxiter": search.refine_iters, "ftol": 1e-15})
    y = _snap(model, s, res.x)
    ok = bool(float(s.defect(model, y)) <= DELTA_BOUNDARY)
    if not ok or not np.all(np.isfinite(y)):
        return seed, obj(seed), True
    d = obj(y)
    if d > obj(seed):
        return seed, obj(seed), True
    return y, d, not res.success and res.status != 8


def distance_to_set(model, s, x, search):
    """Distance from x to s with every distinct minimizer found.

    Steps: scan leaf boundaries on the search grid, keep every seed within a
    grid-cell diameter of the best, polish one seed per seed cluster with
    SLSQP, then cluster polished minimizers at SEP_MIN.
    """
    x = mf.check_point(model, x)
    if contains(model, s, x):
        return ProjectionResult(0.0, [x.copy()], True, [(x.copy(), 0.0)])
    seeds = boundary_sample(model, s, search)
    dists = _distances(model, x, seeds)
    best = float(np.min(dists))
    cell = float(np.linalg.norm(search.cell))
    slack = cell * float(np.max(mf.scale(model, seeds[np.argmin(dists)][None])))
    near = np.where(dists <= best + 2.0 * slack)[0]
    groups = _cluster(seeds[near], 2.0 * cell)
    refined = []
    degraded = False
    for g in groups:
        idx = near[g][np.argmin(dists[near[g]])]
        y, d, bad = _refine(model, s, x, seeds[idx], search)
        degraded |= bad
        refined.append((y, d))
    refined.sort(key=lambda t: t[1])
    # merge refinement twins
    distinct = []
    for y, d in refined:
        if all(np.linalg.norm(y - z) > SEP_MIN for z, _ in distinct):
            distinct.append((y, d))
    dmin = distinct[0][1]
    mins = [y for y, d in distinct if d <= dmin + TOL_PROJ]
    mins.sort(key=lambda p: tuple(p))
    lo = np.asarray(search.lo)
    hi = np.asarray(search.hi)
    for y in mins:
        on_edge = np.any(np.isclose(y, lo, atol=1e-9, rtol=0) | np.isclose(y, hi, atol=1e-9, rtol=0))
        if on_edge:
            raise RangeError(
                f"minimizer {y.tolist()} lies on the search-region boundary; enlarge the region")
    return ProjectionResult(float(dmin), mins, len(mins) == 1, distinct, degraded)


def project(model, s, x, search):
    """The unique nearest point of s, or x itself when x is a member."""
    res = distance_to_set(model, s, x, search)
    if not res.unique:
        raise NonUniqueProjection(np.asarray(x, dtype=float), res.minimizers, res.distance)
    return res.minimizers[0]


def set_from_json(obj, model):
    """Parse the scene-JSON set grammar."""
    from .errors import SchemaError
    if not isinstance(obj, dict):
        raise SchemaError("set expression must be an object")
    op = obj.get("op")
    if op in ("intersect", "union"):
        args = tuple(set_from_json(a, model) for a in obj.get("args", []))
        if not args:
            raise SchemaError(f"{op} needs at least one argument")
        return Intersect(args) if op == "intersect" else Union(args)
    kind = obj.get("type")
    try:
        if kind == "ball":
            return Ball(_vec(obj["center"]), float(obj["radius"]))
        if kind == "halfspace":
            return HalfSpace(_vec(obj["a"]), float(obj["b"]))
        if kind == "sublevel":
            if obj["f"] not in SUBLEVEL_CATALOG:
                raise SchemaError(f"unknown sublevel function {obj['f']!r}")
            return Sublevel(obj["f"], bool(obj.get("two_sided", False)))
        if kind in ("horoball-complement", "closed-horoball", "horosphere"):
            ray = obj["ray"]
            f = horo.functional(model, ray["base"], ray["dir"])
            ball = horo.HoroballSpec(f, float(obj.get("level", 0.0)),
                                     bool(obj.get("open", kind == "horoball-complement")))
            if kind == "horoball-complement":
                return HoroballComplement(ball)
            if kind == "closed-horoball":
                return ClosedHoroball(ball)
            return horosphere(ball)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad {kind} primitive: {exc}") from exc
    except HadamardError:
        raise
    raise SchemaError(f"unknown set primitive {kind!r}")
