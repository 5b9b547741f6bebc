"""Intersections of weakly convex sets that are not weakly convex.

The scene: G1 is the closed complement of the stable horoball of a unit
vector v, G2 the closed complement of the unstable horoball of phi_eps(v),
and in three dimensions one extra horosphere tangent to a 2-plane through v.
In the hyperbolic plane the removed horoball of G2 is a euclidean disk
resting on the ideal boundary, so it cuts the strip G1 into two pieces; in
flat space the same recipe yields parallel half-planes and nothing breaks.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy import ndimage
from scipy.optimize import minimize

from . import convexity as C
from . import geodesy, horo
from . import manifold as mf
from . import sets as S
from .errors import DimensionError, EmptySetError, RangeError
from .manifold import TangentPlane

WITNESS_SEPARATION = 0.1
WITNESS_AGREEMENT = 1e-5


@dataclass
class TheoremScene:
    model: mf.MetricModel
    v: mf.TangentVector
    epsilon: float
    G1: S.ClosedSet
    G2: S.ClosedSet
    auxiliary: List[horo.HoroballSpec]
    I: S.ClosedSet
    search: S.Search
    plane: Optional[TangentPlane] = None
    normal_sign: int = 1

    def to_json(self):
        return {
            "model": self.model.to_json(),
            "v": {"base": self.v.base.tolist(), "dir": self.v.components.tolist()},
            "epsilon": self.epsilon,
            "G1": self.G1.to_json(),
            "G2": self.G2.to_json(),
            "auxiliary": [a.to_json() for a in self.auxiliary],
            "region": self.search.to_json(),
        }


def _default_plane(model, v, plane_direction=None):
    u = v.components
    if plane_direction is None:
        for axis in range(model.dimension):
            e = np.zeros(model.dimension)
            e[axis] = 1.0
            w = e - (e @ u) / (u @ u) * u
            if np.linalg.norm(w) > 1e-6:
                break
    else:
        e = np.asarray(plane_direction, dtype=float)
        w = e - (e @ u) / (u @ u) * u
    return TangentPlane(v.base, u, w / np.linalg.norm(w))


def build_theorem_scene(model, base, direction, epsilon, region, resolution,
                        normal_sign=1, plane_direction=None):
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    if model.dimension > 3:
        raise DimensionError("scenes are built for n = 2 and n = 3 only")
    v = geodesy.unit_tangent(model, base, direction)
    flowed = geodesy.geodesic_flow(model, v, epsilon) if epsilon > 0 else v
    g1 = S.HoroballComplement(horo.stable_horoball(model, v))
    g2 = S.HoroballComplement(horo.unstable_horoball(model, flowed))
    aux, plane, pieces = [], None, [g1, g2]
    if model.dimension == 3:
        plane = _default_plane(model, v, plane_direction)
        aux = [horo.tangent_horosphere(model, plane, normal_sign)]
        pieces += [S.horosphere(a) for a in aux]
    search = S.Search.box(region[0], region[1], resolution)
    return TheoremScene(model, v, float(epsilon), g1, g2, aux, S.intersect(*pieces),
                        search, plane, normal_sign)


def half_plane_scene(epsilon, resolution=512, region=((-2.0, 0.02), (2.0, 1.2))):
    return build_theorem_scene(mf.half_plane(), (0.0, 1.0), (0.0, 1.0), epsilon,
                               region, resolution)


def half_space_scene(epsilon, resolution=48, normal_sign=1,
                     region=((-1.5, -1.5, 0.02), (1.5, 1.5, 1.2))):
    return build_theorem_scene(mf.half_plane(3), (0.0, 0.0, 1.0), (0.0, 0.0, 1.0),
                               epsilon, region, resolution, normal_sign)


@dataclass
class Components:
    count: int
    labels: np.ndarray
    representatives: List[np.ndarray]
    interior_cells: int
    lower_dimensional: bool = False

    def to_json(self):
        return {"count": self.count, "interior_cells": self.interior_cells,
                "lower_dimensional": self.lower_dimensional,
                "representatives": [r.tolist() for r in self.representatives]}


def minimum_defect(model, s, search):
    """Smallest defect of s over the region (grid scan plus local polish)."""
    grid = search.grid().reshape(-1, len(search.lo))
    grid = grid[mf.in_domain(model, grid)]
    vals = s.defect(model, grid)
    best = float(vals.min())
    if best <= S.DELTA_BOUNDARY:
        return best
    bounds = list(zip(search.lo, search.hi))
    for i in np.argsort(vals)[:5]:
        res = minimize(lambda y: float(s.defect(model, y)), grid[i], method="Powell",
                       bounds=bounds, options={"xtol": 1e-12, "ftol": 1e-14})
        best = min(best, float(res.fun))
    return best


def is_empty(model, s, search):
    return minimum_defect(model, s, search) > S.DELTA_BOUNDARY


def connected_components(model, s, search):
    """Flood-fill component count of the membership grid.

    Uses 8-connectivity in the plane and 26-connectivity in space, counting
    only components that contain a strictly interior cell.  Sets with no
    interior cell at all (hyperplanes, horospheres) are counted on the band
    of cells whose center lies within half a cell diagonal of the set.
    """
    grid = search.grid()
    n = grid.shape[-1]
    domain = mf.in_domain(model, grid)
    safe = np.where(domain[..., None], grid, np.asarray(search.hi))
    defect = np.where(domain, s.defect(model, safe), np.inf)
    member = defect <= S.DELTA_BOUNDARY
    interior = defect < -S.DELTA_BOUNDARY
    structure = np.ones((3,) * n, dtype=bool)
    lower = False
    if not interior.any():
        if is_empty(model, s, search):
            raise EmptySetError("set is empty in the region")
        half_diag = 0.5 * float(np.linalg.norm(search.cell))
        member = defect <= half_diag * mf.scale(model, safe) * (1.0 + 1e-9)
        interior = member
        lower = True
    labels, total = ndimage.label(member, structure=structure)
    keep = np.unique(labels[interior & (labels > 0)])
    reps = []
    for lab in keep:
        mask = labels == lab
        idx = np.unravel_index(np.argmin(np.where(mask, defect, np.inf)), defect.shape)
        reps.append(grid[idx])
    relabel = np.zeros(total + 1, dtype=int)
    relabel[keep] = np.arange(1, len(keep) + 1)
    return Components(len(keep), relabel[labels], reps, int(interior.sum()), lower)


@dataclass
class WitnessReport:
    witness: Optional[dict]
    probes_checked: int
    best_gap: float = np.inf
    notes: List[str] = field(default_factory=list)

    def to_json(self):
        return {"witness": self.witness, "probes_checked": self.probes_checked,
                "best_gap": None if not np.isfinite(self.best_gap) else self.best_gap}


def axis_probes(model, scene, count=24, reach=2.0):
    """Points on the geodesic of v, from just behind phi_eps(v) backward."""
    times = np.linspace(scene.epsilon, -reach, count + 1)[1:]
    fwd = times[times > 0]
    back = -times[times <= 0]
    pts = []
    if len(fwd):
        xs, _ = geodesy.integrate(model, scene.v.base[None], scene.v.components[None],
                                  float(fwd.max()), t_eval=np.sort(fwd))
        pts.extend(xs[::-1, 0])
    if len(back):
        back_sorted = np.sort(back)
        t_end = float(back_sorted[-1]) or 1.0
        xs, _ = geodesy.integrate(model, scene.v.base[None], -scene.v.components[None],
                                  t_end, t_eval=back_sorted)
        pts.extend(xs[:, 0])
    return [p for p in pts if np.all(mf.in_domain(model, p))]


def _witness_from(x, res):
    best = res.distance
    close = [(p, d) for p, d in res.candidates if d <= best + WITNESS_AGREEMENT]
    for i in range(len(close)):
        for j in range(i + 1, len(close)):
            if np.linalg.norm(close[i][0] - close[j][0]) >= WITNESS_SEPARATION:
                return {"x": x.tolist(),
                        "minimizers": [close[i][0].tolist(), close[j][0].tolist()],
                        "distances": [close[i][1], close[j][1]]}
    return None


def nonuniqueness_witness(model, scene, probes=None, search=None):
    """Search the symmetry axis for a point with two far-apart projections."""
    search = search or scene.search.with_resolution(min(scene.search.resolution, 256))
    probes = axis_probes(model, scene) if probes is None else [np.asarray(p, float) for p in probes]
    report = WitnessReport(None, 0)
    for x in probes:
        if S.contains(model, scene.I, x):
            continue
        try:
            res = S.distance_to_set(model, scene.I, x, search)
        except (RangeError, EmptySetError) as exc:
            report.notes.append(str(exc))
            continue
        report.probes_checked += 1
        report.best_gap = min(report.best_gap, res.uniqueness_margin)
        w = _witness_from(x, res)
        if w is not None:
            report.witness = w
            return report
    return report


def certify_pieces(model, scene, resolution=256, probe_resolution=13):
    """Certificates for G1 and G2 separately on an enlarged search box."""
    lo = np.asarray(scene.search.lo, dtype=float)
    hi = np.asarray(scene.search.hi, dtype=float)
    width = hi - lo
    big_lo, big_hi = lo - 0.5 * width, hi + 2.0 * width
    probe_lo, probe_hi = lo + 0.1 * width, hi + 1.0 * width
    if model.kind == mf.HALF_PLANE:
        big_lo[-1] = lo[-1]
        probe_lo[-1] = max(lo[-1] + 0.15, 0.15)
    if model.kind == mf.EUCLIDEAN:
        probe_lo, probe_hi = lo, hi
    search = S.Search.box(big_lo, big_hi, resolution)
    out = {}
    for name, piece in (("G1", scene.G1), ("G2", scene.G2)):
        out[name] = C.certify_weak_convexity(model, piece, (probe_lo, probe_hi), resolution,
                                             probe_resolution, search)
    return out


def random_halfspaces(rng, count):
    normals = rng.standard_normal((count, 2))
    offsets = rng.uniform(0.2, 1.0, count)
    return S.intersect(*[S.HalfSpace(tuple(a), b) for a, b in zip(normals, offsets)])


def euclidean_control(epsilon, resolution=129, probe_resolution=9, seed=0, trials=3):
    """Flat analog of the scene; weak convexity survives intersection."""
    model = mf.euclidean()
    scene = build_theorem_scene(model, (0.0, 0.0), (0.0, 1.0), epsilon,
                                ((-2.0, -2.0), (2.0, 2.0)), resolution)
    report = {"epsilon": float(epsilon), "seed": seed}
    if is_empty(model, scene.I, scene.search):
        report.update({"empty": True, "components": 0, "certificate": None,
                       "witness": None})
    else:
        comps = connected_components(model, scene.I, scene.search)
        cert = C.certify_weak_convexity(model, scene.I, ((-1.5, -1.5), (1.5, 1.5)),
                                        resolution, probe_resolution,
                                        S.Search.box((-3, -3), (3, 3), resolution))
        wit = nonuniqueness_witness(model, scene,
                                    search=S.Search.box((-3, -3), (3, 3), resolution))
        report.update({"empty": False, "components": comps.count,
                       "certificate": cert.to_json(), "witness": wit.witness})
    rng = np.random.default_rng(seed)
    checks = []
    for _ in range(trials):
        s = random_halfspaces(rng, int(rng.integers(2, 4)))
        cert = C.certify_weak_convexity(model, s, ((-1.5, -1.5), (1.5, 1.5)), resolution,
                                        probe_resolution,
                                        S.Search.box((-6, -6), (6, 6), resolution))
        checks.append({"set": s.to_json(), "verdict": cert.verdict,
                       "witnesses": len(cert.witnesses)})
    report["halfspace_trials"] = checks
    return report


def hyperbolic_report(epsilon, resolution=512, certify=True, certify_resolution=256):
    scene = half_plane_scene(epsilon, resolution)
    comps = connected_components(scene.model, scene.I, scene.search)
    wit = nonuniqueness_witness(scene.model, scene)
    report = {"model": scene.model.to_json(), "epsilon": float(epsilon),
              "resolution": resolution, "components": comps.count,
              "interior_cells": comps.interior_cells,
              "representatives": [r.tolist() for r in comps.representatives],
              "witness": wit.witness}
    if certify:
        certs = certify_pieces(scene.model, scene, certify_resolution)
        report["G1"] = certs["G1"].verdict
        report["G2"] = certs["G2"].verdict
    return report, scene, comps
