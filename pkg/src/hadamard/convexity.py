"""Numerical weak-convexity certification.

Certification is one-sided: a witness refutes weak convexity, while a clean
run only says the set is consistent with weak convexity at the probed
resolution.  Three tests run per probe: projection uniqueness, the horoball
condition (the open horoball of the ray from pi(x) through x misses G) and
the unit-gradient test for the distance function.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import geodesy, horo
from . import manifold as mf
from . import sets as S
from .errors import HadamardError, RangeError

TOL_HORO = 1e-4
KINK_THRESHOLD = 0.05
MOTZKIN_STEP = 1e-4
GEODESIC_GRID = 32
# barycenters come from integration; membership is judged with this slack
GEODESIC_MEMBER_TOL = 1e-7

CONSISTENT = "consistent-at-resolution"
VIOLATED = "violated"


@dataclass
class ConvexityCertificate:
    verdict: str
    resolution: int
    probe_resolution: int
    probes: int
    min_uniqueness_margin: float
    min_horobowl_margin: float
    gradient_report: float
    witnesses: List[dict] = field(default_factory=list)
    skipped: int = 0
    seed: int = 0
    search: Optional[S.Search] = None

    @property
    def violated(self):
        return self.verdict == VIOLATED

    def to_json(self):
        def num(v):
            return None if not np.isfinite(v) else float(v)
        return {
            "verdict": self.verdict,
            "resolution": self.resolution,
            "probe_resolution": self.probe_resolution,
            "probes": self.probes,
            "skipped": self.skipped,
            "seed": self.seed,
            "min_uniqueness_margin": num(self.min_uniqueness_margin),
            "min_horobowl_margin": num(self.min_horobowl_margin),
            "gradient_report": num(self.gradient_report),
            "search": self.search.to_json() if self.search else None,
            "witnesses": self.witnesses,
        }


def probe_grid(model, s, probe_region, probe_resolution):
    """Probe points of the region lying strictly outside s."""
    lo, hi = (np.asarray(c, dtype=float) for c in probe_region)
    axes = [np.linspace(a, b, probe_resolution) for a, b in zip(lo, hi)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))
    pts = pts[mf.in_domain(model, pts)]
    return pts[s.defect(model, pts) > S.DELTA_BOUNDARY]


def uniqueness_witness(x, res):
    """Witness data when two clusters >= 10 sep_min apart tie in distance."""
    close = [(p, d) for p, d in res.candidates if d <= res.distance + 2 * S.TOL_PROJ]
    for i in range(len(close)):
        for j in range(i + 1, len(close)):
            if np.linalg.norm(close[i][0] - close[j][0]) >= 10 * S.SEP_MIN:
                return {"test": "uniqueness", "probe": x.tolist(),
                        "minimizers": [close[i][0].tolist(), close[j][0].tolist()],
                        "distances": [close[i][1], close[j][1]]}
    return None


def check_projection_uniqueness(model, s, probe_region, resolution, probe_resolution=13,
                                search=None):
    search = search or S.Search.box(*probe_region, resolution)
    probes = probe_grid(model, s, probe_region, probe_resolution)
    if len(probes) == 0:
        raise HadamardError("probe region lies entirely inside the set")
    witnesses, margin, results, kept = [], np.inf, [], []
    skipped = 0
    for x in probes:
        try:
            res = S.distance_to_set(model, s, x, search)
        except RangeError:
            # nearest point falls outside the truncated search region
            skipped += 1
            continue
        results.append(res)
        kept.append(x)
        w = uniqueness_witness(x, res)
        if w:
            witnesses.append(w)
        else:
            margin = min(margin, res.uniqueness_margin)
    return {"probes": kept, "results": results, "witnesses": witnesses,
            "min_uniqueness_margin": margin, "skipped": skipped}


def _ray_functional(model, foot, x):
    v = geodesy.initial_velocity(model, foot, x)
    return horo.BusemannFunctional(geodesy.unit_tangent(model, foot, v))


def check_horobowl_condition(model, s, x, search, foot=None):
    """Smallest Busemann value over sampled members of G.

    The Busemann function is that of the ray from pi(x) through x,
    normalized at pi(x).  Returns (margin, tolerance, witness-or-None).
    """
    x = mf.check_point(model, x)
    if foot is None:
        foot = S.project(model, s, x, search)
    f = _ray_functional(model, foot, x)
    sample = S.member_sample(model, s, search)
    values, gap = horo.busemann(model, f, sample)
    values = np.atleast_1d(values)
    i = int(np.argmin(values))
    margin = float(values[i])
    tol = TOL_HORO + gap
    witness = None
    if margin < -tol:
        witness = {"test": "horobowl", "probe": x.tolist(), "foot": foot.tolist(),
                   "member": sample[i].tolist(), "busemann": margin}
    return margin, tol, witness


def distance_gradient_norm(model, s, x, search, h=MOTZKIN_STEP):
    x = mf.check_point(model, x)
    n = len(x)
    grad = np.empty(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        up = S.distance_to_set(model, s, x + e, search).distance
        dn = S.distance_to_set(model, s, x - e, search).distance
        grad[i] = (up - dn) / (2 * h)
    return float(np.linalg.norm(grad) / mf.scale(model, x))


def check_motzkin_gradient(model, s, x, search, h=MOTZKIN_STEP, dist=None):
    """|  |grad d(., G)|_g - 1 | at x by central differences."""
    x = mf.check_point(model, x)
    if dist is None:
        dist = S.distance_to_set(model, s, x, search).distance
    if dist <= 10 * h * float(mf.scale(model, x)):
        raise RangeError("probe too close to the boundary for the gradient stencil")
    return abs(distance_gradient_norm(model, s, x, search, h) - 1.0)


def certify_weak_convexity(model, s, probe_region, resolution, probe_resolution=13,
                           search=None, seed=0):
    """Run all three tests over a probe grid and aggregate a certificate."""
    search = search or S.Search.box(*probe_region, resolution)
    if search.resolution != resolution:
        search = search.with_resolution(resolution)
    part = check_projection_uniqueness(model, s, probe_region, resolution,
                                       probe_resolution, search)
    witnesses = list(part["witnesses"])
    flagged = {tuple(w["probe"]) for w in witnesses}
    horo_margin = np.inf
    worst_grad = 0.0
    skipped = part["skipped"]
    for k, (x, res) in enumerate(zip(part["probes"], part["results"])):
        if tuple(x.tolist()) in flagged or not res.unique:
            continue
        margin, _, w = check_horobowl_condition(model, s, x, search, res.minimizers[0])
        horo_margin = min(horo_margin, margin)
        if w:
            witnesses.append(w)
        if k % 4 == 0:
            try:
                dev = check_motzkin_gradient(model, s, x, search, dist=res.distance)
            except RangeError:
                skipped += 1
                continue
            worst_grad = max(worst_grad, dev)
            if dev > KINK_THRESHOLD:
                witnesses.append({"test": "motzkin", "probe": x.tolist(), "deviation": dev})
    return ConvexityCertificate(
        verdict=VIOLATED if witnesses else CONSISTENT,
        resolution=resolution,
        probe_resolution=probe_resolution,
        probes=len(part["probes"]),
        min_uniqueness_margin=part["min_uniqueness_margin"],
        min_horobowl_margin=horo_margin,
        gradient_report=worst_grad,
        witnesses=witnesses,
        skipped=skipped,
        seed=seed,
        search=search,
    )


def replay_witness(model, s, witness, search):
    """Re-run a witness's probe and return the failure class it reproduces."""
    x = np.asarray(witness["probe"], dtype=float)
    test = witness["test"]
    if test == "uniqueness":
        res = S.distance_to_set(model, s, x, search)
        return "uniqueness" if uniqueness_witness(x, res) else None
    if test == "horobowl":
        _, _, w = check_horobowl_condition(model, s, x, search)
        return "horobowl" if w else None
    if test == "motzkin":
        return "motzkin" if check_motzkin_gradient(model, s, x, search) > KINK_THRESHOLD else None
    raise ValueError(f"unknown witness test {test!r}")


def check_geodesic_convexity(model, s, pair_samples, search=None, seed=0):
    """Look for geodesic segments between members that leave the set.

    ``pair_samples`` is either an explicit list of (a, b) pairs or a count of
    pairs to draw from the set's members in ``search``.
    """
    if isinstance(pair_samples, int):
        pool = S.member_sample(model, s, search)
        if len(pool) < 2:
            raise HadamardError("fewer than two members found")
        rng = np.random.default_rng(seed)
        idx = [rng.choice(len(pool), size=2, replace=False) for _ in range(pair_samples)]
        pairs = [(pool[i], pool[j]) for i, j in idx]
    else:
        pairs = [(np.asarray(a, dtype=float), np.asarray(b, dtype=float)) for a, b in pair_samples]
    ts = np.linspace(0.0, 1.0, GEODESIC_GRID)
    violations = []
    for a, b in pairs:
        if np.array_equal(a, b):
            continue
        pts = geodesy.barycenters(model, a, b, ts)
        bad = s.defect(model, pts) > GEODESIC_MEMBER_TOL
        for t, p in zip(ts[bad], pts[bad]):
            violations.append({"a": a.tolist(), "b": b.tolist(), "t": float(t),
                               "point": p.tolist()})
    return {"pairs": len(pairs), "violations": violations, "convex": not violations}
