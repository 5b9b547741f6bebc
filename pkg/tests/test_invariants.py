import numpy as np
import pytest

from hadamard import geodesy, horo, manifold as mf, sets as S
from hadamard.errors import IntegrationError
from hadamard.manifold import TangentPlane

CATALOG = [mf.euclidean(), mf.half_plane(), mf.disk()] + [mf.conformal(p) for p in mf.PHI_CATALOG]


def _points(model, rng, count):
    if model.kind == mf.HALF_PLANE:
        p = rng.uniform(-2, 2, (count, 2))
        p[:, 1] = rng.uniform(0.05, 3, count)
        return p
    if model.kind == mf.DISK:
        return rng.uniform(-0.7, 0.7, (count, 2))
    return rng.uniform(-2, 2, (count, 2))


@pytest.mark.parametrize("model", CATALOG, ids=lambda m: m.phi or m.kind)
def test_metric_tensor_symmetric(model, rng):
    for p in _points(model, rng, 1000):
        g = mf.metric_tensor(model, p)
        assert np.array_equal(g, g.T)


def test_sectional_curvature_basis_invariance(rng):
    for model in (mf.conformal("radial_log", 3), mf.disk(3), mf.conformal("quadratic")):
        n = model.dimension
        for _ in range(20):
            p = rng.uniform(-0.5, 0.5, n)
            u, v = rng.standard_normal((2, n))
            a, b, c, d = rng.standard_normal(4)
            K1 = mf.sectional_curvature(model, TangentPlane(p, u, v))
            K2 = mf.sectional_curvature(model, TangentPlane(p, a * u + b * v, c * u + d * v))
            assert K1 == pytest.approx(K2, abs=1e-9)


def test_speed_conservation(rng):
    for model in (mf.half_plane(), mf.conformal("log_cosh"), mf.conformal("radial_log")):
        for _ in range(5):
            x = rng.uniform(-0.5, 0.5, 2)
            if model.kind == mf.HALF_PLANE:
                x[1] = 1.0
            v = geodesy.unit_tangent(model, x, rng.standard_normal(2))
            ts = np.linspace(0, 10, 21)
            try:
                xs, vs = geodesy.integrate(model, x[None], v.components[None], 10.0, t_eval=ts)
            except IntegrationError:
                continue  # rays hitting the chart floor are covered elsewhere
            speeds = mf.scale(model, xs[:, 0]) * np.linalg.norm(vs[:, 0], axis=1)
            assert np.max(np.abs(speeds - 1)) <= 1e-6


def test_flow_composition(H):
    v = geodesy.unit_tangent(H, (0.2, 0.8), (1.0, 0.5))
    for s in (0.1, 0.5, 1.0):
        for t in (0.1, 0.5, 1.0):
            a = geodesy.geodesic_flow(H, geodesy.geodesic_flow(H, v, t), s)
            b = geodesy.geodesic_flow(H, v, s + t)
            assert np.linalg.norm(a.base - b.base) <= 1e-6


def test_stable_unstable_duality(H, rng):
    v = geodesy.unit_tangent(H, (0.3, 1.2), (0.4, -1.0))
    a = horo.stable_horoball(H, -v)
    b = horo.unstable_horoball(H, v)
    pts = _points(H, rng, 1000)
    assert np.array_equal(horo.horoball_contains(H, a, pts), horo.horoball_contains(H, b, pts))


def test_busemann_one_lipschitz(rng):
    for model in (mf.half_plane(), mf.disk(), mf.euclidean()):
        f = horo.functional(model, _points(model, rng, 1)[0], rng.standard_normal(2))
        x, y = _points(model, rng, 2), _points(model, rng, 2)
        for p, q in zip(x, y):
            gap = abs(float(horo.busemann_closed_form(model, f, p) - horo.busemann_closed_form(model, f, q)))
            assert gap <= geodesy.distance(model, p, q) + 1e-12


def test_projection_invariants(E, H, rng):
    G = S.set_from_json({"type": "horoball-complement", "ray": {"base": [0, 1], "dir": [0, 1]}}, H)
    search = S.Search.box((-3, 0.05), (3, 4), 64)
    for x in rng.uniform((-1, 1.2), (1, 3), (10, 2)):
        r = S.distance_to_set(H, G, x, search)
        p = r.minimizers[0]
        assert np.allclose(S.project(H, G, p, search), p, atol=1e-6)
        assert abs(r.distance - geodesy.distance(H, x, p)) <= S.TOL_PROJ
        finer = S.distance_to_set(H, G, x, search.with_resolution(128))
        assert finer.distance <= r.distance + S.TOL_PROJ


def test_nonexpansive_on_convex_euclidean_sets(E, rng):
    s = S.intersect(S.Ball((0.0, 0.0), 1.0), S.HalfSpace((1.0, 1.0), 0.5))
    search = S.Search.box((-3, -3), (3, 3), 96)
    pts = rng.uniform(-2, 2, (20, 2))
    proj = [S.project(E, s, p, search) for p in pts]
    for i in range(0, 20, 2):
        assert (np.linalg.norm(proj[i] - proj[i + 1])
                <= np.linalg.norm(pts[i] - pts[i + 1]) + 1e-6)
