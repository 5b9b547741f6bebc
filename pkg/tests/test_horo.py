import numpy as np
import pytest

from hadamard import geodesy, horo, manifold as mf
from hadamard.errors import DimensionError
from hadamard.manifold import TangentPlane


def test_busemann_examples(E, H, D):
    f = horo.functional(H, (0, 1), (0, 1))
    assert horo.busemann_closed_form(H, f, (0, 2)) == pytest.approx(-np.log(2))
    assert horo.busemann_closed_form(H, f, (0, 4)) == pytest.approx(-np.log(4))
    assert horo.busemann_numeric(H, f, np.array([0.0, 2.0])).value == pytest.approx(-np.log(2), abs=1e-5)
    g = horo.functional(E, (0, 0), (1, 0))
    assert horo.busemann_closed_form(E, g, (3, 4)) == pytest.approx(-3)
    assert horo.busemann_numeric(E, g, np.array([3.0, 4.0])).value == pytest.approx(-3, abs=1e-4)
    k = horo.functional(D, (0, 0), (1, 0))
    assert horo.busemann_closed_form(D, k, (0, 0)) == pytest.approx(0)
    assert horo.busemann_closed_form(D, k, (0.5, 0)) == pytest.approx(-np.log(3))


@pytest.mark.parametrize("model,base,direction", [
    (mf.half_plane(), (0.3, 0.8), (1.0, 0.4)),
    (mf.disk(), (0.2, -0.1), (-0.3, 0.5)),
    (mf.euclidean(), (1.0, 2.0), (0.6, -0.8)),
])
def test_ray_points_decay_at_unit_rate(model, base, direction):
    f = horo.functional(model, base, direction)
    for s in (0.5, 2.0, 3.0):
        x = horo.ray_point(model, f, s)
        assert horo.busemann_closed_form(model, f, x) == pytest.approx(-s, abs=1e-8)


def test_ideal_points(H, D):
    up = geodesy.unit_tangent(H, (0, 1), (0, 1))
    assert horo.ideal_point(H, up) is None
    v = geodesy.unit_tangent(H, (0, 1), (1, 0))
    assert np.allclose(horo.ideal_point(H, v), (1, 0))
    w = geodesy.unit_tangent(D, (0, 0), (0, 1))
    assert np.allclose(horo.ideal_point(D, w), (0, 1))


def test_numeric_matches_closed_form_off_axis(H, D):
    rng = np.random.default_rng(5)
    for model, f in ((H, horo.functional(H, (0.2, 1.3), (-0.5, 0.7))),
                     (D, horo.functional(D, (0.1, 0.2), (0.4, 0.1)))):
        for _ in range(4):
            x = rng.uniform(-0.5, 0.5, 2)
            if model.kind == mf.HALF_PLANE:
                x[1] += 1.0
            r = horo.busemann_numeric(model, f, x)
            assert r.value == pytest.approx(float(horo.busemann_closed_form(model, f, x)), abs=1e-4)


def test_numeric_busemann_on_conformal_metric_is_one_lipschitz():
    m = mf.conformal("radial_log")
    f = horo.functional(m, (0, 0), (1, 0))
    x, y = np.array([0.3, 0.4]), np.array([-0.2, 0.5])
    bx = horo.busemann_numeric(m, f, x).value
    by = horo.busemann_numeric(m, f, y).value
    assert abs(bx - by) <= geodesy.distance(m, x, y) + 1e-4


def test_horoball_conventions(E, H):
    v = geodesy.unit_tangent(H, (0, 1), (0, 1))
    stable = horo.stable_horoball(H, v)
    assert horo.horoball_contains(H, stable, (0.3, 1.5))
    assert not horo.horoball_contains(H, stable, (0.3, 1.0))
    assert not horo.horoball_contains(H, stable, (5.0, 0.5))

    eps = 0.3
    w = geodesy.geodesic_flow(H, v, eps)
    unstable = horo.unstable_horoball(H, w)
    r = np.exp(eps) / 2
    for p, inside in (((0, r), True), ((0, 2 * r - 1e-3), True), ((r - 1e-3, r), True),
                      ((0, 2 * r + 1e-3), False), ((r + 1e-3, r), False)):
        assert horo.horoball_contains(H, unstable, p) == inside

    e = geodesy.unit_tangent(E, (0, 0), (1, 0))
    assert horo.horoball_contains(E, horo.stable_horoball(E, e), (0.1, 5))
    assert not horo.horoball_contains(E, horo.stable_horoball(E, e), (-0.1, 5))
    assert horo.horoball_contains(E, horo.unstable_horoball(E, e), (-0.1, 5))


def test_tangent_horosphere():
    E3 = mf.euclidean(3)
    ball = horo.tangent_horosphere(E3, TangentPlane((0, 0, 0), (1, 0, 0), (0, 1, 0)))
    for p in ((1, 2, 0), (-3, 0.5, 0)):
        assert horo.busemann(E3, ball.functional, np.array(p, float))[0] == pytest.approx(0)
    assert horo.busemann(E3, ball.functional, np.array([0, 0, 1.0]))[0] == pytest.approx(-1)
    with pytest.raises(DimensionError):
        horo.tangent_horosphere(mf.euclidean(), TangentPlane((0, 0), (1, 0), (0, 1)))
