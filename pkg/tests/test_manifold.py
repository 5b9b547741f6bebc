import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hadamard import manifold as mf
from hadamard.errors import ChartDomainError, DegenerateError, DimensionError, SchemaError
from hadamard.manifold import TangentPlane

MODELS = [mf.euclidean(), mf.half_plane(), mf.disk(), mf.conformal("quadratic"),
          mf.conformal("radial_log"), mf.conformal("log_cosh"),
          mf.euclidean(3), mf.half_plane(3), mf.disk(3), mf.conformal("radial_log", 3)]


def _point(model, rng):
    n = model.dimension
    if model.kind == mf.HALF_PLANE:
        p = rng.uniform(-1, 1, n)
        p[-1] = rng.uniform(0.3, 2.0)
        return p
    if model.kind == mf.DISK:
        return rng.uniform(-0.5, 0.5, n)
    return rng.uniform(-1, 1, n)


def _metric(model, p):
    return mf.scale(model, p) ** 2 * np.eye(model.dimension)


def _fd_christoffel(model, p, h=1e-5):
    n = model.dimension
    dg = np.empty((n, n, n))  # dg[l, i, j] = d_l g_ij
    for l in range(n):
        e = np.zeros(n)
        e[l] = h
        dg[l] = (_metric(model, p + e) - _metric(model, p - e)) / (2 * h)
    ginv = np.linalg.inv(_metric(model, p))
    gam = np.empty((n, n, n))
    for k in range(n):
        for i in range(n):
            for j in range(n):
                gam[k, i, j] = 0.5 * sum(ginv[k, l] * (dg[i, j, l] + dg[j, i, l] - dg[l, i, j])
                                         for l in range(n))
    return gam


def _fd_riemann_K(model, p, u, v, h=1e-4):
    """Sectional curvature from R^l_ijk built on finite-differenced Christoffels."""
    n = model.dimension
    G = mf.christoffel(model, p)
    dG = np.empty((n, n, n, n))  # dG[m, k, i, j] = d_m Gamma^k_ij
    for m in range(n):
        e = np.zeros(n)
        e[m] = h
        dG[m] = (mf.christoffel(model, p + e) - mf.christoffel(model, p - e)) / (2 * h)
    # R^l_{ijk} = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik
    R = (np.einsum("iljk->lijk", dG)
         - np.einsum("jlik->lijk", dG)
         + np.einsum("lim,mjk->lijk", G, G)
         - np.einsum("ljm,mik->lijk", G, G))
    g = _metric(model, p)
    Rlow = np.einsum("ml,lijk->mijk", g, R)
    num = np.einsum("mijk,i,j,k,m->", Rlow, u, v, v, u)
    den = (u @ g @ u) * (v @ g @ v) - (u @ g @ v) ** 2
    return num / den


def test_metric_tensor_examples():
    assert np.allclose(mf.metric_tensor(mf.euclidean(), (3, 4)), np.eye(2))
    assert np.allclose(mf.metric_tensor(mf.half_plane(), (0, 2)), np.eye(2) / 4)
    assert np.allclose(mf.metric_tensor(mf.conformal("zero"), (1, 1)), np.eye(2))


def test_domain_errors():
    with pytest.raises(ChartDomainError):
        mf.metric_tensor(mf.half_plane(), (0, 0))
    with pytest.raises(ChartDomainError):
        mf.metric_tensor(mf.half_plane(), (0, -1))
    with pytest.raises(ChartDomainError):
        mf.metric_tensor(mf.disk(), (1.0, 0.0))
    with pytest.raises(DimensionError):
        mf.metric_tensor(mf.euclidean(), (1, 2, 3))
    with pytest.raises(SchemaError):
        mf.MetricModel("spherical")
    with pytest.raises(SchemaError):
        mf.conformal("nonexistent")
    with pytest.raises(DimensionError):
        mf.MetricModel("euclidean", 4)


def test_christoffel_examples():
    assert np.all(mf.christoffel(mf.euclidean(), (5, -2)) == 0)
    assert np.all(mf.christoffel(mf.conformal("zero"), (1, 1)) == 0)
    G = mf.christoffel(mf.half_plane(), (0, 1))
    expected = np.zeros((2, 2, 2))
    expected[0, 0, 1] = expected[0, 1, 0] = -1
    expected[1, 0, 0] = 1
    expected[1, 1, 1] = -1
    assert np.allclose(G, expected)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: f"{m.kind}-{m.phi}-{m.dimension}")
def test_christoffel_matches_metric_derivatives(model, rng):
    for _ in range(5):
        p = _point(model, rng)
        G = mf.christoffel(model, p)
        assert np.array_equal(G, np.swapaxes(G, 1, 2))
        assert np.allclose(G, _fd_christoffel(model, p), atol=1e-6)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: f"{m.kind}-{m.phi}-{m.dimension}")
def test_sectional_curvature_matches_riemann_tensor(model, rng):
    n = model.dimension
    for _ in range(4):
        p = _point(model, rng)
        u, v = rng.standard_normal(n), rng.standard_normal(n)
        K = mf.sectional_curvature(model, TangentPlane(p, u, v))
        assert K == pytest.approx(_fd_riemann_K(model, p, u, v), abs=1e-5)


def test_sectional_examples():
    plane = TangentPlane((0.3, -0.2), (1, 0), (0, 1))
    assert mf.sectional_curvature(mf.euclidean(), plane) == 0.0
    assert mf.sectional_curvature(mf.half_plane(), TangentPlane((0, 1), (1, 2), (3, 1))) == \
        pytest.approx(-1.0, abs=1e-12)
    p = np.array([0.4, -0.7])
    K = mf.sectional_curvature(mf.conformal("quadratic"), TangentPlane(p, (1, 0), (0, 1)))
    assert K == pytest.approx(-4 * np.exp(-2 * p @ p), rel=1e-12)
    with pytest.raises(DegenerateError):
        mf.sectional_curvature(mf.half_plane(), TangentPlane((0, 1), (1, 1), (2, 2)))


def test_verify_curvature_bounds_examples():
    rep = mf.verify_curvature_bounds(mf.euclidean(), ((-1, -1), (1, 1)), 5)
    assert rep.K_min == rep.K_max == 0 and rep.all_in_bounds
    rep = mf.verify_curvature_bounds(mf.half_plane(), ((-1, 0.5), (1, 2)), 7)
    assert rep.K_min == pytest.approx(-1, abs=1e-12) and rep.K_max == pytest.approx(-1, abs=1e-12)
    assert rep.all_in_bounds
    rep = mf.verify_curvature_bounds(mf.conformal("neg_quadratic_x", k=1.0), ((-1, -1), (1, 1)), 5)
    assert not rep.all_in_bounds and rep.K_max > 0
    with pytest.raises(ChartDomainError):
        mf.verify_curvature_bounds(mf.half_plane(), ((-1, -0.5), (1, 2)), 5)


def test_three_dimensional_curvature_samples_random_planes():
    rep = mf.verify_curvature_bounds(mf.half_plane(3), ((-1, -1, 0.5), (1, 1, 2)), 3)
    assert rep.samples == 4 * 27
    assert abs(rep.K_min + 1) < 1e-9 and abs(rep.K_max + 1) < 1e-9


def test_conformal_default_bound_is_observed_max():
    m = mf.conformal("quadratic")
    assert m.curvature_bound == pytest.approx(2.0)  # K = -4 at the origin


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(0.05, 5), st.floats(-3, 3), st.floats(-3, 3))
def test_geodesic_acceleration_is_christoffel_contraction(x, y, a, b):
    model = mf.half_plane()
    p, v = np.array([x, y]), np.array([a, b])
    G = mf.christoffel(model, p)
    expected = -np.einsum("kij,i,j->k", G, v, v)
    assert np.allclose(mf.geodesic_acceleration(model, p, v), expected, atol=1e-9 * (1 + v @ v) / y)
