import numpy as np
import pytest

from hadamard import counterexample as X, manifold as mf, sets as S
from hadamard.errors import EmptySetError


@pytest.fixture(scope="module")
def scene03():
    return X.half_plane_scene(0.3, resolution=256)


def test_scene_pieces(scene03):
    H = scene03.model
    r = np.exp(0.3) / 2
    assert S.contains(H, scene03.G1, (0.5, 1.0)) and not S.contains(H, scene03.G1, (0.5, 1.01))
    assert not S.contains(H, scene03.G2, (0, r))
    assert S.contains(H, scene03.G2, (0, 2 * r + 1e-6)) and S.contains(H, scene03.G2, (r + 1e-6, r))
    assert scene03.auxiliary == []


def test_components_and_witness(scene03):
    comps = X.connected_components(scene03.model, scene03.I, scene03.search)
    assert comps.count == 2 and comps.interior_cells >= 100
    rep = X.nonuniqueness_witness(scene03.model, scene03)
    w = rep.witness
    assert w is not None
    a, b = (np.asarray(m) for m in w["minimizers"])
    assert np.linalg.norm(a - b) >= 0.1
    assert abs(w["distances"][0] - w["distances"][1]) <= 1e-5
    assert np.allclose(a, b * [-1, 1], atol=1e-5)


def test_mirrored_probe_gives_mirrored_minimizers(scene03):
    H = scene03.model
    search = scene03.search.with_resolution(256)
    x = np.array([0.25, 0.5])
    r1 = S.distance_to_set(H, scene03.I, x, search)
    r2 = S.distance_to_set(H, scene03.I, x * [-1, 1], search)
    assert r1.distance == pytest.approx(r2.distance, abs=1e-8)
    assert np.allclose(r1.minimizers[0], r2.minimizers[0] * [-1, 1], atol=1e-6)


def test_large_epsilon_still_two_components():
    sc = X.half_plane_scene(2.0, resolution=256)
    assert X.connected_components(sc.model, sc.I, sc.search).count == 2


def test_euclidean_scene_is_empty_for_positive_epsilon(E):
    sc = X.build_theorem_scene(E, (0, 0), (0, 1), 0.3, ((-2, -2), (2, 2)), 65)
    assert X.is_empty(E, sc.I, sc.search)
    with pytest.raises(EmptySetError):
        X.connected_components(E, sc.I, sc.search)


def test_euclidean_control_zero_epsilon():
    rep = X.euclidean_control(0.0, resolution=65, probe_resolution=5, trials=2)
    assert rep["components"] == 1 and rep["witness"] is None
    assert rep["certificate"]["verdict"] == "consistent-at-resolution"
    assert all(t["verdict"] == "consistent-at-resolution" for t in rep["halfspace_trials"])


@pytest.mark.parametrize("sign", [1, -1])
def test_three_dimensional_scene(sign):
    sc = X.half_space_scene(0.3, resolution=24, normal_sign=sign)
    assert len(sc.auxiliary) == 1
    comps = X.connected_components(sc.model, sc.I, sc.search)
    assert comps.count >= 1


def test_rejects_bad_input(H):
    with pytest.raises(ValueError):
        X.build_theorem_scene(H, (0, 1), (0, 1), -0.1, ((-2, 0.02), (2, 1.2)), 64)
