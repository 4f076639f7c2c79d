import numpy as np
import pytest

from sphereflow import ambient as amb
from conftest import random_tangent, random_unit_vector


S2 = amb.round_sphere(2) if False else None  # dim >= 3 enforced below
S3 = amb.round_sphere(3)
E3 = amb.euclidean(3)


def test_dimension_guard():
    with pytest.raises(amb.AmbientError):
        amb.AmbientModel(amb.ROUND_SPHERE, 2)


def test_exp_quarter_great_circle():
    # sphere S^2 sits inside the n=3 model's equatorial coordinates
    p = np.array([1.0, 0.0, 0.0, 0.0])
    v = np.array([0.0, np.pi / 2, 0.0, 0.0])
    q = amb.exp_map(S3, p, v)
    assert np.allclose(q, [0.0, 1.0, 0.0, 0.0], atol=1e-14)


def test_exp_zero_vector_is_identity():
    p = random_unit_vector(np.random.default_rng(0), 4)
    q = amb.exp_map(S3, p, np.zeros(4))
    assert np.allclose(q, p, atol=0.0)


def test_exp_closed_form_small_arc():
    p = np.array([1.0, 0.0, 0.0, 0.0])
    s = 0.3
    v = np.array([0.0, s, 0.0, 0.0])
    q = amb.exp_map(S3, p, v)
    assert np.allclose(q, [np.cos(s), np.sin(s), 0.0, 0.0], atol=1e-15)
    assert abs(np.linalg.norm(q) - 1.0) < 1e-15


def test_exp_rejects_non_tangent():
    p = np.array([1.0, 0.0, 0.0, 0.0])
    with pytest.raises(amb.NonTangentError):
        amb.exp_map(S3, p, p * 0.1)


def test_log_inverts_exp():
    p = np.array([1.0, 0.0, 0.0, 0.0])
    q = np.array([0.0, 1.0, 0.0, 0.0])
    v = amb.log_map(S3, p, q)
    assert np.allclose(v, [0.0, np.pi / 2, 0.0, 0.0], atol=1e-14)
    assert np.allclose(amb.log_map(S3, p, p), 0.0)


def test_log_exp_round_trip_random():
    rng = np.random.default_rng(42)
    for _ in range(20):
        p = random_unit_vector(rng, 4)
        v = random_tangent(rng, p)
        v *= 0.7 / np.linalg.norm(v)
        back = amb.log_map(S3, p, amb.exp_map(S3, p, v))
        assert np.max(np.abs(back - v)) < 1e-9


def test_log_antipodal_raises():
    p = np.array([1.0, 0.0, 0.0, 0.0])
    with pytest.raises(amb.AntipodalError):
        amb.log_map(S3, p, -p)


def test_geodesic_distance_matches_log_norm():
    rng = np.random.default_rng(3)
    p = random_unit_vector(rng, 4)
    v = random_tangent(rng, p)
    v *= 1.2 / np.linalg.norm(v)
    q = amb.exp_map(S3, p, v)
    assert abs(amb.distance(S3, p, q) - 1.2) < 1e-12


def test_riemann_round_sphere_normalization():
    rng = np.random.default_rng(1)
    p = random_unit_vector(rng, 4)
    e = random_tangent(rng, p)
    e /= np.linalg.norm(e)
    v = random_tangent(rng, p)
    v -= (v @ e) * e
    v /= np.linalg.norm(v)
    assert abs(amb.riemann(S3, p, e, v, e, v) - 1.0) < 1e-12
    assert abs(amb.sectional(S3, p, e, v) - 1.0) < 1e-12


def test_riemann_flat_space_vanishes():
    rng = np.random.default_rng(2)
    vecs = [rng.standard_normal(3) for _ in range(4)]
    assert amb.riemann(E3, np.zeros(3), *vecs) == 0.0


def test_riemann_symmetries():
    rng = np.random.default_rng(7)
    p = random_unit_vector(rng, 5)
    s4 = amb.round_sphere(4)
    x, y, z, w = (random_tangent(rng, p) for _ in range(4))
    r = lambda a, b, c, d: amb.riemann(s4, p, a, b, c, d)
    assert abs(r(x, y, z, w) + r(y, x, z, w)) < 1e-12
    assert abs(r(x, y, z, w) - r(z, w, x, y)) < 1e-12
    bianchi = r(x, y, z, w) + r(y, z, x, w) + r(z, x, y, w)
    assert abs(bianchi) < 1e-12


def test_transport_identity_and_round_trip():
    rng = np.random.default_rng(11)
    p = random_unit_vector(rng, 4)
    v = random_tangent(rng, p)
    assert np.allclose(amb.parallel_transport(S3, p, p, v), v)
    q = random_unit_vector(rng, 4)
    w = amb.parallel_transport(S3, p, q, v)
    back = amb.parallel_transport(S3, q, p, w)
    assert np.max(np.abs(back - v)) < 1e-10


def test_transport_is_isometry():
    rng = np.random.default_rng(13)
    p = random_unit_vector(rng, 4)
    q = random_unit_vector(rng, 4)
    u = random_tangent(rng, p)
    v = random_tangent(rng, p)
    pu = amb.parallel_transport(S3, p, q, u)
    pv = amb.parallel_transport(S3, p, q, v)
    assert abs(pu @ pv - u @ v) < 1e-10
    assert abs(pu @ q) < 1e-10 and abs(pv @ q) < 1e-10


def test_transport_holonomy_octant_triangle():
    # geodesic triangle with three right angles on S^2 block: transporting
    # around it rotates tangent vectors by the enclosed area pi/2
    model = amb.round_sphere(3)
    a = np.array([1.0, 0.0, 0.0, 0.0])
    b = np.array([0.0, 1.0, 0.0, 0.0])
    c = np.array([0.0, 0.0, 1.0, 0.0])
    v = np.array([0.0, 1.0, 0.0, 0.0])       # tangent at a toward b
    w = amb.parallel_transport(model, a, b, v)
    w = amb.parallel_transport(model, b, c, w)
    w = amb.parallel_transport(model, c, a, w)
    cosang = np.clip(w @ v, -1.0, 1.0)
    assert abs(np.arccos(cosang) - np.pi / 2) < 1e-12


def test_conformal_model_restrictions_and_density():
    phi = lambda x: np.full(np.shape(x)[:-1], 0.3)
    model = amb.conformal_sphere3(phi)
    p = np.array([1.0, 0.0, 0.0, 0.0])
    with pytest.raises(amb.AmbientError):
        amb.exp_map(model, p, np.zeros(4))
    with pytest.raises(amb.AmbientError):
        amb.riemann(model, p, p, p, p, p)
    assert np.allclose(amb.metric_density(model, p), np.exp(0.6))


def test_euclidean_maps_are_affine():
    p = np.array([1.0, 2.0, 3.0])
    v = np.array([0.5, -1.0, 0.25])
    assert np.allclose(amb.exp_map(E3, p, v), p + v)
    assert np.allclose(amb.log_map(E3, p, p + v), v)
    assert np.allclose(amb.parallel_transport(E3, p, p + v, v), v)
