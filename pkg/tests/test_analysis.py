import numpy as np
import pytest

from sphereflow import analysis as an
from sphereflow import flow as fl
from sphereflow import surface as sf
from sphereflow.holder import holder_norms


def test_f_vanishes_on_equator(mesh4):
    eq = sf.embed_equator(mesh4, 3)
    assert abs(an.f_functional(eq)) < an.mesh_tolerance(eq)


def test_f_vanishes_on_latitudes(mesh4):
    for s in (0.2, 0.4):
        lat = sf.embed_latitude(mesh4, 3, s)
        assert abs(an.f_functional(lat)) < an.mesh_tolerance(lat)


def test_f_euclidean_sphere_closed_form(mesh3):
    # 4 pi r^2 + (1/r^2) 4 pi r^2 - 4 pi
    r = 0.5
    ball = sf.embed_euclidean_sphere(mesh3, radius=r)
    expected = 4 * np.pi * r * r + 4 * np.pi - 4 * np.pi
    assert abs(an.f_functional(ball) - np.pi) < an.mesh_tolerance(ball)
    assert abs(expected - np.pi) == 0.0


def test_umbilic_defect_latitudes_converges(mesh3, mesh4):
    vals = []
    for mesh in (mesh3, mesh4):
        lat = sf.embed_latitude(mesh, 3, 0.4)
        vals.append(an.umbilicity_and_pinch(lat)["umbilic_defect"])
    assert vals[1] < vals[0]
    assert vals[1] < 1e-6


def test_pinch_round_vs_flat(mesh3):
    eq = sf.embed_equator(mesh3, 3)
    assert an.umbilicity_and_pinch(eq)["curvature_pinch"] < 1e-12
    ball = sf.embed_euclidean_sphere(mesh3)
    assert abs(an.umbilicity_and_pinch(ball)["curvature_pinch"] - 1.0) < 1e-12


def test_ellipsoid_umbilic_defect_positive_and_bounded(mesh3):
    ball = sf.embed_euclidean_sphere(mesh3)
    ball.positions = ball.positions * np.array([1.0, 1.0, 1.25])
    rep = an.rigidity_report(ball)
    assert rep.umbilic_defect > 0.01
    assert rep.check_lower_bounds()


def test_perturbed_sphere_suite_lower_bounds(mesh3):
    suite = an.perturbed_sphere_suite(mesh3, 12, seed=11)
    kinds = set()
    for surf in suite:
        kinds.add(surf.ambient.kind)
        rep = an.rigidity_report(surf)
        assert rep.f_value >= -rep.eps_mesh
        assert rep.check_lower_bounds()
    assert len(kinds) == 2           # both ambients exercised


def test_latitude_oracle_identities():
    oracle = an.LatitudeOracle(0.1)
    assert oracle.self_consistency() < 1e-10
    t = np.linspace(-3.0, 0.5, 50)
    s = oracle.s(t)
    # excess vanishes identically: 4pi cos^2 s (1 + tan^2 s) - 4pi = 0
    f = oracle.area(t) * (1.0 + np.tan(s) ** 2) - 4.0 * np.pi
    assert np.max(np.abs(f)) < 1e-9
    assert abs(oracle.blow_up_time + 0.5 * np.log(np.sin(0.1))) == 0.0
    with pytest.raises(ValueError):
        oracle.s(oracle.blow_up_time + 0.1)


def test_gronwall_static_equator(equator3, frame3, operator3):
    u0 = np.zeros((equator3.n_vertices, 1))
    cfg = fl.FlowConfig(time_step=1e-3, horizon=0.02, record_every=5)
    traj = fl.run_mcf(equator3, frame3, u0, cfg, operator=operator3)
    _, res = an.gronwall_monotonicity(traj)
    assert np.max(np.abs(res)) < 1e-6


def test_gronwall_latitude_flow(equator3, frame3, operator3):
    u0 = np.full((equator3.n_vertices, 1), 0.1)
    cfg = fl.FlowConfig(time_step=1e-3, horizon=0.8, record_every=20)
    traj = fl.run_mcf(equator3, frame3, u0, cfg, operator=operator3)
    t, res = an.gronwall_monotonicity(traj)
    sup_h = traj.diagnostic("sup_h")
    eps_traj = an.mesh_tolerance(equator3) * (1.0 + 4.0 * np.max(sup_h) ** 2)
    assert np.max(res) <= eps_traj


def test_gronwall_needs_samples(equator3, frame3, operator3):
    u0 = np.zeros((equator3.n_vertices, 1))
    cfg = fl.FlowConfig(time_step=1e-3, horizon=0.002, record_every=1)
    traj = fl.run_mcf(equator3, frame3, u0, cfg, operator=operator3)
    short = fl.Trajectory(times=traj.times[:2], sections=traj.sections[:2],
                          diagnostics={k: v[:2]
                                       for k, v in traj.diagnostics.items()})
    with pytest.raises(ValueError):
        an.gronwall_monotonicity(short)


def test_holder_translation_invariance(mesh2):
    rng = np.random.default_rng(4)
    times = np.linspace(0, 0.5, 6)
    field = np.stack([an.smooth_random_field(mesh2, rng, amplitude=1.0)
                      for _ in times])
    n1 = holder_norms(field, times, mesh2, 0.5, pair_budget=20_000)
    n2 = holder_norms(field + 5.0, times, mesh2, 0.5, pair_budget=20_000)
    assert abs(n1.space - n2.space) < 1e-10
    assert abs(n1.time - n2.time) < 1e-10
    assert abs(n2.sup - (n1.sup + 5.0)) < 1e-10  # only the sup norm shifts


def test_mesh_tolerance_scales_with_level(mesh2, mesh3):
    assert an.mesh_tolerance(mesh3) < an.mesh_tolerance(mesh2)
    assert abs(an.mesh_tolerance(mesh3)
               - 10 * mesh3.mean_edge_length ** 2) == 0.0
