import numpy as np
import pytest

from sphereflow import flow as fl
from sphereflow.analysis import LatitudeOracle
from sphereflow.jacobi import eigen_spectrum


@pytest.fixture(scope="module")
def ancient3(equator3, frame3, operator3):
    vals, secs, _ = eigen_spectrum(operator3, 1)
    cfg = fl.FlowConfig(time_step=5e-4, horizon=1.0, record_every=20)
    traj, report = fl.construct_ancient(equator3, frame3, secs[0], cfg,
                                        operator=operator3)
    return traj, report


def test_ladder_converges(ancient3):
    _, report = ancient3
    assert report.converged
    assert report.ladder_differences[-1] < 1e-4


def test_ladder_differences_contract(ancient3):
    _, report = ancient3
    diffs = report.ladder_differences
    for a, b in zip(diffs, diffs[1:]):
        assert b < 0.5 * a       # geometric contraction between rungs


def test_growth_exponent_matches_eigenvalue(ancient3):
    _, report = ancient3
    assert abs(report.lambda0 + 2.0) < 0.05
    target = -report.lambda0
    assert abs(report.growth_exponent - target) / target < 0.05


def test_remainder_exponent_sharp(ancient3):
    _, report = ancient3
    # nonlinear remainder after subtracting the linear twin: >= 3, and the
    # odd symmetry of the model makes the sharp value 6
    assert report.remainder_exponent >= 3.0
    assert abs(report.remainder_exponent - 6.0) / 6.0 < 0.10
    assert report.remainder_vs_eigen_exponent >= 3.0


def test_matches_latitude_oracle(ancient3):
    traj, report = ancient3
    # sup|U|(a0) = 0.05, so sin s(t) = 0.05 e^{2 (t - a0)} while resolved
    s_mean = np.array([np.mean(np.linalg.norm(s, axis=1))
                       for s in traj.sections])
    target = 0.05 * np.exp(-report.lambda0 * (traj.times - report.a0))
    mask = s_mean <= 0.5
    rel = np.abs(np.sin(s_mean[mask]) - target[mask]) / target[mask]
    assert np.max(rel) < 0.01


def test_backward_limit_is_eigendirection(ancient3):
    # U(t) / ||U(t)|| at the earliest time is the constant eigensection
    traj, _ = ancient3
    first = traj.sections[0]
    first = first / np.max(np.abs(first))
    assert first.std() < 1e-6


def test_trajectory_remainder_metadata(ancient3):
    traj, report = ancient3
    z = traj.meta["remainder_l2"]
    assert z.shape == traj.times.shape
    # remainder grows toward the ceiling
    assert z[-1] > z[len(z) // 2]


def test_rejects_non_eigensection(equator3, frame3, operator3):
    rng = np.random.default_rng(0)
    bad = rng.standard_normal((equator3.n_vertices, 1))
    cfg = fl.FlowConfig(time_step=5e-4, horizon=1.0, record_every=20)
    with pytest.raises(ValueError):
        fl.construct_ancient(equator3, frame3, bad, cfg, operator=operator3)


def test_rejects_positive_eigenvalue_direction(equator3, frame3, operator3):
    # an l=2 eigensection has positive eigenvalue: no ancient flow out of it
    vals, secs, _ = eigen_spectrum(operator3, 9)
    stable = secs[8]
    assert vals[8] > 1.0
    cfg = fl.FlowConfig(time_step=5e-4, horizon=1.0, record_every=20)
    with pytest.raises(ValueError):
        fl.construct_ancient(equator3, frame3, stable, cfg,
                             operator=operator3)


def test_record_grid_must_divide_ladder(equator3, frame3, operator3):
    vals, secs, _ = eigen_spectrum(operator3, 1)
    cfg = fl.FlowConfig(time_step=5e-4, horizon=1.0, record_every=7)
    with pytest.raises(ValueError):
        fl.construct_ancient(equator3, frame3, secs[0], cfg,
                             operator=operator3,
                             ladder=fl.LadderConfig(delta_a=1.0))
