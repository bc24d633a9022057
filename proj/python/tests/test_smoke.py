import math

import numpy as np
import pytest

import kahler


def test_scalar_flat_value_and_boundary():
    phi = kahler.scalar_flat_profile(2, 1.0)
    assert phi.value(2.0) == pytest.approx(5.0 / 12.0, rel=1e-15)
    report = kahler.check_boundary_extension(phi, 1e-12)
    assert report["extends"]
    assert not kahler.check_boundary_extension(kahler.MomentumProfile.linear(1.0, 0.5))["extends"]


def test_profile_is_vectorized_and_round_trips_through_json():
    phi = kahler.exponential_profile(2, 3.0)
    np.testing.assert_allclose(phi(np.array([1.0, 2.0, 4.0])), [0.5, 1.0, 2.0])
    back = kahler.profile_from_json(phi.to_json())
    assert back.family == "linear"
    assert math.isinf(back.tau_max)


def test_curvature_vanishes_on_scalar_flat_profile():
    tau = list(np.geomspace(1.0, 1e3, 50))
    s = kahler.scalar_curvature(kahler.scalar_flat_profile(3, 2.0), 3, 2.0, tau)
    assert max(abs(v) for v in s) < 1e-10


def test_prescribed_solution_matches_closed_form():
    tau, phi, truncated = kahler.solve_prescribed_scalar(2, 1.5, lambda t: 0.0, 100.0, 2000)
    assert not truncated
    ref = kahler.scalar_flat_profile(2, 1.5)
    err = max(abs(p - ref.value(t)) / ref.value(t) for t, p in zip(tau[1:], phi[1:]))
    assert err < 1e-6


def test_distance_and_norm():
    phi = kahler.MomentumProfile.linear(1.0, 0.5)
    assert kahler.fiber_distance(phi, 1.0, 9.0) == pytest.approx(2.0, rel=1e-12)
    lin = kahler.MomentumProfile.linear(0.5, 1e-300)
    assert kahler.norm_to_tau(lin, 10.0, 1.0) == pytest.approx(10.0, rel=1e-9)


def test_decay_exponent():
    d = kahler.decay_experiment(3, 3.0, 1e-2)
    assert d["exponent"] == pytest.approx(-6.0, rel=0.03)
    assert kahler.decay_experiment(3, 3.0, 0.0)["exactly_flat"]


def test_block_identities_against_numpy():
    rng = np.random.default_rng(5)
    t = rng.uniform(-1.0, 1.0, (6, 6)) + 3.0 * np.eye(6)
    assert kahler.schur_det(t, 2) == pytest.approx(np.linalg.det(t), rel=1e-10)
    np.testing.assert_allclose(kahler.block_inverse(t, 2), np.linalg.inv(t), atol=1e-10)
    with pytest.raises(kahler.SingularMatrixError):
        kahler.schur_det(np.ones((4, 4)), 2)


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        kahler.MomentumProfile.sampled([1.0, 2.0, 3.0, 4.0], [1.0, -1.0, 2.0, 3.0])


def test_solver_converges():
    trace = kahler.solve()
    assert trace["status"] == "converged"


def test_verify_all_passes():
    result = kahler.verify_all()
    assert result["pass"]
    assert len(result["criteria"]) == 12
