import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bearing_swarm.geometry import pack_phi, stacked_information
from bearing_swarm.tracker import (ObservabilityError, StackedObservation, centralized_solution,
                                   condition_number, local_solution, local_solutions,
                                   local_solutions_series, observability_check, sigma_min,
                                   sigma_min_batch, sym2_eigvals)


def test_oracle_three_sensors_recovers_truth():
    sensors = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]])
    p = centralized_solution(StackedObservation.from_geometry(sensors, (1.0, 1.0)))
    np.testing.assert_allclose(p, [1, 1], atol=1e-10)
    # independent oracle: lstsq on the raw system
    H, z, _ = stacked_information((1.0, 1.0), sensors)
    np.testing.assert_allclose(np.linalg.lstsq(H, z, rcond=None)[0], [1, 1], atol=1e-10)


def test_oracle_rejects_collinear():
    obs = StackedObservation.from_geometry([[0.0, 0.0], [0.0, 4.0]], (0.0, 2.0))
    with pytest.raises(ObservabilityError):
        centralized_solution(obs)


def test_oracle_identity_system():
    p = centralized_solution(StackedObservation(H=np.eye(2), z=np.array([3.0, -2.0])))
    np.testing.assert_allclose(p, [3, -2], atol=1e-14)


def test_local_solution_diagonal():
    est = local_solution(pack_phi(np.eye(2) / 2, [0.5, 1.0]))
    assert est.valid
    np.testing.assert_allclose(est.p_hat, [1, 2])
    assert est.condition == pytest.approx(1.0)


def test_local_solution_rank_one_is_invalid():
    h = np.array([0.6, 0.8])
    x = pack_phi(np.outer(h, h), 2.0 * h)
    est = local_solution(x, node=4)
    assert not est.valid and est.node == 4
    assert np.all(np.isnan(est.p_hat))
    np.testing.assert_array_equal(local_solution(x, last_valid=[1, 2]).p_hat, [1, 2])
    np.testing.assert_array_equal(local_solution(x, fallback=[5, 6]).p_hat, [5, 6])
    np.testing.assert_array_equal(local_solution(x, last_valid=[1, 2], fallback=[5, 6]).p_hat, [1, 2])


def test_zero_information_is_invalid():
    assert not local_solution(np.zeros(6)).valid


def test_observability_examples():
    assert observability_check([[0.0, 0.0], [0.0, 4.0]], (0.0, 2.0)) == pytest.approx(0.0, abs=1e-15)
    assert observability_check([[-1.0, 0.0], [0.0, -1.0]], (0.0, 0.0)) == pytest.approx(1.0)


@settings(max_examples=100)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_sym2_eigvals_vs_lapack(a, b, c):
    lo, hi = sym2_eigvals(a, b, c)
    ref = np.linalg.eigvalsh([[a, c], [c, b]])
    np.testing.assert_allclose([lo, hi], ref, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_oracle_random_geometry(n, seed):
    rng = np.random.default_rng(seed)
    sensors = rng.uniform(-5, 5, size=(n, 2))
    p = rng.uniform(-5, 5, size=2)
    if np.min(np.hypot(*(p - sensors).T)) < 1e-2 or observability_check(sensors, p) < 0.05:
        return
    p_star = centralized_solution(StackedObservation.from_geometry(sensors, p))
    np.testing.assert_allclose(p_star, p, atol=1e-9)
    # at exact consensus every node recovers the oracle
    H, z, phi = stacked_information(p, sensors)
    x = np.tile(phi.mean(axis=0), (n, 1))
    est = local_solution(x[0])
    assert est.valid
    np.testing.assert_allclose(est.p_hat, p_star, atol=1e-9 * condition_number(H.T @ H))
    np.testing.assert_allclose(sigma_min_batch(H[None])[0], sigma_min(H), atol=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.integers(1, 30), st.integers(0, 2**32 - 1))
def test_series_matches_stepwise(n, k, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(k, n, 6))
    # make a random subset singular
    mask = rng.random((k, n)) < 0.4
    h = rng.normal(size=(k, n, 2))
    X[mask, 0] = h[mask, 0] ** 2
    X[mask, 3] = h[mask, 1] ** 2
    X[mask, 1] = X[mask, 2] = h[mask, 0] * h[mask, 1]
    start = rng.normal(size=(n, 2))
    last_a, last_b = start.copy(), start.copy()
    p_series, v_series = local_solutions_series(X, last_b)
    for j in range(k):
        p, v = local_solutions(X[j], last_a)
        np.testing.assert_array_equal(v, v_series[j])
        np.testing.assert_allclose(p, p_series[j], rtol=1e-12)
        for i in range(n):
            ref = local_solution(X[j, i], last_valid=p_series[j - 1, i] if j else start[i])
            assert ref.valid == v[i]
            np.testing.assert_allclose(ref.p_hat, p[i], rtol=1e-12)
    np.testing.assert_allclose(last_a, last_b)
