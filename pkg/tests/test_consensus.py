import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bearing_swarm.consensus import (ConsensusState, ParameterError, beta_from_bound,
                                     certified_bound, certify_signal_rate, chatter_floor,
                                     consensus_error, consensus_rhs, consensus_rhs_compact,
                                     conservation_residual, finite_time_bound, lyapunov,
                                     refresh_estimates, simulate_consensus, with_beta)
from bearing_swarm.graph import complete_graph, cycle_graph, path_graph, projector_M
from bearing_swarm.trials import SineBank

from conftest import connected_graphs


def loop_rhs(x, g, beta):
    """Per-node sum written out with explicit loops."""
    out = np.zeros_like(x)
    for i in range(g.n):
        for j in range(g.n):
            if g.adjacency[i, j]:
                out[i] -= beta * np.sign(x[i] - x[j])
    return out


class TestGain:
    def test_static(self):
        assert beta_from_bound(0, 5, 0.4).beta == 1.0

    def test_large_rate(self):
        assert beta_from_bound(100, 5, 0.4).beta == pytest.approx(1 + 100 * np.sqrt(5) / 0.4)
        assert beta_from_bound(100, 5, 0.4).beta == pytest.approx(560.017, abs=5e-4)

    def test_unit(self):
        assert beta_from_bound(1, 4, 2).beta == 2.0

    @pytest.mark.parametrize("args", [(1, 4, 0), (1, 4, -1), (-1, 4, 1), (1, 0, 1)])
    def test_rejects(self, args):
        with pytest.raises(ParameterError):
            beta_from_bound(*args)

    def test_override_flag(self):
        p = with_beta(beta_from_bound(1, 4, 2), 1.5)
        assert p.override and not p.meets_bound
        assert beta_from_bound(1, 4, 2).meets_bound


class TestRhs:
    def test_all_equal_is_stationary(self):
        g = complete_graph(4)
        s = ConsensusState.initial(np.ones((4, 6)))
        np.testing.assert_array_equal(consensus_rhs(s, g, beta_from_bound(0, 4, 1)), 0.0)

    def test_two_nodes(self):
        g = path_graph(2)
        x = np.zeros((2, 6))
        x[0, 2] = 1.0
        rhs = consensus_rhs(ConsensusState(w=x, x=x), g, with_beta(beta_from_bound(0, 2, 1), 3.0))
        assert rhs[0, 2] == -3.0 and rhs[1, 2] == 3.0
        assert np.count_nonzero(rhs) == 2

    @settings(max_examples=60, deadline=None)
    @given(connected_graphs(), st.integers(0, 2**32 - 1), st.floats(0.1, 10))
    def test_forms_agree(self, g, seed, beta):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(g.n, 6))
        x[rng.random((g.n, 6)) < 0.2] = 0.0  # exercise sgn(0)
        ref = loop_rhs(x, g, beta)
        params = with_beta(beta_from_bound(0, g.n, 1), beta)
        np.testing.assert_allclose(consensus_rhs(ConsensusState(w=x, x=x), g, params), ref,
                                   atol=1e-12)
        np.testing.assert_allclose(consensus_rhs_compact(x, g, beta), ref, atol=1e-12)
        # the rate is antisymmetric across edges, so column sums vanish
        assert np.max(np.abs(ref.sum(axis=0))) <= 1e-12


class TestEstimates:
    def test_zero_w(self, rng):
        phi = rng.normal(size=(3, 6))
        s = ConsensusState.initial(phi)
        np.testing.assert_array_equal(s.x, phi)

    def test_zero_phi(self, rng):
        w = rng.normal(size=(3, 6))
        s = refresh_estimates(ConsensusState(w=w, x=np.zeros((3, 6))), np.zeros((3, 6)))
        np.testing.assert_array_equal(s.x, w)

    def test_error_at_consensus(self, rng):
        phi = rng.normal(size=(4, 6))
        np.testing.assert_allclose(consensus_error(np.tile(phi.mean(0), (4, 1)), phi), 0, atol=1e-15)

    def test_initial_error_is_projection(self, rng):
        phi = rng.normal(size=(5, 6))
        M = projector_M(cycle_graph(5))
        np.testing.assert_allclose(consensus_error(phi, phi), M @ phi, atol=1e-14)

    def test_w0_shape_checked(self):
        with pytest.raises(ValueError):
            ConsensusState.initial(np.zeros((3, 6)), w0=np.zeros((2, 6)))


class TestBound:
    def test_zero_error(self):
        assert finite_time_bound(np.zeros((3, 6)), 2.0, t0=1.5) == (1.5, 1.5)

    def test_norm_two(self):
        e = np.zeros((2, 6))
        e[0, 0] = 2.0
        assert finite_time_bound(e, 4.0) == (1.0, 0.5)
        assert certified_bound(e, 4.0) == 1.0

    def test_coincide(self):
        e = np.zeros((2, 6))
        e[1, 5] = 1.0
        assert finite_time_bound(e, 1.0, t0=2.0) == (3.0, 3.0)

    def test_rejects_nonpositive(self):
        with pytest.raises(ParameterError):
            finite_time_bound(np.ones((2, 6)), 0.0)


def test_rate_certificate_on_sine():
    # d/dt (3 sin 2t) peaks at 6
    sig = lambda t: 3 * np.sin(2 * np.asarray(t))[:, None, None] * np.ones((1, 1, 6))
    rate = certify_signal_rate(sig, np.linspace(0, 4, 40001), inflation=1.0)
    assert rate == pytest.approx(6.0, rel=1e-6)
    assert certify_signal_rate(sig, np.linspace(0, 4, 40001)) == pytest.approx(7.5, rel=1e-6)


def test_static_signals_converge_with_unit_gain(rng):
    g = cycle_graph(6)
    phi = rng.normal(size=(6, 6))
    params = beta_from_bound(0.0, 6, g.lambda2)
    h = 1e-3
    run = simulate_consensus(g, lambda t: np.broadcast_to(phi, (len(t), 6, 6)), params, h, 0.0,
                             certified_bound(phi - phi.mean(0), g.lambda2) + 0.5)
    assert run.first_below() <= run.t_star
    assert run.error_norm[-1] <= chatter_floor(1.0, h)
    assert run.conservation.max() <= 1e-12
    assert run.mean_tracking.max() <= 1e-12
    # Lyapunov function decays overall and matches 0.5 |x~|^2
    assert run.lyapunov[-1] < 1e-3 * run.lyapunov[0]
    np.testing.assert_allclose(run.lyapunov[0], lyapunov(phi - phi.mean(0)))


@settings(max_examples=15, deadline=None)
@given(connected_graphs(min_n=2, max_n=6), st.integers(0, 2**32 - 1))
def test_conservation_holds_for_any_gain(g, seed):
    rng = np.random.default_rng(seed)
    sig = SineBank.random(g.n, rng)
    params = with_beta(beta_from_bound(0, g.n, 1), float(rng.uniform(0, 20)))
    run = simulate_consensus(g, sig, params, 1e-2, 0.0, 2.0)
    assert run.conservation.max() <= 1e-10
    assert conservation_residual(run.x_final - sig(np.array([2.0]))[0]) <= 1e-10


def test_nonzero_w0_breaks_conservation():
    g = path_graph(3)
    w0 = np.zeros((3, 6))
    w0[0, 0] = 1.0
    run = simulate_consensus(g, lambda t: np.zeros((len(t), 3, 6)), beta_from_bound(0, 3, 1),
                             1e-2, 0.0, 0.1, w0=w0)
    assert run.conservation[0] == 1.0


def test_time_grid_lands_on_tf():
    run = simulate_consensus(path_graph(2), lambda t: np.zeros((len(t), 2, 6)),
                             beta_from_bound(0, 2, 1), 0.3, 0.0, 1.0)
    np.testing.assert_allclose(run.t, [0, 0.3, 0.6, 0.9, 1.0])
