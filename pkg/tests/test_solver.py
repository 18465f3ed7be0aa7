import numpy as np
import pytest

from onlineirl.exceptions import ConvergenceError, ValidationError
from onlineirl.mdp import TabularMDP, exact_value_iteration, greedy_policy, validate_mdp
from onlineirl.rewards import RewardModel
from onlineirl.smoothmax import ApproxSpec
from onlineirl.solver import (
    approximate_value_iteration,
    bellman_gradient_iteration,
    weighted_transition,
)

from test_mdp import random_mdp, self_loop


def finite_difference_dq(mdp, model, theta, phi, spec, step=1e-5, threshold=1e-10):
    """Central differences of the smoothed solve's Q over every parameter."""
    n_params = theta.size
    fd = np.zeros((mdp.n_states, mdp.n_actions, n_params))
    for j in range(n_params):
        up, down = theta.copy(), theta.copy()
        up[j] += step
        down[j] -= step
        q_up = approximate_value_iteration(mdp, model.reward(up, phi), spec, threshold).q
        q_down = approximate_value_iteration(mdp, model.reward(down, phi), spec, threshold).q
        fd[:, :, j] = (q_up - q_down) / (2 * step)
    return fd


class TestApproximateValueIteration:
    @pytest.mark.parametrize("k", [1.0, 10.0, 100.0])
    def test_single_action_reduces_to_exact(self, k):
        res = approximate_value_iteration(
            self_loop(), np.array([1.0]), ApproxSpec("gsoft", k), threshold=1e-9
        )
        np.testing.assert_allclose(res.v, [10.0], atol=1e-5)

    def test_gsoft_gap_bound_on_random_mdps(self):
        rng = np.random.default_rng(14)
        k = 100.0
        for _ in range(10):
            mdp = random_mdp(rng)
            r = rng.uniform(0, 1, size=mdp.n_states)
            exact = exact_value_iteration(mdp, r, threshold=1e-10)
            approx = approximate_value_iteration(
                mdp, r, ApproxSpec("gsoft", k), threshold=1e-10
            )
            gap = approx.v - exact.v
            bound = np.log(mdp.n_actions) / (k * (1.0 - mdp.discount))
            assert np.all(gap >= -1e-8)
            assert np.all(gap <= bound + 1e-8)

    def test_q_assembled_from_converged_v(self):
        rng = np.random.default_rng(15)
        mdp = random_mdp(rng)
        r = rng.uniform(0, 1, size=mdp.n_states)
        spec = ApproxSpec("gsoft", 20.0)
        res = approximate_value_iteration(mdp, r, spec, threshold=1e-10)
        p2 = mdp.transitions.reshape(mdp.n_states * mdp.n_actions, mdp.n_states)
        expected_q = (p2 @ (r + mdp.discount * res.v)).reshape(res.q.shape)
        np.testing.assert_allclose(res.q, expected_q, atol=1e-12)

    def test_warm_start_reaches_same_fixed_point(self):
        rng = np.random.default_rng(16)
        mdp = random_mdp(rng)
        r = rng.uniform(0, 1, size=mdp.n_states)
        spec = ApproxSpec("gsoft", 50.0)
        cold = approximate_value_iteration(mdp, r, spec, threshold=1e-12)
        warm = approximate_value_iteration(
            mdp, r, spec, threshold=1e-12, v0=cold.v + rng.normal(scale=0.01, size=cold.v.shape)
        )
        np.testing.assert_allclose(warm.v, cold.v, atol=1e-10)
        assert warm.iterations <= cold.iterations

    def test_pnorm_low_k_high_discount_diverges(self):
        # The pnorm backup inflates the max multiplicatively, so once
        # gamma * n_actions^(1/k) exceeds 1 the iteration must blow up.
        p = np.ones((2, 4, 2)) * 0.5
        mdp = validate_mdp(TabularMDP(2, 4, p, 0.9))
        with pytest.raises(ConvergenceError, match="diverged"):
            approximate_value_iteration(mdp, np.ones(2), ApproxSpec("pnorm", 2.0))

    def test_pnorm_large_k_converges(self):
        p = np.ones((2, 4, 2)) * 0.5
        mdp = validate_mdp(TabularMDP(2, 4, p, 0.9))
        res = approximate_value_iteration(mdp, np.ones(2), ApproxSpec("pnorm", 100.0))
        # self-consistent: V within the gap bound of the exact solve
        exact = exact_value_iteration(mdp, np.ones(2))
        assert np.all(res.v >= exact.v - 1e-6)


class TestBellmanGradientIteration:
    def test_zero_jacobian_gives_zero_gradients(self):
        rng = np.random.default_rng(17)
        mdp = random_mdp(rng)
        r = rng.uniform(0, 1, size=mdp.n_states)
        spec = ApproxSpec("gsoft", 10.0)
        q = approximate_value_iteration(mdp, r, spec).q
        grad = bellman_gradient_iteration(mdp, q, np.zeros((mdp.n_states, 3)), spec)
        np.testing.assert_array_equal(grad.dv, 0.0)
        np.testing.assert_array_equal(grad.dq, 0.0)

    @pytest.mark.parametrize("kind", ["pnorm", "gsoft"])
    def test_self_loop_geometric_series(self, kind):
        mdp = self_loop()
        spec = ApproxSpec(kind, 5.0)
        q = approximate_value_iteration(mdp, np.array([1.0]), spec, threshold=1e-12).q
        grad = bellman_gradient_iteration(
            mdp, q, np.array([[1.0]]), spec, threshold=1e-12
        )
        np.testing.assert_allclose(grad.dv, [[10.0]], atol=1e-9)
        np.testing.assert_allclose(grad.dq, [[[10.0]]], atol=1e-9)

    def test_matches_finite_differences_eight_state(self):
        rng = np.random.default_rng(18)
        mdp = random_mdp(rng, n_states=8, n_actions=3, discount=0.85)
        phi = rng.uniform(0, 1, size=(8, 4))
        model = RewardModel("linear", 4)
        theta = rng.uniform(0.1, 1.0, size=4)
        spec = ApproxSpec("gsoft", 10.0)
        q = approximate_value_iteration(mdp, model.reward(theta, phi), spec, 1e-12).q
        grad = bellman_gradient_iteration(mdp, q, model.jacobian(theta, phi), spec, 1e-12)
        fd = finite_difference_dq(mdp, model, theta, phi, spec)
        rel = np.linalg.norm(grad.dq - fd) / np.linalg.norm(fd)
        assert rel <= 1e-4
        np.testing.assert_allclose(grad.dq, fd, rtol=1e-4, atol=1e-6)

    def test_direct_solve_matches_iteration(self):
        rng = np.random.default_rng(20)
        mdp = random_mdp(rng)
        r = rng.uniform(0, 1, size=mdp.n_states)
        spec = ApproxSpec("gsoft", 30.0)
        q = approximate_value_iteration(mdp, r, spec, threshold=1e-12).q
        jac = rng.normal(size=(mdp.n_states, 5))
        iterated = bellman_gradient_iteration(mdp, q, jac, spec, threshold=1e-12)
        direct = bellman_gradient_iteration(mdp, q, jac, spec, method="direct")
        np.testing.assert_allclose(iterated.dv, direct.dv, atol=1e-8)
        np.testing.assert_allclose(iterated.dq, direct.dq, atol=1e-8)

    def test_warm_start_equivalence(self):
        rng = np.random.default_rng(21)
        mdp = random_mdp(rng)
        r = rng.uniform(0, 1, size=mdp.n_states)
        spec = ApproxSpec("gsoft", 10.0)
        q = approximate_value_iteration(mdp, r, spec, threshold=1e-12).q
        jac = rng.normal(size=(mdp.n_states, 2))
        cold = bellman_gradient_iteration(mdp, q, jac, spec, threshold=1e-12)
        warm = bellman_gradient_iteration(
            mdp, q, jac, spec, threshold=1e-12, dv0=cold.dv
        )
        np.testing.assert_allclose(warm.dv, cold.dv, atol=1e-10)
        assert warm.iterations <= 2

    def test_gsoft_weight_rows_sum_to_one_in_transition_mix(self):
        rng = np.random.default_rng(22)
        mdp = random_mdp(rng)
        q = rng.normal(size=(mdp.n_states, mdp.n_actions))
        wp = weighted_transition(mdp, q, ApproxSpec("gsoft", 7.0))
        np.testing.assert_allclose(wp.sum(axis=1), 1.0, atol=1e-10)

    def test_shape_mismatch_rejected(self):
        mdp = self_loop()
        spec = ApproxSpec("gsoft", 5.0)
        with pytest.raises(ValidationError):
            bellman_gradient_iteration(mdp, np.zeros((2, 2)), np.zeros((1, 1)), spec)
        with pytest.raises(ValidationError):
            bellman_gradient_iteration(mdp, np.zeros((1, 1)), np.zeros((2, 1)), spec)


class TestPolicyAgreement:
    def test_large_k_greedy_policy_matches_exact(self):
        # Smoothing at k=100 perturbs Q by up to log(4)/k per backup, which
        # flips the greedy action at states whose exact action margins are
        # smaller than that.  Measured on noisy corner-goal grids the flips
        # affect 6-12% of states; symmetric states with exactly tied optimal
        # actions account for part of that, so agreement is also checked
        # against the exact Q values with a tie tolerance.
        from onlineirl.envs import GridSpec, make_gridworld

        env = make_gridworld(GridSpec(width=6))
        exact = exact_value_iteration(env.mdp, env.true_reward, threshold=1e-10)
        approx = approximate_value_iteration(
            env.mdp, env.true_reward, ApproxSpec("gsoft", 100.0), threshold=1e-10
        )
        greedy_exact = greedy_policy(exact.q)
        greedy_approx = greedy_policy(approx.q)
        chosen = exact.q[np.arange(env.mdp.n_states), greedy_approx]
        agrees = chosen >= exact.q.max(axis=1) - 1e-9
        assert agrees.mean() >= 0.9
        assert (greedy_exact == greedy_approx).mean() >= 0.85
