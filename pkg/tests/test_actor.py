import numpy as np
import pytest

from grouprl.actor import (
    OptimizationError,
    actor_gradient,
    actor_hessian,
    actor_objective,
    maximize_actor,
    train_actor_critic,
)
from grouprl.critic import q_value
from grouprl.policy import action_probabilities, prob_send
from grouprl.sim import Transitions


def random_batch(rng, n, p=3, reward_scale=1.0):
    return Transitions(
        s=rng.standard_normal((n, p)),
        a=(rng.random(n) < 0.5).astype(float),
        r=reward_scale * rng.standard_normal(n),
        s_next=rng.standard_normal((n, p)),
    )


def central_difference(f, x, h=1e-5):
    g = np.zeros_like(x)
    for j in range(len(x)):
        e = np.zeros_like(x)
        e[j] = h
        g[j] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def test_objective_at_zero_theta_is_mean_q():
    rng = np.random.default_rng(0)
    batch = random_batch(rng, 10)
    w = rng.standard_normal(8)
    expected = np.mean([0.5 * (q_value(w, s, 0) + q_value(w, s, 1)) for s in batch.s])
    assert actor_objective(np.zeros(4), batch, w, 0.3) == pytest.approx(expected, rel=1e-13)


def test_objective_with_zero_critic_is_penalty():
    rng = np.random.default_rng(1)
    theta = rng.standard_normal(4)
    assert actor_objective(theta, random_batch(rng, 5), np.zeros(8), 0.2) == pytest.approx(-0.1 * theta @ theta)


def test_objective_single_tuple_bias_critic():
    batch = Transitions(np.zeros((1, 3)), np.zeros(1), np.zeros(1), np.zeros((1, 3)))
    theta = np.array([0.3, -2.0, 1.0, 4.0])
    assert actor_objective(theta, batch, np.eye(8)[0], 0.01) == pytest.approx(1 - 0.005 * theta @ theta)


def test_gradient_special_cases():
    rng = np.random.default_rng(2)
    batch = random_batch(rng, 10)
    theta = rng.standard_normal(4)
    np.testing.assert_allclose(actor_gradient(theta, batch, np.zeros(8), 0.5), -0.5 * theta)
    np.testing.assert_allclose(actor_gradient(theta, batch, np.eye(8)[0], 0.0), np.zeros(4), atol=1e-15)


def test_gradient_and_hessian_match_finite_differences():
    rng = np.random.default_rng(3)
    for trial in range(100):
        n = 5 if trial % 2 else 20
        batch = random_batch(rng, n)
        w = rng.standard_normal(8)
        theta = rng.standard_normal(4)
        zeta = 0.01
        g = actor_gradient(theta, batch, w, zeta)
        g_fd = central_difference(lambda t: actor_objective(t, batch, w, zeta), theta)
        assert np.abs(g - g_fd).max() <= 1e-5 * max(np.abs(g_fd).max(), 1e-3)
        H = actor_hessian(theta, batch, w, zeta)
        H_fd = np.stack([central_difference(lambda t: actor_gradient(t, batch, w, zeta)[j], theta) for j in range(4)])
        assert np.abs(H - H_fd).max() <= 1e-5 * max(np.abs(H_fd).max(), 1e-3)


def test_maximize_pure_penalty_goes_to_zero():
    rng = np.random.default_rng(4)
    theta = maximize_actor(random_batch(rng, 10), np.zeros(8), rng.standard_normal(4) * 3, zeta_a=0.1)
    assert np.abs(theta).max() < 1e-6


def test_maximize_stationary_start():
    rng = np.random.default_rng(5)
    theta = maximize_actor(random_batch(rng, 10), np.eye(8)[0], np.zeros(4), zeta_a=0.01)
    np.testing.assert_array_equal(theta, np.zeros(4))


def test_maximize_prefers_beneficial_action_matches_grid_search():
    rng = np.random.default_rng(6)
    batch = random_batch(rng, 30)
    w = np.zeros(8)
    w[4] = 5.0  # Q(s,1) - Q(s,0) = 5 for every s
    theta = maximize_actor(batch, w, np.zeros(4), zeta_a=0.01)
    assert np.all(prob_send(theta, batch.s) > 0.5)

    # brute force over the (theta_1, theta_4) slice
    grid = np.linspace(-20, 20, 161)
    best, best_val = None, -np.inf
    for t1 in grid:
        for t4 in grid:
            cand = np.array([t1, 0.0, 0.0, t4])
            val = actor_objective(cand, batch, w, 0.01)
            if val > best_val:
                best, best_val = cand, val
    assert np.sign(best[3]) == np.sign(theta[3]) == -1
    assert np.all(prob_send(best, batch.s) > 0.5)
    assert actor_objective(theta, batch, w, 0.01) >= best_val - 1e-9


@pytest.mark.parametrize("method", ["newton", "gradient"])
def test_ascent_property(method):
    rng = np.random.default_rng(7)
    for _ in range(30):
        batch = random_batch(rng, 20, reward_scale=100.0)
        w = rng.standard_normal(8) * 100
        theta0 = rng.standard_normal(4)
        theta = maximize_actor(batch, w, theta0, 0.01, method=method)
        assert actor_objective(theta, batch, w, 0.01) >= actor_objective(theta0, batch, w, 0.01) - 1e-12


def test_newton_reaches_gradient_tolerance():
    rng = np.random.default_rng(8)
    for _ in range(20):
        batch = random_batch(rng, 42, reward_scale=800.0)
        w = rng.standard_normal(8) * 300
        theta = maximize_actor(batch, w, np.zeros(4), 0.01, opt_tol=1e-6)
        assert np.abs(actor_gradient(theta, batch, w, 0.01)).max() < 1e-6


def test_non_finite_objective_raises():
    rng = np.random.default_rng(9)
    w = np.full(8, np.inf)
    with np.errstate(invalid="ignore"), pytest.raises(OptimizationError):
        maximize_actor(random_batch(rng, 5), w, np.zeros(4))


def test_reward_scaling_leaves_policy_unchanged():
    rng = np.random.default_rng(10)
    batch = random_batch(rng, 40, reward_scale=10.0)
    scaled = Transitions(batch.s, batch.a, 3.7 * batch.r, batch.s_next)
    kwargs = dict(gamma=0.5, zeta_a=0.0, zeta_c=0.01, opt_tol=1e-300, max_opt_iters=15, max_outer_iters=3)
    r1 = train_actor_critic(batch, **kwargs)
    r2 = train_actor_critic(scaled, **kwargs)
    np.testing.assert_allclose(
        action_probabilities(r1.theta, batch.s), action_probabilities(r2.theta, batch.s), atol=1e-6
    )


def test_outer_iteration_cap():
    rng = np.random.default_rng(11)
    res = train_actor_critic(random_batch(rng, 20, reward_scale=50.0), 0.9, max_outer_iters=1)
    assert res.iterations == 1


def test_gamma_zero_converges_on_second_pass():
    rng = np.random.default_rng(12)
    res = train_actor_critic(random_batch(rng, 30, reward_scale=50.0), 0.0)
    assert res.converged and res.iterations == 2


def test_training_is_deterministic(small_trajectories):
    data = Transitions.concat(t.transitions() for t in small_trajectories)
    a = train_actor_critic(data, 0.8)
    b = train_actor_critic(data, 0.8)
    np.testing.assert_array_equal(a.theta, b.theta)
    np.testing.assert_array_equal(a.w, b.w)
    assert (a.iterations, a.converged, a.final_objective) == (b.iterations, b.converged, b.final_objective)
