import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grouprl.features import expected_next_feature, policy_feature, value_feature
from grouprl.policy import action_probabilities, prob_send, sample_action

S = np.array([1.0, 2.0, 3.0])
finite = st.floats(-50, 50, allow_nan=False)


def test_value_feature_layout():
    np.testing.assert_array_equal(value_feature(S, 0), [1, 1, 2, 3, 0, 0, 0, 0])
    np.testing.assert_array_equal(value_feature(S, 1), [1, 1, 2, 3, 1, 1, 2, 3])
    assert value_feature(np.zeros(5), 1).shape == (12,)


def test_policy_feature_layout():
    np.testing.assert_array_equal(policy_feature(S, 0), [0, 0, 0, 0])
    np.testing.assert_array_equal(policy_feature(S, 1), [1, 2, 3, 1])


def test_batched_features_match_rows():
    s = np.random.default_rng(0).standard_normal((6, 3))
    a = np.array([0, 1, 1, 0, 1, 0])
    X = value_feature(s, a)
    for i in range(6):
        np.testing.assert_array_equal(X[i], value_feature(s[i], a[i]))


def test_expected_next_feature_uniform_policy():
    s = np.ones(3)
    np.testing.assert_allclose(expected_next_feature(s, np.zeros(4)), [1, 1, 1, 1, 0.5, 0.5, 0.5, 0.5])
    s = np.array([0.2, -1.0, 4.0])
    np.testing.assert_allclose(
        expected_next_feature(s, np.zeros(4)), 0.5 * value_feature(s, 0) + 0.5 * value_feature(s, 1)
    )


def test_expected_next_feature_degenerate_policy():
    # a very negative theta . phi(s, 1) drives pi(1|s) to 1 under the minus-sign convention
    theta = np.array([0.0, 0.0, 0.0, -800.0])
    np.testing.assert_allclose(expected_next_feature(S, theta), value_feature(S, 1))


@settings(max_examples=100, deadline=None)
@given(st.lists(finite, min_size=3, max_size=3), st.lists(finite, min_size=4, max_size=4))
def test_expected_next_feature_is_convex_combination(s, theta):
    s = np.array(s)
    y = expected_next_feature(s, np.array(theta))
    lo = np.minimum(value_feature(s, 0), value_feature(s, 1))
    hi = np.maximum(value_feature(s, 0), value_feature(s, 1))
    assert np.all(y >= lo - 1e-12) and np.all(y <= hi + 1e-12)
    # x(s,0) and x(s,1) differ only in the last p+1 entries
    np.testing.assert_array_equal(value_feature(s, 0)[:4], value_feature(s, 1)[:4])


def test_zero_theta_is_uniform():
    np.testing.assert_array_equal(action_probabilities(np.zeros(4), S), [0.5, 0.5])


def test_hand_evaluated_softmax():
    theta = np.array([np.log(3.0), 0, 0, 0])
    assert prob_send(theta, np.array([1.0, 0, 0])) == pytest.approx(0.25, abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(st.lists(finite, min_size=3, max_size=3), st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=4))
def test_probabilities_normalized_and_logistic(s, theta):
    s, theta = np.array(s), np.array(theta)
    probs = action_probabilities(theta, s)
    assert np.all(np.isfinite(probs))
    assert abs(probs.sum() - 1.0) < 1e-12
    u = theta @ policy_feature(s, 1)
    if abs(u) < 30:
        assert probs[1] == pytest.approx(1 / (1 + np.exp(u)), rel=1e-12)


def test_extreme_theta_does_not_overflow():
    probs = action_probabilities(np.array([1e6, 1e6, 1e6, 1e6]), S)
    assert np.all(np.isfinite(probs))
    assert probs[1] == 0.0 and probs[0] == 1.0


def test_monotone_in_exponent():
    s = np.array([0.5, -0.3, 1.0])
    us = np.linspace(-5, 5, 21)
    p1 = [prob_send(np.array([0, 0, 0, u]), s) for u in us]
    assert np.all(np.diff(p1) < 0)


def test_sample_action_frequency_and_determinism():
    rng = np.random.default_rng(0)
    draws = [sample_action(np.zeros(4), S, rng) for _ in range(10_000)]
    assert 0.47 <= np.mean(draws) <= 0.53
    a = [sample_action(np.zeros(4), S, np.random.default_rng(3)) for _ in range(5)]
    b = [sample_action(np.zeros(4), S, np.random.default_rng(3)) for _ in range(5)]
    assert a == b


def test_sample_action_degenerate_policy():
    rng = np.random.default_rng(1)
    assert all(sample_action(np.array([0, 0, 0, -1e4]), S, rng) == 1 for _ in range(1000))


def test_theta_dimension_checked():
    with pytest.raises(ValueError, match="q = p \\+ 1"):
        action_probabilities(np.zeros(3), S)
