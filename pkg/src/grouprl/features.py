"""Feature maps shared by the critic and the actor.

Layouts are fixed contracts:

* value feature  x(s, a) = [1, s_1..s_p, a, a*s_1..a*s_p]   (2p + 2 entries)
* policy feature phi(s, a) = [a*s_1..a*s_p, a]               (p + 1 entries)

All functions accept a single state of shape (p,) or a batch of shape (n, p).
"""

from __future__ import annotations

import numpy as np


def value_feature(s, a) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    a = np.asarray(a, dtype=float)[..., None]
    ones = np.ones(s.shape[:-1] + (1,))
    return np.concatenate([ones, s, a, a * s], axis=-1)


def policy_feature(s, a) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    a = np.asarray(a, dtype=float)[..., None]
    return np.concatenate([a * s, a], axis=-1)


def expected_next_feature(s_next, theta) -> np.ndarray:
    """Policy-weighted mixture  sum_a pi_theta(a|s') x(s', a)."""
    from .policy import action_probabilities

    s_next = np.asarray(s_next, dtype=float)
    probs = action_probabilities(theta, s_next)
    x0 = value_feature(s_next, np.zeros(s_next.shape[:-1]))
    x1 = value_feature(s_next, np.ones(s_next.shape[:-1]))
    return probs[..., 0:1] * x0 + probs[..., 1:2] * x1
