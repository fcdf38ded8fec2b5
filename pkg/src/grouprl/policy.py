"""Two-action softmax policy  pi(a|s) ~ exp(-theta . phi(s, a)).

The exponent carries a minus sign. Since phi(s, 0) = 0, this reduces to
pi(1|s) = 1 / (1 + exp(theta . phi(s, 1))).
"""

from __future__ import annotations

import numpy as np

from .features import policy_feature


def check_theta(theta, p: int | None = None) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1:
        raise ValueError(f"theta must be a vector, got shape {theta.shape}")
    if p is not None and theta.shape[0] != p + 1:
        raise ValueError(f"theta has {theta.shape[0]} entries, expected q = p + 1 = {p + 1}")
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta has non-finite entries")
    return theta


def action_probabilities(theta, s) -> np.ndarray:
    """Return ``[pi(0|s), pi(1|s)]`` along the last axis (max-subtracted softmax)."""
    s = np.asarray(s, dtype=float)
    theta = check_theta(theta, s.shape[-1])
    # logits for a=0 and a=1 under the negative exponent convention
    logits = np.stack(
        [
            -policy_feature(s, np.zeros(s.shape[:-1])) @ theta,
            -policy_feature(s, np.ones(s.shape[:-1])) @ theta,
        ],
        axis=-1,
    )
    logits = logits - logits.max(axis=-1, keepdims=True)
    w = np.exp(logits)
    return w / w.sum(axis=-1, keepdims=True)


def prob_send(theta, s) -> np.ndarray:
    return action_probabilities(theta, s)[..., 1]


def sample_action(theta, s, rng: np.random.Generator) -> int:
    return int(rng.random() < prob_send(theta, s))
