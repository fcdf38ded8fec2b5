"""LSTDQ critic: closed-form linear Q-value weights for a fixed policy."""

from __future__ import annotations

import numpy as np

from .features import expected_next_feature, value_feature
from .linalg import exact_mean, solve_linear
from .sim import as_transitions


def lstdq_system(tuples, theta, gamma: float, zeta_c: float) -> tuple[np.ndarray, np.ndarray]:
    """Return (A, b) with A = zeta_c I + mean x (x - gamma y)^T and b = mean x r."""
    batch = as_transitions(tuples)
    if len(batch) == 0:
        raise ValueError("lstdq needs at least one tuple")
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"gamma must lie in [0, 1), got {gamma}")
    if zeta_c < 0:
        raise ValueError("zeta_c must be non-negative")
    x = value_feature(batch.s, batch.a)
    y = expected_next_feature(batch.s_next, theta)
    return feature_system(x, y, batch.r, gamma, zeta_c)


def feature_system(x, y, r, gamma: float, zeta_c: float) -> tuple[np.ndarray, np.ndarray]:
    """The LSTDQ normal equations for arbitrary current/next feature rows."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    r = np.asarray(r, dtype=float).reshape(-1)
    if len(x) == 0:
        raise ValueError("lstdq needs at least one tuple")
    outer = x[:, :, None] * (x - gamma * y)[:, None, :]
    A = zeta_c * np.eye(x.shape[1]) + exact_mean(outer, axis=0)
    b = exact_mean(x * r[:, None], axis=0)
    return A, b


def lstdq(tuples, theta, gamma: float, zeta_c: float = 0.01) -> np.ndarray:
    A, b = lstdq_system(tuples, theta, gamma, zeta_c)
    return solve_linear(A, b)


def q_value(w, s, a) -> np.ndarray | float:
    out = value_feature(s, a) @ np.asarray(w, dtype=float)
    return float(out) if np.ndim(out) == 0 else out
