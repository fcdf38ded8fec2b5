"""Expected long-run average reward (ElrAR) of learned policies.

Each user is rolled out for ``horizon`` steps under stochastic execution of
their assigned policy; the user's score is the mean reward after ``burn_in``
steps, and the report averages these scores over users.

Random draws for one rollout always follow the same layout (initial state,
state noise, reward noise, action uniforms), so a user evaluated alone and the
same user evaluated inside a population batch see identical noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import exact_mean, gaussian_vector, substream
from .sim import Population, UserModel, next_state, reward

DEFAULT_HORIZON = 5000
DEFAULT_BURN_IN = 1000


@dataclass(frozen=True)
class ElrarReport:
    user_ids: list[int]
    per_user_eta: np.ndarray
    mean: float
    std: float
    horizon: int
    burn_in: int


def _draw_noise(p: int, horizon: int, Sigma, rng: np.random.Generator):
    s0 = gaussian_vector(Sigma, rng)
    xi = rng.standard_normal((horizon, p))
    rho = rng.standard_normal(horizon)
    u = rng.random(horizon)
    return s0, xi, rho, u


def _rollout(betas, thetas, sigma_s, sigma_r, s0, xi, rho, u, burn_in) -> np.ndarray:
    """Vectorised over users: betas (U,14), thetas (U,q), s0 (U,p), xi (U,H,p), rho/u (U,H)."""
    horizon = xi.shape[1]
    s = s0.copy()
    rewards = np.empty((len(betas), horizon - burn_in))
    sigma_s = np.asarray(sigma_s, dtype=float)[:, None]
    sigma_r = np.asarray(sigma_r, dtype=float)
    for t in range(horizon):
        u_score = (s * thetas[:, :-1]).sum(axis=1) + thetas[:, -1]
        pi1 = np.exp(-np.logaddexp(0.0, u_score))
        a = (u[:, t] < pi1).astype(float)
        if t >= burn_in:
            rewards[:, t - burn_in] = reward(betas, s, a, sigma_r * rho[:, t])
        s = next_state(betas, s, a, sigma_s * xi[:, t])
    return np.array([exact_mean(row) for row in rewards])


def _check_horizon(horizon: int, burn_in: int) -> None:
    if not 0 <= burn_in < horizon:
        raise ValueError(f"need 0 <= burn_in < horizon, got burn_in={burn_in}, horizon={horizon}")


def long_run_average_reward(
    user: UserModel,
    theta,
    horizon: int = DEFAULT_HORIZON,
    burn_in: int = DEFAULT_BURN_IN,
    Sigma=None,
    rng: np.random.Generator | None = None,
) -> float:
    _check_horizon(horizon, burn_in)
    Sigma = np.eye(user.p) if Sigma is None else np.asarray(Sigma, dtype=float)
    rng = rng if rng is not None else np.random.default_rng()
    s0, xi, rho, u = _draw_noise(user.p, horizon, Sigma, rng)
    eta = _rollout(
        user.beta[None],
        np.asarray(theta, dtype=float)[None],
        [user.sigma_s],
        [user.sigma_r],
        s0[None],
        xi[None],
        rho[None],
        u[None],
        burn_in,
    )
    return float(eta[0])


def elrar(
    population: Population,
    policy_set,
    horizon: int = DEFAULT_HORIZON,
    burn_in: int = DEFAULT_BURN_IN,
    Sigma=None,
    seed: int = 0,
) -> ElrarReport:
    """Evaluate every user under its assigned policy.

    ``policy_set`` is anything with ``theta_for(user_id)``; user ``u`` draws
    its noise from ``substream(seed, "eval", u)``.
    """
    _check_horizon(horizon, burn_in)
    users = population.users
    p = users[0].p
    Sigma = np.eye(p) if Sigma is None else np.asarray(Sigma, dtype=float)
    thetas = np.stack([np.asarray(policy_set.theta_for(u.user_id), dtype=float) for u in users])

    draws = [_draw_noise(p, horizon, Sigma, substream(seed, "eval", u.user_id)) for u in users]
    s0, xi, rho, uni = (np.stack(parts) for parts in zip(*draws))
    eta = _rollout(
        np.stack([u.beta for u in users]),
        thetas,
        [u.sigma_s for u in users],
        [u.sigma_r for u in users],
        s0,
        xi,
        rho,
        uni,
        burn_in,
    )
    std = float(np.std(eta, ddof=1)) if len(eta) > 1 else 0.0
    return ElrarReport([u.user_id for u in users], eta, float(exact_mean(eta)), std, horizon, burn_in)
