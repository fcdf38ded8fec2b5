"""Heterogeneous mHealth user population and its linear-Gaussian MDP.

State transition for a user with coefficients ``b1..b14`` (1-based):

    s1' = b1*s1 + e1
    s2' = b2*s2 + b3*a + e2
    s3' = b4*s3 + b5*s3*a + b6*a + e3
    sj' = b7*sj + ej                    j = 4..p

and the reward of the *current* (s, a):

    r = b14 * (b8 + a*(b9 + b10*s1 + b11*s2) + b12*s1 - b13*s3 + rho)

with e ~ N(0, sigma_s^2) i.i.d. and rho ~ N(0, sigma_r^2).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .linalg import covariance_factor, gaussian_vector

N_COEFS = 14

# One row per true group; columns b1..b14.
DEFAULT_BASIC_BETAS = (
    (0.40, 0.25, 0.35, 0.65, 0.10, 0.50, 0.22, 2.00, 0.15, 0.20, 0.32, 0.10, 0.45, 800.0),
    (0.45, 0.35, 0.40, 0.70, 0.15, 0.55, 0.30, 2.20, 0.25, 0.25, 0.40, 0.12, 0.55, 700.0),
    (0.35, 0.30, 0.30, 0.60, 0.05, 0.65, 0.28, 2.60, 0.35, 0.45, 0.45, 0.15, 0.50, 650.0),
    (0.55, 0.40, 0.25, 0.55, 0.08, 0.70, 0.26, 3.10, 0.25, 0.35, 0.30, 0.17, 0.60, 500.0),
    (0.20, 0.50, 0.20, 0.62, 0.06, 0.52, 0.27, 3.00, 0.15, 0.15, 0.50, 0.16, 0.70, 450.0),
)


class ConfigurationError(ValueError):
    pass


def check_beta(beta) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (N_COEFS,):
        raise ConfigurationError(f"beta must have {N_COEFS} entries, got shape {beta.shape}")
    if not np.all(np.isfinite(beta)):
        raise ConfigurationError("beta has non-finite entries")
    return beta


@dataclass(frozen=True)
class UserModel:
    user_id: int
    beta: np.ndarray
    group_truth: int
    p: int = 3
    sigma_s: float = 1.0
    sigma_r: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "beta", check_beta(self.beta))
        if self.p < 3:
            raise ConfigurationError(f"state dimension p must be >= 3, got {self.p}")
        if self.sigma_s < 0 or self.sigma_r < 0:
            raise ConfigurationError("noise standard deviations must be non-negative")


@dataclass(frozen=True)
class Population:
    users: tuple[UserModel, ...]
    M: int
    N_m: int

    def __len__(self) -> int:
        return len(self.users)

    @property
    def betas(self) -> np.ndarray:
        return np.stack([u.beta for u in self.users])

    @property
    def group_truth(self) -> np.ndarray:
        return np.array([u.group_truth for u in self.users], dtype=int)


@dataclass(frozen=True)
class TrialTuple:
    s: np.ndarray
    a: int
    r: float
    s_next: np.ndarray


@dataclass(frozen=True)
class Transitions:
    """Column-wise batch of (s, a, r, s') tuples; the unit the learners consume."""

    s: np.ndarray
    a: np.ndarray
    r: np.ndarray
    s_next: np.ndarray

    def __post_init__(self):
        n = len(self.a)
        if self.s.shape[0] != n or self.s_next.shape != self.s.shape or self.r.shape != (n,):
            raise ValueError("inconsistent transition batch shapes")

    def __len__(self) -> int:
        return len(self.a)

    @classmethod
    def from_tuples(cls, tuples: Sequence[TrialTuple]) -> "Transitions":
        if len(tuples) == 0:
            raise ValueError("no tuples")
        return cls(
            s=np.array([t.s for t in tuples], dtype=float),
            a=np.array([t.a for t in tuples], dtype=float),
            r=np.array([t.r for t in tuples], dtype=float),
            s_next=np.array([t.s_next for t in tuples], dtype=float),
        )

    @classmethod
    def concat(cls, parts: Iterable["Transitions"]) -> "Transitions":
        parts = list(parts)
        if not parts:
            raise ValueError("no transitions to concatenate")
        return cls(
            s=np.concatenate([t.s for t in parts]),
            a=np.concatenate([t.a for t in parts]),
            r=np.concatenate([t.r for t in parts]),
            s_next=np.concatenate([t.s_next for t in parts]),
        )


@dataclass(frozen=True)
class Trajectory:
    """Chained rollout stored as T+1 states, T actions and T rewards."""

    user_id: int
    states: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def p(self) -> int:
        return self.states.shape[1]

    @property
    def tuples(self) -> list[TrialTuple]:
        return [
            TrialTuple(self.states[t].copy(), int(self.actions[t]), float(self.rewards[t]), self.states[t + 1].copy())
            for t in range(len(self))
        ]

    def transitions(self) -> Transitions:
        return Transitions(
            s=self.states[:-1],
            a=self.actions.astype(float),
            r=self.rewards,
            s_next=self.states[1:],
        )


def as_transitions(data) -> Transitions:
    """Accept a Transitions batch, a Trajectory, or a sequence of TrialTuple."""
    if isinstance(data, Transitions):
        return data
    if isinstance(data, Trajectory):
        return data.transitions()
    return Transitions.from_tuples(list(data))


def make_population(
    basic_betas,
    M: int,
    N_m: int,
    sigma_b: float,
    sigma_s: float,
    sigma_r: float,
    p: int,
    rng: np.random.Generator,
) -> Population:
    """Users ``m*N_m .. (m+1)*N_m - 1`` get ``basic_betas[m]`` plus N(0, sigma_b^2) jitter."""
    basic = np.asarray(basic_betas, dtype=float)
    if basic.ndim != 2 or basic.shape[0] != M:
        raise ConfigurationError(f"expected {M} basic beta rows, got {basic.shape[0] if basic.ndim else 0}")
    for row in basic:
        check_beta(row)
    if sigma_b < 0:
        raise ConfigurationError("sigma_b must be non-negative")
    if N_m < 1:
        raise ConfigurationError("N_m must be positive")

    users = []
    for m in range(M):
        for _ in range(N_m):
            delta = sigma_b * rng.standard_normal(N_COEFS)
            users.append(UserModel(len(users), basic[m] + delta, m, p, sigma_s, sigma_r))
    return Population(tuple(users), M, N_m)


def initial_state(p: int, Sigma, rng: np.random.Generator) -> np.ndarray:
    Sigma = np.asarray(Sigma, dtype=float)
    if Sigma.shape != (p, p):
        raise ConfigurationError(f"Sigma must be {p}x{p}, got {Sigma.shape}")
    try:
        return gaussian_vector(Sigma, rng)
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc


def next_state(beta: np.ndarray, s: np.ndarray, a, xi: np.ndarray) -> np.ndarray:
    """Noise-supplied transition; broadcasts over leading (user) axes."""
    beta = np.asarray(beta)
    a = np.asarray(a, dtype=float)
    b = [beta[..., i] for i in range(N_COEFS)]
    out = np.empty(np.broadcast_shapes(s.shape, xi.shape))
    out[..., 0] = b[0] * s[..., 0]
    out[..., 1] = b[1] * s[..., 1] + b[2] * a
    out[..., 2] = b[3] * s[..., 2] + b[4] * s[..., 2] * a + b[5] * a
    if s.shape[-1] > 3:
        out[..., 3:] = b[6][..., None] * s[..., 3:]
    return out + xi


def reward(beta: np.ndarray, s: np.ndarray, a, rho) -> np.ndarray:
    beta = np.asarray(beta)
    a = np.asarray(a, dtype=float)
    b = [beta[..., i] for i in range(N_COEFS)]
    inner = (
        b[7]
        + a * (b[8] + b[9] * s[..., 0] + b[10] * s[..., 1])
        + b[11] * s[..., 0]
        - b[12] * s[..., 2]
        + rho
    )
    return b[13] * inner


def step(user: UserModel, s, a: int, rng: np.random.Generator) -> tuple[np.ndarray, float]:
    s = np.asarray(s, dtype=float)
    if s.shape != (user.p,):
        raise ValueError(f"state has shape {s.shape}, expected ({user.p},)")
    if not np.all(np.isfinite(s)):
        raise ValueError("state has non-finite entries")
    if a not in (0, 1):
        raise ValueError(f"action must be 0 or 1, got {a!r}")
    xi = user.sigma_s * rng.standard_normal(user.p)
    rho = user.sigma_r * rng.standard_normal()
    r = float(reward(user.beta, s, a, rho))
    return next_state(user.beta, s, a, xi), r


def run_micro_randomized_trial(user: UserModel, T: int, Sigma, rng: np.random.Generator) -> Trajectory:
    """Roll out ``T`` decision points with interventions sent at probability 0.5."""
    if T < 0:
        raise ValueError("T must be non-negative")
    states = np.empty((T + 1, user.p))
    actions = np.empty(T, dtype=int)
    rewards = np.empty(T)
    states[0] = initial_state(user.p, Sigma, rng)
    for t in range(T):
        a = int(rng.random() < 0.5)
        states[t + 1], rewards[t] = step(user, states[t], a, rng)
        actions[t] = a
    return Trajectory(user.user_id, states, actions, rewards)


def validate_sigma(Sigma, p: int) -> np.ndarray:
    Sigma = np.asarray(Sigma, dtype=float)
    if Sigma.shape != (p, p):
        raise ConfigurationError(f"Sigma must be {p}x{p}, got {Sigma.shape}")
    try:
        covariance_factor(Sigma)
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from exc
    return Sigma
