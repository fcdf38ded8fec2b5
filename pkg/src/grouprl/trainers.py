"""Pooled, separate and grouped training regimes over one actor-critic core.

Grouped training with K=1 reduces to pooled training and with K=N (distinct
trajectory features) to separate training; the three share the same code path
``_train_groups`` so these identities hold bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .actor import ActorCriticResult, train_actor_critic
from .cluster import ClusterAssignment, kmeans, standardize, trajectory_feature
from .sim import Trajectory, Transitions

REGIMES = ("pooled", "separate", "grouped")


@dataclass(frozen=True)
class LoopParams:
    outer_tol: float = 1e-4
    max_outer_iters: int = 50
    opt_tol: float = 1e-6
    max_opt_iters: int = 500
    method: str = "newton"


@dataclass(frozen=True)
class ClusterParams:
    restarts: int = 10
    tol: float = 1e-8
    max_iters: int = 300
    standardize: bool = False


@dataclass
class TrainedPolicySet:
    regime: str
    K_effective: int
    user_ids: list[int]
    assignment: np.ndarray
    results: list[ActorCriticResult]
    cluster: ClusterAssignment | None = field(default=None, repr=False)

    def theta_for(self, user_id: int) -> np.ndarray:
        try:
            pos = self.user_ids.index(user_id)
        except ValueError:
            raise KeyError(f"user {user_id} has no assigned policy") from None
        return self.results[int(self.assignment[pos])].theta

    def group_sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.K_effective)


def _check(trajectories: Sequence[Trajectory]) -> None:
    if len(trajectories) == 0:
        raise ValueError("no users to train on")
    for traj in trajectories:
        if len(traj) == 0:
            raise ValueError(f"user {traj.user_id} has no tuples")


def _train_groups(trajectories, labels, K, gamma, zeta_a, zeta_c, loop: LoopParams):
    results = []
    for k in range(K):
        members = [traj.transitions() for traj, lab in zip(trajectories, labels) if lab == k]
        data = Transitions.concat(members)
        results.append(
            train_actor_critic(
                data,
                gamma,
                zeta_a,
                zeta_c,
                outer_tol=loop.outer_tol,
                max_outer_iters=loop.max_outer_iters,
                opt_tol=loop.opt_tol,
                max_opt_iters=loop.max_opt_iters,
                method=loop.method,
            )
        )
    return results


def train_pooled(trajectories, gamma, zeta_a=0.01, zeta_c=0.01, loop: LoopParams = LoopParams()) -> TrainedPolicySet:
    _check(trajectories)
    labels = np.zeros(len(trajectories), dtype=int)
    results = _train_groups(trajectories, labels, 1, gamma, zeta_a, zeta_c, loop)
    return TrainedPolicySet("pooled", 1, [t.user_id for t in trajectories], labels, results)


def train_separate(trajectories, gamma, zeta_a=0.01, zeta_c=0.01, loop: LoopParams = LoopParams()) -> TrainedPolicySet:
    _check(trajectories)
    labels = np.arange(len(trajectories))
    results = _train_groups(trajectories, labels, len(trajectories), gamma, zeta_a, zeta_c, loop)
    return TrainedPolicySet("separate", len(trajectories), [t.user_id for t in trajectories], labels, results)


def cluster_users(
    trajectories, K: int, params: ClusterParams = ClusterParams(), rng: np.random.Generator | None = None
) -> ClusterAssignment:
    _check(trajectories)
    Z = np.stack([trajectory_feature(t) for t in trajectories])
    if params.standardize:
        Z = standardize(Z)
    return kmeans(Z, K, params.restarts, params.tol, params.max_iters, rng)


def train_grouped(
    trajectories,
    K: int,
    gamma,
    zeta_a=0.01,
    zeta_c=0.01,
    cluster_params: ClusterParams = ClusterParams(),
    loop: LoopParams = LoopParams(),
    rng: np.random.Generator | None = None,
    assignment: ClusterAssignment | None = None,
) -> TrainedPolicySet:
    """Cluster users by trajectory features, then train one policy per group.

    A precomputed ``assignment`` may be passed to reuse one clustering across
    several discount factors.
    """
    _check(trajectories)
    if not 1 <= K <= len(trajectories):
        raise ValueError(f"K must lie in [1, {len(trajectories)}], got {K}")
    if assignment is None:
        assignment = cluster_users(trajectories, K, cluster_params, rng)
    elif len(assignment.centers) != K:
        raise ValueError("precomputed assignment has a different K")
    labels = np.asarray(assignment.labels, dtype=int)
    results = _train_groups(trajectories, labels, K, gamma, zeta_a, zeta_c, loop)
    return TrainedPolicySet("grouped", K, [t.user_id for t in trajectories], labels, results, assignment)
