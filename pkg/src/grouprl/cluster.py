"""Trajectory features and K-means grouping of users."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import exact_mean
from .sim import Trajectory


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray
    centers: np.ndarray
    objective: float
    history: tuple[float, ...] = ()

    def distances(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=float)
        return np.sqrt(((Z - self.centers[self.labels]) ** 2).sum(axis=1))


def trajectory_feature(traj: Trajectory) -> np.ndarray:
    """Stack ``[s_1, r_1, ..., s_T, r_T]`` in time order."""
    if len(traj) == 0:
        raise ValueError(f"trajectory of user {traj.user_id} is empty")
    return np.concatenate([traj.states[:-1], traj.rewards[:, None]], axis=1).reshape(-1)


def standardize(Z: np.ndarray) -> np.ndarray:
    """Per-coordinate z-scoring; constant coordinates are only centered."""
    Z = np.asarray(Z, dtype=float)
    sd = Z.std(axis=0)
    sd[sd == 0] = 1.0
    return (Z - Z.mean(axis=0)) / sd


def _sq_dists(Z: np.ndarray, centers: np.ndarray) -> np.ndarray:
    return ((Z[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def _objective(Z, centers, labels) -> float:
    return float(((Z - centers[labels]) ** 2).sum())


def _seed_centers(Z: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    """Distance-weighted seeding: each new center is drawn with probability
    proportional to the squared distance to its nearest chosen center."""
    n = len(Z)
    idx = [int(rng.integers(n))]
    d2 = ((Z - Z[idx[0]]) ** 2).sum(axis=1)
    for _ in range(1, K):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            nxt = int(rng.integers(n))
        idx.append(nxt)
        d2 = np.minimum(d2, ((Z - Z[nxt]) ** 2).sum(axis=1))
    return Z[idx].copy()


def _fill_empty(Z, centers, labels, K):
    for k in range(K):
        if np.any(labels == k):
            continue
        own = ((Z - centers[labels]) ** 2).sum(axis=1)
        # only donate from clusters that keep at least one member
        counts = np.bincount(labels, minlength=K)
        own[counts[labels] <= 1] = -1.0
        far = int(np.argmax(own))
        centers[k] = Z[far]
        labels[far] = k
    return centers, labels


def _lloyd(Z, centers, tol, max_iters):
    K = len(centers)
    labels = np.argmin(_sq_dists(Z, centers), axis=1)  # argmin keeps the lowest index on ties
    centers, labels = _fill_empty(Z, centers, labels, K)
    history = [_objective(Z, centers, labels)]
    for _ in range(max_iters):
        new_centers = np.stack([exact_mean(Z[labels == k], axis=0) for k in range(K)])
        shift = float(np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max())
        centers = new_centers
        history.append(_objective(Z, centers, labels))
        new_labels = np.argmin(_sq_dists(Z, centers), axis=1)
        centers, new_labels = _fill_empty(Z, centers, new_labels, K)
        changed = not np.array_equal(new_labels, labels)
        labels = new_labels
        history.append(_objective(Z, centers, labels))
        if not changed and shift < tol:
            break
    return labels, centers, history


def kmeans(
    Z,
    K: int,
    restarts: int = 10,
    tol: float = 1e-8,
    max_iters: int = 300,
    rng: np.random.Generator | None = None,
) -> ClusterAssignment:
    """Lloyd's algorithm with distance-weighted seeding, best of ``restarts`` runs.

    Points are processed in a canonical (lexicographic) order internally, so
    the assignment of each point does not depend on where it sits in the input.
    """
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2:
        raise ValueError("Z must be a 2-D array of equal-length feature vectors")
    n = len(Z)
    if not 1 <= K <= n:
        raise ValueError(f"K must lie in [1, {n}], got {K}")
    if restarts < 1:
        raise ValueError("restarts must be positive")
    rng = rng if rng is not None else np.random.default_rng(0)

    order = np.lexsort(Z.T[::-1])
    Zs = Z[order]
    best = None
    for _ in range(restarts):
        labels, centers, history = _lloyd(Zs, _seed_centers(Zs, K, rng), tol, max_iters)
        J = history[-1]
        if best is None or J < best[2]:
            best = (labels, centers, J, history)

    labels = np.empty(n, dtype=int)
    labels[order] = best[0]
    return ClusterAssignment(labels, best[1], best[2], tuple(best[3]))
