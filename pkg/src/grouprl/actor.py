"""Actor objective, its derivatives, and the alternating actor-critic loop.

The empirical actor objective over n tuples is

    J(theta) = mean_i sum_a Q(s_i, a; w) pi_theta(a|s_i) - zeta_a/2 ||theta||^2

With two actions and phi(s, 0) = 0 this is mean_i [Q0_i + pi1_i dQ_i] minus the
penalty, where dQ_i = Q1_i - Q0_i and pi1_i = sigmoid(-theta . phi(s_i, 1)).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .critic import lstdq
from .features import policy_feature, value_feature
from .linalg import exact_mean
from .policy import check_theta
from .sim import as_transitions

log = logging.getLogger(__name__)

ARMIJO_C = 1e-4
MAX_BACKTRACKS = 60


class OptimizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class ActorCriticResult:
    theta: np.ndarray
    w: np.ndarray
    iterations: int
    converged: bool
    final_objective: float


class _ActorProblem:
    """Per-sample quantities that do not depend on theta, computed once."""

    def __init__(self, tuples, w, zeta_a: float):
        batch = as_transitions(tuples)
        if len(batch) == 0:
            raise ValueError("actor objective needs at least one tuple")
        w = np.asarray(w, dtype=float)
        s = batch.s
        n = len(batch)
        q0 = value_feature(s, np.zeros(n)) @ w
        q1 = value_feature(s, np.ones(n)) @ w
        self.q0 = q0
        self.dq = q1 - q0
        self.phi1 = policy_feature(s, np.ones(n))
        self.zeta_a = float(zeta_a)

    def _probs(self, theta):
        u = self.phi1 @ theta
        # pi1 = 1/(1+exp(u)) evaluated without overflow
        pi1 = np.exp(-np.logaddexp(0.0, u))
        pi0 = np.exp(-np.logaddexp(0.0, -u))
        return pi0, pi1

    def objective(self, theta) -> float:
        _, pi1 = self._probs(theta)
        return float(exact_mean(self.q0 + pi1 * self.dq)) - 0.5 * self.zeta_a * float(theta @ theta)

    def gradient(self, theta) -> np.ndarray:
        pi0, pi1 = self._probs(theta)
        coef = -self.dq * pi1 * pi0
        return exact_mean(coef[:, None] * self.phi1, axis=0) - self.zeta_a * theta

    def hessian(self, theta) -> np.ndarray:
        pi0, pi1 = self._probs(theta)
        coef = self.dq * pi1 * pi0 * (pi0 - pi1)
        outer = self.phi1[:, :, None] * self.phi1[:, None, :]
        return exact_mean(coef[:, None, None] * outer, axis=0) - self.zeta_a * np.eye(len(theta))


def actor_objective(theta, tuples, w, zeta_a: float) -> float:
    theta = np.asarray(theta, dtype=float)
    return _ActorProblem(tuples, w, zeta_a).objective(theta)


def actor_gradient(theta, tuples, w, zeta_a: float) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    return _ActorProblem(tuples, w, zeta_a).gradient(theta)


def actor_hessian(theta, tuples, w, zeta_a: float) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    return _ActorProblem(tuples, w, zeta_a).hessian(theta)


def _ascent_direction(g: np.ndarray, H: np.ndarray) -> np.ndarray:
    """Newton direction on the negative-definite part of H.

    If H is not sufficiently negative definite it is shifted so that the
    system matrix is positive definite, which keeps g . d > 0.
    """
    neg = -H
    eig_min = float(np.linalg.eigvalsh((neg + neg.T) / 2).min())
    floor = 1e-8 * max(1.0, float(np.abs(neg).max()))
    shift = 0.0 if eig_min > floor else floor - eig_min
    return np.linalg.solve(neg + shift * np.eye(len(g)), g)


def maximize_actor(
    tuples,
    w,
    theta_init,
    zeta_a: float = 0.01,
    opt_tol: float = 1e-6,
    max_opt_iters: int = 500,
    method: str = "newton",
) -> np.ndarray:
    """Maximize the actor objective by damped Newton ascent with Armijo backtracking.

    Stops when the gradient infinity-norm drops below ``opt_tol`` or after
    ``max_opt_iters`` accepted steps. Every accepted step increases the
    objective, so the result is never worse than ``theta_init``.
    """
    if opt_tol <= 0:
        raise ValueError("opt_tol must be positive")
    theta = check_theta(theta_init).copy()
    problem = _ActorProblem(tuples, w, zeta_a)
    f = problem.objective(theta)
    if not np.isfinite(f):
        raise OptimizationError(f"non-finite actor objective at theta_init={theta}")

    for it in range(max_opt_iters):
        g = problem.gradient(theta)
        if not np.all(np.isfinite(g)):
            raise OptimizationError(f"non-finite gradient at iteration {it}, theta={theta}")
        if np.abs(g).max() < opt_tol:
            break
        if method == "newton":
            d = _ascent_direction(g, problem.hessian(theta))
        else:
            d = g
        slope = float(g @ d)
        if not slope > 0:
            d, slope = g, float(g @ g)
        t = 1.0
        for _ in range(MAX_BACKTRACKS):
            candidate = theta + t * d
            f_new = problem.objective(candidate)
            if np.isfinite(f_new) and f_new >= f + ARMIJO_C * t * slope:
                break
            t *= 0.5
        else:
            # no sufficient increase is representable; theta is numerically stationary
            log.debug("line search stalled at iteration %d (|g|=%.3e)", it, np.abs(g).max())
            break
        theta, f = candidate, f_new
    return theta


def train_actor_critic(
    tuples,
    gamma: float,
    zeta_a: float = 0.01,
    zeta_c: float = 0.01,
    theta_init=None,
    outer_tol: float = 1e-4,
    max_outer_iters: int = 50,
    opt_tol: float = 1e-6,
    max_opt_iters: int = 500,
    method: str = "newton",
) -> ActorCriticResult:
    """Alternate an LSTDQ critic solve with an actor maximization until theta settles."""
    batch = as_transitions(tuples)
    if len(batch) == 0:
        raise ValueError("no tuples to train on")
    p = batch.s.shape[1]
    theta = np.zeros(p + 1) if theta_init is None else check_theta(theta_init, p).copy()

    converged = False
    iterations = 0
    w = None
    for iterations in range(1, max_outer_iters + 1):
        w = lstdq(batch, theta, gamma, zeta_c)
        theta_new = maximize_actor(batch, w, theta, zeta_a, opt_tol, max_opt_iters, method)
        delta = float(np.abs(theta_new - theta).max())
        theta = theta_new
        if delta < outer_tol:
            converged = True
            break
    final = actor_objective(theta, batch, w, zeta_a)
    return ActorCriticResult(theta, w, iterations, converged, final)
