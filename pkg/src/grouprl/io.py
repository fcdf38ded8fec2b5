"""Delimited-text and JSON dumps of populations, trajectories, clusters and policies."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .actor import ActorCriticResult
from .cluster import ClusterAssignment
from .sim import Population, Trajectory
from .trainers import TrainedPolicySet


def fmt(x) -> str:
    """Shortest repr that round-trips a float exactly."""
    return repr(float(x))


def _writer(path: Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fh = open(path, "w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def write_population(pop: Population, path) -> None:
    fh, w = _writer(path)
    with fh:
        w.writerow(["user_id", "group_truth"] + [f"b{i}" for i in range(1, 15)])
        for u in pop.users:
            w.writerow([u.user_id, u.group_truth] + [fmt(b) for b in u.beta])


def write_trajectories(trajs: Iterable[Trajectory], path) -> None:
    """One row per tuple; the final state of each user is a terminal row with empty a and r."""
    trajs = list(trajs)
    p = trajs[0].p
    fh, w = _writer(path)
    with fh:
        w.writerow(["user_id", "t"] + [f"s_{j}" for j in range(1, p + 1)] + ["a", "r"])
        for traj in trajs:
            for t in range(len(traj)):
                w.writerow([traj.user_id, t] + [fmt(x) for x in traj.states[t]] + [int(traj.actions[t]), fmt(traj.rewards[t])])
            w.writerow([traj.user_id, len(traj)] + [fmt(x) for x in traj.states[-1]] + ["", ""])


def read_trajectories(path) -> list[Trajectory]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        p = sum(1 for h in header if h.startswith("s_"))
        rows: dict[int, list] = {}
        for row in reader:
            rows.setdefault(int(row[0]), []).append(row)
    out = []
    for uid, user_rows in rows.items():
        user_rows.sort(key=lambda r: int(r[1]))
        states = np.array([[float(x) for x in r[2 : 2 + p]] for r in user_rows])
        body = user_rows[:-1]
        if user_rows[-1][2 + p] != "":
            raise ValueError(f"user {uid}: missing terminal row")
        actions = np.array([int(r[2 + p]) for r in body], dtype=int)
        rewards = np.array([float(r[3 + p]) for r in body])
        out.append(Trajectory(uid, states, actions, rewards))
    return out


def write_assignment(user_ids: Sequence[int], assignment: ClusterAssignment, Z, path) -> None:
    dist = assignment.distances(Z)
    fh, w = _writer(path)
    with fh:
        w.writerow(["user_id", "cluster_label", "distance_to_center"])
        for uid, lab, d in zip(user_ids, assignment.labels, dist):
            w.writerow([uid, int(lab), fmt(d)])


def write_policies(policy_set: TrainedPolicySet, path) -> None:
    """Per-group policy rows: user_or_group_id, q, theta_1..theta_q."""
    q = len(policy_set.results[0].theta)
    fh, w = _writer(path)
    with fh:
        w.writerow(["user_or_group_id", "q"] + [f"theta_{j}" for j in range(1, q + 1)])
        for k, res in enumerate(policy_set.results):
            ident = policy_set.user_ids[k] if policy_set.regime == "separate" else k
            w.writerow([ident, q] + [fmt(x) for x in res.theta])


def policy_set_to_dict(ps: TrainedPolicySet) -> dict:
    return {
        "regime": ps.regime,
        "K": ps.K_effective,
        "users": [{"user_id": int(u), "label": int(l)} for u, l in zip(ps.user_ids, ps.assignment)],
        "groups": [
            {
                "label": k,
                "theta": [float(x) for x in r.theta],
                "w": [float(x) for x in r.w],
                "iterations": r.iterations,
                "converged": r.converged,
                "final_objective": float(r.final_objective),
            }
            for k, r in enumerate(ps.results)
        ],
    }


def policy_set_from_dict(data: dict) -> TrainedPolicySet:
    results = [
        ActorCriticResult(
            np.array(g["theta"], dtype=float),
            np.array(g["w"], dtype=float),
            int(g["iterations"]),
            bool(g["converged"]),
            float(g["final_objective"]),
        )
        for g in sorted(data["groups"], key=lambda g: g["label"])
    ]
    users = data["users"]
    return TrainedPolicySet(
        data["regime"],
        int(data["K"]),
        [int(u["user_id"]) for u in users],
        np.array([int(u["label"]) for u in users], dtype=int),
        results,
    )


def write_policy_set(ps: TrainedPolicySet, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(policy_set_to_dict(ps), indent=2) + "\n")


def read_policy_set(path) -> TrainedPolicySet:
    return policy_set_from_dict(json.loads(Path(path).read_text()))


REPORT_COLUMNS = ["method", "K", "gamma", "T", "seed", "user_id", "eta"]


def write_eta_rows(rows: Iterable[dict], path) -> None:
    """Per-user eta rows; the aggregate row of each report has user_id 'mean'."""
    fh, w = _writer(path)
    with fh:
        w.writerow(REPORT_COLUMNS)
        for row in rows:
            w.writerow([row[c] for c in REPORT_COLUMNS])


def report_rows(report, method: str, K: int, gamma: float, T: int, seed: int) -> list[dict]:
    base = {"method": method, "K": K, "gamma": fmt(gamma), "T": T, "seed": seed}
    rows = [dict(base, user_id=u, eta=fmt(e)) for u, e in zip(report.user_ids, report.per_user_eta)]
    rows.append(dict(base, user_id="mean", eta=fmt(report.mean)))
    return rows
