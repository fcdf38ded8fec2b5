"""Experiment grid runner and tabular outputs.

The unit of parallel work is one (seed, T) pair: the population and the trial
data are generated once for it and shared by every discount factor and
method, and the K-means grouping is computed once per K. All randomness comes
from keyed substreams, so the results do not depend on ``jobs``.
"""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .config import ExperimentConfig
from .evaluate import elrar
from .linalg import substream
from .sim import make_population, run_micro_randomized_trial
from .trainers import cluster_users, train_grouped, train_pooled, train_separate

log = logging.getLogger(__name__)

TABLE_COLUMNS = ["gamma", "T", "method", "K", "seed", "elrar_mean", "elrar_std", "n_users", "error"]
AGGREGATE_COLUMNS = ["gamma", "T", "method", "K", "n_seeds", "elrar_mean", "elrar_std", "user_std", "n_users"]
PLOT_COLUMNS = ["series", "T", "gamma", "elrar_mean", "elrar_std"]


@dataclass
class ResultRow:
    gamma: float
    T: int
    method: str
    K: int
    seed: int
    elrar_mean: float = float("nan")
    elrar_std: float = float("nan")
    n_users: int = 0
    error: str = ""
    user_ids: list[int] = field(default_factory=list, repr=False)
    per_user_eta: list[float] = field(default_factory=list, repr=False)

    @property
    def key(self):
        return (self.gamma, self.T, self.method, self.K, self.seed)


@dataclass
class ResultsTable:
    rows: list[ResultRow]

    def __len__(self) -> int:
        return len(self.rows)

    def select(self, **where) -> list[ResultRow]:
        return [r for r in self.rows if all(getattr(r, k) == v for k, v in where.items())]


def method_variants(cfg: ExperimentConfig) -> list[tuple[str, int]]:
    N = cfg.population.N
    out = []
    for m in cfg.grid.methods:
        if m == "pooled":
            out.append(("pooled", 1))
        elif m == "separate":
            out.append(("separate", N))
        else:
            out.extend(("grouped", K) for K in cfg.grid.K_list)
    return out


def build_population(cfg: ExperimentConfig, seed: int):
    pop = cfg.population
    return make_population(
        pop.basic_betas, pop.M, pop.N_m, pop.sigma_b, pop.sigma_s, pop.sigma_r, pop.p, substream(seed, "population")
    )


def build_trajectories(cfg: ExperimentConfig, population, seed: int, T: int):
    Sigma = cfg.population.sigma_matrix()
    return [run_micro_randomized_trial(u, T, Sigma, substream(seed, "trial", T, u.user_id)) for u in population.users]


def cluster_for(cfg: ExperimentConfig, trajectories, seed: int, T: int, K: int):
    return cluster_users(trajectories, K, cfg.cluster.params(), substream(seed, "cluster", T, K))


def train_method(cfg: ExperimentConfig, trajectories, method: str, K: int, gamma: float, seed: int, T: int, assignment=None):
    learn = cfg.learning
    loop = learn.loop_params()
    if method == "pooled":
        return train_pooled(trajectories, gamma, learn.zeta_a, learn.zeta_c, loop)
    if method == "separate":
        return train_separate(trajectories, gamma, learn.zeta_a, learn.zeta_c, loop)
    if method == "grouped":
        if assignment is None:
            assignment = cluster_for(cfg, trajectories, seed, T, K)
        return train_grouped(
            trajectories, K, gamma, learn.zeta_a, learn.zeta_c, cfg.cluster.params(), loop, assignment=assignment
        )
    raise ValueError(f"unknown method {method!r}")


def evaluate_policy_set(cfg: ExperimentConfig, population, policy_set, seed: int):
    ev = cfg.evaluation
    return elrar(population, policy_set, ev.horizon, ev.burn_in, cfg.population.sigma_matrix(), seed)


def _run_unit(args) -> list[ResultRow]:
    cfg, seed, T = args
    population = build_population(cfg, seed)
    trajectories = build_trajectories(cfg, population, seed, T)
    assignments = {}
    rows = []
    for gamma in cfg.grid.gamma_list:
        for method, K in method_variants(cfg):
            row = ResultRow(gamma, T, method, K, seed)
            try:
                if method == "grouped" and K not in assignments:
                    assignments[K] = cluster_for(cfg, trajectories, seed, T, K)
                ps = train_method(cfg, trajectories, method, K, gamma, seed, T, assignments.get(K))
                report = evaluate_policy_set(cfg, population, ps, seed)
                row.elrar_mean, row.elrar_std = report.mean, report.std
                row.n_users = len(report.per_user_eta)
                row.user_ids = list(report.user_ids)
                row.per_user_eta = [float(e) for e in report.per_user_eta]
            except Exception as exc:  # a failed cell must not stop the grid
                log.warning("cell gamma=%s T=%s %s K=%s seed=%s failed: %s", gamma, T, method, K, seed, exc)
                row.error = f"{type(exc).__name__}: {exc}".replace("\n", " ")
            rows.append(row)
    log.info("finished seed=%s T=%s", seed, T)
    return rows


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> ResultsTable:
    units = [(cfg, seed, T) for seed in cfg.grid.seeds for T in cfg.grid.T_list]
    if jobs > 1 and len(units) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_unit, units))
    else:
        chunks = [_run_unit(u) for u in units]
    rows = [row for chunk in chunks for row in chunk]

    # canonical order: T, gamma, method variant, seed
    variant_pos = {v: i for i, v in enumerate(method_variants(cfg))}
    gamma_pos = {g: i for i, g in enumerate(cfg.grid.gamma_list)}
    T_pos = {T: i for i, T in enumerate(cfg.grid.T_list)}
    seed_pos = {s: i for i, s in enumerate(cfg.grid.seeds)}
    rows.sort(key=lambda r: (T_pos[r.T], gamma_pos[r.gamma], variant_pos[(r.method, r.K)], seed_pos[r.seed]))
    return ResultsTable(rows)


def aggregate(table: ResultsTable) -> list[dict]:
    """Average each (gamma, T, method, K) cell over seeds; std is the sample std across seeds."""
    groups: dict[tuple, list[ResultRow]] = {}
    for row in table.rows:
        if row.error:
            continue
        groups.setdefault((row.gamma, row.T, row.method, row.K), []).append(row)
    out = []
    for (gamma, T, method, K), rows in groups.items():
        means = np.array([r.elrar_mean for r in rows])
        out.append(
            {
                "gamma": gamma,
                "T": T,
                "method": method,
                "K": K,
                "n_seeds": len(rows),
                "elrar_mean": float(np.mean(means)),
                "elrar_std": float(np.std(means, ddof=1)) if len(rows) > 1 else 0.0,
                "user_std": float(np.mean([r.elrar_std for r in rows])),
                "n_users": rows[0].n_users,
            }
        )
    return out


def series_name(method: str, K: int) -> str:
    return f"grouped_K{K}" if method == "grouped" else method


def _write_csv(path: Path, columns, records) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for rec in records:
            w.writerow([_cell(rec[c]) for c in columns])


def _cell(v):
    if isinstance(v, float):
        return "" if np.isnan(v) else io.fmt(v)
    return v


def table_records(table: ResultsTable) -> list[dict]:
    return [
        {
            "gamma": r.gamma,
            "T": r.T,
            "method": r.method,
            "K": r.K,
            "seed": r.seed,
            "elrar_mean": r.elrar_mean,
            "elrar_std": r.elrar_std,
            "n_users": r.n_users,
            "error": r.error,
        }
        for r in table.rows
    ]


def emit_outputs(table: ResultsTable, out_dir) -> dict[str, Path]:
    """Write per-seed, aggregate and plot-data CSVs (plus per-user eta) into ``out_dir``."""
    if len(table) == 0:
        raise ValueError("empty results table")
    out_dir = Path(out_dir)
    paths = {
        "per_seed": out_dir / "results_per_seed.csv",
        "aggregate": out_dir / "results_aggregate.csv",
        "plot": out_dir / "plot_data.csv",
        "eta": out_dir / "eta_per_user.csv",
    }
    _write_csv(paths["per_seed"], TABLE_COLUMNS, table_records(table))
    write_derived(table_records(table), out_dir, paths)

    eta_rows = []
    for r in table.rows:
        if r.error:
            continue
        base = {"method": r.method, "K": r.K, "gamma": io.fmt(r.gamma), "T": r.T, "seed": r.seed}
        eta_rows.extend(dict(base, user_id=u, eta=io.fmt(e)) for u, e in zip(r.user_ids, r.per_user_eta))
        eta_rows.append(dict(base, user_id="mean", eta=io.fmt(r.elrar_mean)))
    io.write_eta_rows(eta_rows, paths["eta"])
    return paths


def write_derived(records: list[dict], out_dir, paths=None) -> dict[str, Path]:
    """Aggregate and plot-data CSVs computed from per-seed records."""
    out_dir = Path(out_dir)
    paths = paths or {"aggregate": out_dir / "results_aggregate.csv", "plot": out_dir / "plot_data.csv"}
    rows = [
        ResultRow(
            float(r["gamma"]), int(r["T"]), r["method"], int(r["K"]), int(r["seed"]),
            float(r["elrar_mean"]) if r["elrar_mean"] != "" else float("nan"),
            float(r["elrar_std"]) if r["elrar_std"] != "" else float("nan"),
            int(r["n_users"]), r.get("error", "") or "",
        )
        for r in records
    ]
    agg = aggregate(ResultsTable(rows))
    _write_csv(paths["aggregate"], AGGREGATE_COLUMNS, agg)
    plot = [
        {
            "series": series_name(a["method"], a["K"]),
            "T": a["T"],
            "gamma": a["gamma"],
            "elrar_mean": a["elrar_mean"],
            "elrar_std": a["elrar_std"],
        }
        for a in agg
    ]
    _write_csv(paths["plot"], PLOT_COLUMNS, plot)
    return paths


def read_results(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
