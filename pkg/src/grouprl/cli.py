"""Command-line entry point: ``grouprl <subcommand> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .cluster import standardize, trajectory_feature
from .config import ConfigError, load_config
from .experiment import (
    build_population,
    build_trajectories,
    cluster_for,
    emit_outputs,
    evaluate_policy_set,
    read_results,
    run_experiment,
    train_method,
    write_derived,
)

log = logging.getLogger("grouprl")


def _common(p: argparse.ArgumentParser, *, cell: bool = False) -> None:
    p.add_argument("--config", help="YAML config file (defaults are used when omitted)")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--out", help="output directory (default: output.dir from the config)")
    if cell:
        p.add_argument("--T", type=int, default=42, help="trial length per user")
        p.add_argument("--gamma", type=float, default=0.95, help="discount factor")
        p.add_argument("--method", choices=["pooled", "separate", "grouped"], default="grouped")
        p.add_argument("--K", type=int, default=3, help="number of groups for --method grouped")
        p.add_argument("--data", help="trajectory CSV from `simulate` (regenerated from the seed when omitted)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grouprl", description="Group-driven actor-critic RL for simulated mHealth users")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="dump the population and its micro-randomized trial data")
    _common(p)
    p.add_argument("--T", type=int, default=42)

    p = sub.add_parser("cluster", help="dump the K-means grouping of users")
    _common(p)
    p.add_argument("--T", type=int, default=42)
    p.add_argument("--K", type=int, default=3)
    p.add_argument("--data", help="trajectory CSV from `simulate`")

    p = sub.add_parser("train", help="train one regime and dump its policy set")
    _common(p, cell=True)

    p = sub.add_parser("evaluate", help="evaluate a policy set by long-run average reward")
    _common(p, cell=True)
    p.add_argument("--policy", help="policy-set JSON from `train` (trained on the fly when omitted)")

    p = sub.add_parser("experiment", help="run the full grid from the config")
    _common(p)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")

    p = sub.add_parser("report", help="recompute aggregate and plot data from a per-seed CSV")
    p.add_argument("--results", required=True, help="results_per_seed.csv from `experiment`")
    p.add_argument("--out", help="output directory (default: alongside --results)")
    return parser


def _out(args, cfg) -> Path:
    return Path(args.out or cfg.output.dir)


def _trajectories(args, cfg, population):
    if getattr(args, "data", None):
        return io.read_trajectories(args.data)
    return build_trajectories(cfg, population, args.seed, args.T)


def _policy_set(args, cfg, population, trajectories):
    return train_method(cfg, trajectories, args.method, args.K, args.gamma, args.seed, args.T)


def cmd_simulate(args, cfg) -> None:
    out = _out(args, cfg)
    population = build_population(cfg, args.seed)
    trajs = build_trajectories(cfg, population, args.seed, args.T)
    io.write_population(population, out / "population.csv")
    io.write_trajectories(trajs, out / f"trajectories_T{args.T}.csv")
    print(f"wrote {len(population)} users and {sum(len(t) for t in trajs)} tuples to {out}")


def cmd_cluster(args, cfg) -> None:
    out = _out(args, cfg)
    population = build_population(cfg, args.seed)
    trajs = _trajectories(args, cfg, population)
    asg = cluster_for(cfg, trajs, args.seed, args.T, args.K)
    Z = np.stack([trajectory_feature(t) for t in trajs])
    if cfg.cluster.standardize:
        Z = standardize(Z)
    path = out / f"assignment_T{args.T}_K{args.K}.csv"
    io.write_assignment([t.user_id for t in trajs], asg, Z, path)
    print(f"K={args.K} objective J={asg.objective:.6g}; wrote {path}")


def cmd_train(args, cfg) -> None:
    out = _out(args, cfg)
    population = build_population(cfg, args.seed)
    trajs = _trajectories(args, cfg, population)
    ps = _policy_set(args, cfg, population, trajs)
    stem = f"policy_{args.method}_K{ps.K_effective}_gamma{args.gamma:g}_T{args.T}"
    io.write_policy_set(ps, out / f"{stem}.json")
    io.write_policies(ps, out / f"{stem}.csv")
    n_conv = sum(r.converged for r in ps.results)
    print(f"trained {len(ps.results)} policies ({n_conv} converged); wrote {out / stem}.json")


def cmd_evaluate(args, cfg) -> None:
    out = _out(args, cfg)
    population = build_population(cfg, args.seed)
    if args.policy:
        ps = io.read_policy_set(args.policy)
    else:
        ps = _policy_set(args, cfg, population, _trajectories(args, cfg, population))
    report = evaluate_policy_set(cfg, population, ps, args.seed)
    rows = io.report_rows(report, ps.regime, ps.K_effective, args.gamma, args.T, args.seed)
    path = out / f"elrar_{ps.regime}_K{ps.K_effective}_gamma{args.gamma:g}_T{args.T}_seed{args.seed}.csv"
    io.write_eta_rows(rows, path)
    print(f"ElrAR {report.mean:.1f} +/- {report.std:.1f} over {len(report.per_user_eta)} users; wrote {path}")


def cmd_experiment(args, cfg) -> None:
    out = _out(args, cfg)
    table = run_experiment(cfg, jobs=args.jobs)
    paths = emit_outputs(table, out)
    n_err = sum(1 for r in table.rows if r.error)
    print(f"{len(table)} cells ({n_err} failed); wrote " + ", ".join(str(p) for p in paths.values()))


def cmd_report(args) -> None:
    records = read_results(args.results)
    if not records:
        raise ValueError(f"{args.results} has no rows")
    out = Path(args.out) if args.out else Path(args.results).parent
    paths = write_derived(records, out)
    print("wrote " + ", ".join(str(p) for p in paths.values()))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "report":
            cmd_report(args)
            return 0
        cfg = load_config(args.config)
        {
            "simulate": cmd_simulate,
            "cluster": cmd_cluster,
            "train": cmd_train,
            "evaluate": cmd_evaluate,
            "experiment": cmd_experiment,
        }[args.command](args, cfg)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
