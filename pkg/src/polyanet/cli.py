"""Command-line interface.

Subcommands: gen-network, simulate, exact, meanfield, equilibrium,
compare, reproduce-fig.  Exit codes: 0 success, 2 configuration error,
3 numerical failure, 4 state-space cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import experiment, networks
from .errors import CapExceededError, ConfigError, ConvergenceError, UnstableSystemError

THREADS_ENV = "POLYANET_THREADS"


def _default_threads() -> int:
    value = os.environ.get(THREADS_ENV)
    if value is None:
        return 1
    try:
        return max(1, int(value))
    except ValueError:
        return 1


def _add_run_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", required=True, help="path to a JSON experiment config")
    sub.add_argument("--seed", type=int, default=None, help="override the master seed")
    sub.add_argument("--out", default=None, help="override the artifact prefix")
    sub.add_argument(
        "--threads",
        type=int,
        default=None,
        help=f"worker processes for replicates (default ${THREADS_ENV} or 1)",
    )


def _load_for_run(args, modes: list[str]) -> experiment.ExperimentConfig:
    cfg = experiment.load_config(args.config)
    cfg.modes = modes
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.out is not None:
        cfg.out_prefix = args.out
    cfg.threads = args.threads if args.threads is not None else _default_threads()
    return cfg


def _run_and_report(cfg: experiment.ExperimentConfig) -> int:
    summary = experiment.run(cfg)
    for mode, path in summary["artifacts"].items():
        print(f"{mode}: {path}")
    print(f"summary: {summary['summary_path']}")
    if "equilibrium" in cfg.modes:
        radius = summary["spectral_radius"]
        if summary["equilibrium_declined"]:
            print(f"spectral radius {radius:.17g} >= 1; equilibrium declined")
            return 3
        print(f"spectral radius {radius:.17g}")
    return 0


def _cmd_gen_network(args) -> int:
    if args.kind == "barabasi-albert":
        if args.attach is None:
            raise ConfigError("attach", "--attach is required for barabasi-albert")
        adj = networks.barabasi_albert(args.nodes, args.attach, args.seed)
        S = networks.row_normalize(adj, args.self_weight)
        networks.save_edge_list(adj, f"{args.out}_edges.csv")
    elif args.kind == "complete":
        adj = networks.complete(args.nodes)
        S = networks.row_normalize(adj, args.self_weight)
        networks.save_edge_list(adj, f"{args.out}_edges.csv")
    elif args.kind == "ring":
        S = networks.ring(args.nodes)
    else:
        S = networks.identity(args.nodes)
    networks.save_matrix(S, f"{args.out}_matrix.csv")
    print(f"matrix: {args.out}_matrix.csv")
    return 0


def _cmd_compare(args) -> int:
    report = experiment.compare_curves(args.curve_a, args.curve_b)
    print(f"points: {report.n_points}")
    print(f"linf: {report.linf:.17g}")
    print(f"l1_mean: {report.l1_mean:.17g}")
    print(f"final_abs_diff: {report.final_abs_diff:.17g}")
    return 0


def _cmd_reproduce(args) -> int:
    threads = args.threads if args.threads is not None else _default_threads()
    configs = experiment.figure_configs(
        args.figure,
        args.out,
        seed=args.seed,
        t_max=args.t_max,
        replicates=args.replicates,
        threads=threads,
    )
    for cfg in configs:
        config_path = f"{cfg.out_prefix}_config.json"
        parent = os.path.dirname(os.path.abspath(config_path))
        os.makedirs(parent, exist_ok=True)
        with open(config_path, "w") as fh:
            json.dump(experiment.config_to_dict(cfg), fh, indent=2, sort_keys=True)
            fh.write("\n")
        summary = experiment.run(cfg)
        print(f"memory {cfg.raw.memory}: {summary['summary_path']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polyanet",
        description=(
            "Finite-memory interacting Polya urn networks: simulation, exact "
            "chain analysis and mean-field approximation."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-network", help="generate an interaction matrix")
    g.add_argument("--kind", required=True,
                   choices=["barabasi-albert", "ring", "complete", "identity"])
    g.add_argument("--nodes", type=int, required=True)
    g.add_argument("--attach", type=int, default=None,
                   help="edges per new node (barabasi-albert)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--self-weight", type=float, default=1.0, dest="self_weight")
    g.add_argument("--out", required=True, help="output path prefix")
    g.set_defaults(func=_cmd_gen_network)

    for name, modes, helptext in (
        ("simulate", ["montecarlo"], "Monte Carlo replicate averages"),
        ("exact", ["exact"], "exact chain transient marginals"),
        ("meanfield", None, "mean-field trajectories"),
        ("equilibrium", ["equilibrium"], "mean-field equilibrium report"),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_run_args(p)
        if name == "meanfield":
            p.add_argument(
                "--system",
                choices=["nonlinear", "linear", "both"],
                default="both",
            )
        p.set_defaults(func=_make_run_handler(name, modes))

    c = sub.add_parser("compare", help="distances between two curve CSVs")
    c.add_argument("curve_a")
    c.add_argument("curve_b")
    c.set_defaults(func=_cmd_compare)

    r = sub.add_parser(
        "reproduce-fig",
        help="rerun a figure family (memory 1..3) with documented parameters",
    )
    r.add_argument("figure", choices=["1", "2", "3"])
    r.add_argument("--out", required=True, help="artifact prefix")
    r.add_argument("--seed", type=int, default=experiment.FIGURE_SEED)
    r.add_argument("--t-max", type=int, default=1000, dest="t_max")
    r.add_argument("--replicates", type=int, default=100)
    r.add_argument("--threads", type=int, default=None)
    r.set_defaults(func=_cmd_reproduce)

    return parser


def _make_run_handler(name: str, modes):
    def handler(args) -> int:
        if name == "meanfield":
            selected = (
                ["meanfield-nonlinear", "meanfield-linear"]
                if args.system == "both"
                else [f"meanfield-{args.system}"]
            )
        else:
            selected = modes
        cfg = _load_for_run(args, selected)
        return _run_and_report(cfg)

    return handler


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, UnstableSystemError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except CapExceededError as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
