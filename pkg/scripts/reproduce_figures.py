"""Rerun the benchmark figure families end to end.

Each family produces, per memory value M = 1, 2, 3, the Monte Carlo
replicate-average curve and both mean-field trajectories, plus a JSON
summary with pairwise curve distances.  Family 1 is the 100-node
network, family 2 the 10-node heterogeneous one, family 3 the 10-node
homogeneous benchmark (rho = 0.48, delta = 0.44).
"""

import argparse
import json
import os
import sys

from polyanet import cli


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--figure", choices=["1", "2", "3", "all"], default="all")
    parser.add_argument("--out", default="out/figures", help="artifact directory")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--t-max", type=int, default=1000, dest="t_max")
    parser.add_argument("--replicates", type=int, default=100)
    parser.add_argument("--threads", type=int, default=None)
    args = parser.parse_args(argv)

    figures = ["1", "2", "3"] if args.figure == "all" else [args.figure]
    os.makedirs(args.out, exist_ok=True)
    for which in figures:
        cmd = [
            "reproduce-fig", which,
            "--out", os.path.join(args.out, f"fig{which}"),
            "--t-max", str(args.t_max),
            "--replicates", str(args.replicates),
        ]
        if args.seed is not None:
            cmd += ["--seed", str(args.seed)]
        if args.threads is not None:
            cmd += ["--threads", str(args.threads)]
        code = cli.main(cmd)
        if code != 0:
            return code
        for memory in (1, 2, 3):
            path = os.path.join(args.out, f"fig{which}_m{memory}_summary.json")
            with open(path) as fh:
                summary = json.load(fh)
            gaps = ", ".join(
                f"{k}: {v:.5f}" for k, v in sorted(summary["comparisons"].items())
            )
            print(f"figure {which} M={memory}: {gaps}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
