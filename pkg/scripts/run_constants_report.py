#!/usr/bin/env python3
"""Build the benchmark constants report: for each test function, the oracle
level j_*, its noise scale, the theoretical lower bounds, the expected-length
cap, and a Monte Carlo mean length to compare against.  Writes the CSV to
stdout or --out.
"""

import argparse
import sys

from shapeci.families import matrix
from shapeci.functions import ShapeClass
from shapeci.harness import WHITE_NOISE, ExperimentPlan, run
from shapeci.modulus import BenchmarkReport, benchmark_row


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--replications", type=int, default=2000)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None, help="CSV path (default stdout)")
    args = p.parse_args(argv)

    rows = []
    for label, f, shape in matrix():
        plan = ExperimentPlan(
            model=WHITE_NOISE,
            shape=shape,
            function=f,
            n_values=(args.n,),
            replications=args.replications,
            alpha=args.alpha,
            base_seed=args.seed,
            workers=args.workers,
        )
        cell = run(plan).cells[0]
        rows.append(
            benchmark_row(f, shape, args.n, args.alpha, cell.mean_length, label=label)
        )
        print(f"{label}/{shape.value}: mean length {cell.mean_length:.5f}", file=sys.stderr)

    report = BenchmarkReport(rows=tuple(rows))
    text = report.to_csv(
        f"n={args.n} alpha={args.alpha} replications={args.replications} seed={args.seed}"
    )
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
