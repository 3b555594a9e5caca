#!/usr/bin/env python3
"""Run the coverage matrix (every test function under its shape class) and
print one summary line per cell.  Smaller defaults than the acceptance gate
so it finishes quickly; crank --replications and --n for the real thing.
"""

import argparse
import sys
import time

from shapeci.families import matrix
from shapeci.harness import REGRESSION, WHITE_NOISE, ExperimentPlan, run


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--model", choices=(WHITE_NOISE, REGRESSION), default=WHITE_NOISE)
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--replications", type=int, default=2000)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--sigma", type=float, default=1.0, help="regression noise level")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args(argv)

    print(f"model={args.model} n={args.n} R={args.replications} alpha={args.alpha}")
    print(f"{'cell':28s} {'coverage':>9s} {'se':>7s} {'length':>8s} {'lb ratio':>8s} {'sec':>6s}")
    worst = 1.0
    for label, f, shape in matrix():
        plan = ExperimentPlan(
            model=args.model,
            shape=shape,
            function=f,
            n_values=(args.n,),
            replications=args.replications,
            alpha=args.alpha,
            sigma=args.sigma,
            base_seed=args.seed,
            workers=args.workers,
        )
        start = time.perf_counter()
        cell = run(plan).cells[0]
        elapsed = time.perf_counter() - start
        ratio = "" if cell.length_ratio_to_lb is None else f"{cell.length_ratio_to_lb:8.2f}"
        print(
            f"{label + '/' + shape.value:28s} {cell.coverage:9.4f} "
            f"{cell.coverage_se:7.4f} {cell.mean_length:8.4f} {ratio:>8s} {elapsed:6.1f}"
        )
        worst = min(worst, cell.coverage)
    target = 1.0 - args.alpha
    print(f"min coverage {worst:.4f} (nominal {target:.2f})")
    return 0 if worst >= target - 3.0 * (target * args.alpha / args.replications) ** 0.5 else 1


if __name__ == "__main__":
    sys.exit(main())
