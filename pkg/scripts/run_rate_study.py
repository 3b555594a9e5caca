#!/usr/bin/env python3
"""Fit the length-vs-n rate exponent for each test function and compare to
the theoretical slope.  Uses a dyadic ladder of sample sizes.
"""

import argparse
import sys

from shapeci.families import matrix
from shapeci.harness import WHITE_NOISE, ExperimentPlan, rate_fit, run
from shapeci.modulus import modulus_exponent


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--min-exp", type=int, default=10, help="smallest n is 2**this")
    p.add_argument("--max-exp", type=int, default=15)
    p.add_argument("--replications", type=int, default=500)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=0.08)
    args = p.parse_args(argv)

    if args.max_exp - args.min_exp < 3:
        print("need at least four ladder points", file=sys.stderr)
        return 2
    n_values = tuple(2**e for e in range(args.min_exp, args.max_exp + 1))
    print(f"n ladder {n_values}, R={args.replications}")

    bad = 0
    for label, f, shape in matrix():
        target = -modulus_exponent(f, shape) / 2.0
        plan = ExperimentPlan(
            model=WHITE_NOISE,
            shape=shape,
            function=f,
            n_values=n_values,
            replications=args.replications,
            alpha=args.alpha,
            base_seed=args.seed,
        )
        result = run(plan)
        fit = rate_fit(n_values, [c.mean_length for c in result.cells])
        err = abs(fit.slope - target)
        flag = "" if err <= args.tol else "  <-- off target"
        print(
            f"{label + '/' + shape.value:28s} slope {fit.slope:+.4f} "
            f"target {target:+.4f} (se {fit.stderr:.4f}){flag}"
        )
        bad += err > args.tol
    return 0 if bad == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
