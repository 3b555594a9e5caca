"""Command line front end: point estimates with intervals, Monte Carlo
experiments, modulus evaluation, and the benchmark suites.

Exit codes: 0 success, 1 a requested check failed, 2 malformed input,
3 t0 at the boundary of the observation window.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

from . import harness
from .convex_wn import ci_c_adaptive, j_star_c
from .families import CONVEX_FAMILY, MONOTONE_FAMILY, matrix
from .functions import (
    FunctionSpec,
    Linear,
    ShapeClass,
    Square,
    classify,
    describe,
    evaluate,
    from_dict,
    from_json,
)
from .intervals import normal_upper_quantile
from .modulus import (
    BenchmarkReport,
    ModulusQuery,
    UncoveredCaseError,
    WindowError,
    benchmark_row,
    convex_length_cap,
    modulus_analytic,
    modulus_numeric,
    monotone_length_cap,
)
from .monotone_wn import ci_m_adaptive, j_star_m
from .regression import (
    RegressionSample,
    ci_reg_c,
    ci_reg_m,
    estimate_sigma,
    read_sample_csv,
    simulate_regression,
)
from .white_noise import SeedSpec, required_abscissae, sample_path

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_MALFORMED = 2
EXIT_BOUNDARY = 3

RATE_SUITE = (
    ("linear_k1", Linear(k=1.0), ShapeClass.MONOTONE, -1.0 / 3.0),
    ("linear_k1", Linear(k=1.0), ShapeClass.CONVEX, -0.5),
    ("square", Square(), ShapeClass.CONVEX, -0.4),
)

MODULUS_EPS_GRID = (0.005, 0.01, 0.02, 0.05)


@dataclass
class CliConfig:
    subcommand: str
    config_path: str | None
    outdir: str
    seed: int
    overrides: dict = field(default_factory=dict)


def _load_config(path: str) -> dict:
    if path.endswith(".toml"):
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    if path.endswith(".json"):
        with open(path) as fh:
            out = json.load(fh)
            if not isinstance(out, dict):
                raise ValueError("config root must be a mapping")
            return out
    raise ValueError(f"config must be .toml or .json, got {path!r}")


def _parse_function(text: str) -> FunctionSpec:
    if text.lstrip().startswith("{"):
        return from_json(text)
    with open(text) as fh:
        return from_json(fh.read())


def _function_from(value) -> FunctionSpec:
    """Coerce a flag or config value: JSON text, a path, or a parsed table."""
    if isinstance(value, dict):
        return from_dict(value)
    if isinstance(value, str):
        return _parse_function(value)
    raise ValueError(f"bad function value: {value!r}")


def _resolve_seed(flag: int | None, cfg: dict) -> int:
    if flag is not None:
        return flag
    if "seed" in cfg:
        return int(cfg["seed"])
    env = os.environ.get("SHAPECI_SEED")
    if env is not None:
        return int(env)
    return 0


def _hash_payload(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _emit(text: str, out: str | None, outdir: str) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = out if os.path.isabs(out) else os.path.join(outdir, out)
    with open(path, "w") as fh:
        fh.write(text)


def _pick(flag, cfg: dict, key: str, default):
    if flag is not None:
        return flag
    if key in cfg:
        return cfg[key]
    return default


def _shape(value: str) -> ShapeClass:
    return ShapeClass(value)


# ---------------------------------------------------------------- ci


def _shape_warnings(shape: ShapeClass, levels, stats, scales) -> list[str]:
    """Levels where a selection statistic is far below anything the shape
    allows.  Heuristic only: shape cannot be verified from noisy data."""
    bad = [
        j
        for j, s, sd in zip(levels, stats, scales)
        if s is not None and s < -4.0 * sd
    ]
    if not bad:
        return []
    return [
        f"data look inconsistent with a {shape.value} signal at level(s) {bad}"
    ]


def cmd_ci(args, cfg: dict, conf: CliConfig) -> int:
    alpha = float(_pick(args.alpha, cfg, "alpha", 0.05))
    t0 = float(_pick(args.t0, cfg, "t0", 0.0))
    n = int(_pick(args.n, cfg, "n", 4096))
    shape = _shape(args.shape)
    if abs(t0) == 0.5:
        print(
            "error: t0 at the edge of the observation window; any interval "
            "with guaranteed coverage there is unbounded",
            file=sys.stderr,
        )
        return EXIT_BOUNDARY

    record: dict = {
        "seed": conf.seed,
        "shape": shape.value,
        "alpha": alpha,
        "t0": t0,
        "warnings": [],
    }

    if args.data is not None:
        if t0 != 0.0:
            print("error: regression intervals target t0 = 0", file=sys.stderr)
            return EXIT_MALFORMED
        raw = read_sample_csv(args.data, sigma=args.sigma if args.sigma is not None else 0.0)
        if args.sigma is None:
            sigma = estimate_sigma(raw.y)
            raw = RegressionSample(n=raw.n, y=raw.y, sigma=sigma)
            record["sigma_estimated"] = True
        record["model"] = "regression"
        record["n"] = raw.n
        record["sigma"] = raw.sigma
        with open(args.data, "rb") as fh:
            data_digest = hashlib.sha256(fh.read()).hexdigest()[:16]
        record["config"] = _hash_payload(
            {"data": data_digest, "shape": shape.value, "alpha": alpha}
        )
        if shape is ShapeClass.MONOTONE:
            ci, stats = ci_reg_m(raw, alpha)
            record["warnings"] += _shape_warnings(
                shape, stats.j_values, stats.xi, stats.sigma
            )
        else:
            ci, stats = ci_reg_c(raw, alpha)
            record["capped"] = stats.capped
            record["warnings"] += _shape_warnings(
                shape, stats.j_values, stats.t_stat, stats.sigma
            )
        record["j_hat"] = stats.j_hat
    else:
        func = _function_from(_pick(args.function, cfg, "function", None))
        record["function"] = describe(func)
        model = _pick(args.model, cfg, "model", harness.WHITE_NOISE)
        record["model"] = model
        record["n"] = n
        record["config"] = _hash_payload(
            {
                "function": describe(func),
                "model": model,
                "shape": shape.value,
                "alpha": alpha,
                "t0": t0,
                "n": n,
                "seed": conf.seed,
            }
        )
        if model == harness.REGRESSION:
            if t0 != 0.0:
                print("error: regression intervals target t0 = 0", file=sys.stderr)
                return EXIT_MALFORMED
            sigma = args.sigma if args.sigma is not None else 1.0
            record["sigma"] = sigma
            sample = simulate_regression(func, n, sigma, SeedSpec(conf.seed))
            if shape is ShapeClass.MONOTONE:
                ci, stats = ci_reg_m(sample, alpha)
            else:
                ci, stats = ci_reg_c(sample, alpha)
                record["capped"] = stats.capped
        else:
            j_top = args.j_max if args.j_max is not None else int(math.log2(n))
            abscissae = required_abscissae(shape, t0, j_top)
            path = sample_path(func, n, abscissae, SeedSpec(conf.seed))
            if shape is ShapeClass.MONOTONE:
                ci, stats = ci_m_adaptive(path, t0, alpha, j_max=j_top)
            else:
                ci, stats = ci_c_adaptive(path, t0, alpha, j_max=j_top)
            record["truncated"] = stats.truncated
        record["true_value"] = evaluate(func, t0)
        record["j_hat"] = stats.j_hat

    record["interval"] = {"lower": ci.lower, "upper": ci.upper, "empty": ci.empty}
    record["length"] = ci.length
    for w in record["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    _emit(json.dumps(record, indent=2) + "\n", args.out, conf.outdir)
    return EXIT_OK


# ---------------------------------------------------------------- simulate


def cmd_simulate(args, cfg: dict, conf: CliConfig) -> int:
    raw = dict(cfg)
    if args.function is not None:
        raw["function"] = _parse_function(args.function)
    if args.model is not None:
        raw["model"] = args.model
    if args.shape is not None:
        raw["shape"] = args.shape
    if args.n is not None:
        raw["n_values"] = [int(v) for v in args.n.split(",")]
        raw.pop("n", None)
    if args.replications is not None:
        raw["replications"] = args.replications
    if args.alpha is not None:
        raw["alpha"] = args.alpha
    if args.t0 is not None:
        raw["t0"] = args.t0
    if args.sigma is not None:
        raw["sigma"] = args.sigma
    if args.workers is not None:
        raw["workers"] = args.workers
    if args.fixed_j is not None:
        raw["fixed_j"] = args.fixed_j
    if args.j_max is not None:
        raw["j_max"] = args.j_max
    if args.allow_misspecified:
        raw["allow_misspecified"] = True
    raw["seed"] = conf.seed
    plan = harness.plan_from_dict(raw)
    result = harness.run(plan)
    _emit(harness.result_to_csv(result), args.out, conf.outdir)
    if args.summary is not None:
        _emit(
            json.dumps(harness.result_to_summary(result), indent=2) + "\n",
            args.summary,
            conf.outdir,
        )
    return EXIT_OK


# ---------------------------------------------------------------- modulus


def cmd_modulus(args, cfg: dict, conf: CliConfig) -> int:
    func = _parse_function(args.function)
    shape = _shape(args.shape)
    t0 = float(_pick(args.t0, cfg, "t0", 0.0))
    grid = int(_pick(args.grid, cfg, "grid", 1025))
    eps_values = [float(v) for v in args.eps.split(",")]
    lines = [
        "# config="
        + _hash_payload(
            {
                "function": describe(func),
                "shape": shape.value,
                "eps": eps_values,
                "t0": t0,
                "grid": grid,
                "mode": args.mode,
            }
        )
        + f" seed={conf.seed}",
        "function,class,eps,omega_analytic,asymptotic,omega_numeric",
    ]
    for eps in eps_values:
        q = ModulusQuery(func, shape, eps, t0)
        analytic = ""
        asymptotic = ""
        if args.mode in ("analytic", "both"):
            try:
                a = modulus_analytic(q)
                analytic = repr(a.value)
                asymptotic = str(a.asymptotic).lower()
            except (UncoveredCaseError, WindowError) as exc:
                if args.mode == "analytic":
                    raise
                print(f"note: no closed form at eps={eps}: {exc}", file=sys.stderr)
        numeric = ""
        if args.mode in ("numeric", "both"):
            numeric = repr(modulus_numeric(q, grid_size=grid))
        lines.append(
            f"{describe(func)},{shape.value},{eps!r},{analytic},{asymptotic},{numeric}"
        )
    _emit("\n".join(lines) + "\n", args.out, conf.outdir)
    return EXIT_OK


# ---------------------------------------------------------------- bench


def _bench_example1(args, conf: CliConfig) -> int:
    grid = args.grid if args.grid is not None else 1025
    lines = [
        "# config="
        + _hash_payload({"suite": "example1", "grid": grid})
        + f" seed={conf.seed}",
        "function,class,eps,omega_analytic,omega_numeric,rel_err",
    ]
    for k in (0.0, 1.0, 5.0):
        for shape in (ShapeClass.MONOTONE, ShapeClass.CONVEX):
            for eps in MODULUS_EPS_GRID:
                q = ModulusQuery(Linear(k=k), shape, eps)
                exact = modulus_analytic(q).value
                num = modulus_numeric(q, grid_size=grid)
                rel = abs(num - exact) / exact
                lines.append(
                    f"linear_k{k:g},{shape.value},{eps!r},{exact!r},{num!r},{rel!r}"
                )
    _emit("\n".join(lines) + "\n", args.out, conf.outdir)
    return EXIT_OK


def _bench_constants(args, cfg: dict, conf: CliConfig) -> int:
    alpha = float(_pick(args.alpha, cfg, "alpha", 0.05))
    n = int(_pick(args.n, cfg, "n", 4096))
    reps = int(_pick(args.replications, cfg, "replications", 10_000))
    workers = args.workers if args.workers is not None else 1
    z = normal_upper_quantile(alpha)
    failures = []
    rows = []
    for label, func, shape in matrix():
        plan = harness.ExperimentPlan(
            model=harness.WHITE_NOISE,
            shape=shape,
            function=func,
            n_values=(n,),
            replications=reps,
            alpha=alpha,
            base_seed=conf.seed,
            workers=workers,
        )
        cell = harness.run(plan).cells[0]
        row = benchmark_row(func, shape, n, alpha, cell.mean_length, label)
        rows.append(row)
        three_se = 3.0 * cell.length_se
        if shape is ShapeClass.MONOTONE:
            cap = monotone_length_cap(alpha, row.sigma_jstar)
            c0 = cap / (z * row.sigma_jstar)
            ratio_cap = 14.40
        else:
            cap = convex_length_cap(alpha, row.sigma_jstar)
            c0 = cap / (z * row.sigma_jstar)
            ratio_cap = 24.0
        checks = [
            ("length_cap", cell.mean_length, cap + three_se),
            ("c0_ratio", cell.mean_length / (z * row.sigma_jstar), c0 + three_se),
        ]
        if alpha == 0.05:
            checks.append(("lb_ratio", row.ratio, ratio_cap))
        if row.lb_thm3or5 > cap:
            checks.append(("chain", row.lb_thm3or5, cap))
        for name, value, bound in checks:
            if value > bound:
                failures.append(
                    {
                        "check": name,
                        "function": label,
                        "class": shape.value,
                        "value": value,
                        "bound": bound,
                    }
                )
    report = BenchmarkReport(rows=tuple(rows))
    provenance = (
        "config="
        + _hash_payload({"suite": "constants", "alpha": alpha, "n": n, "reps": reps})
        + f" seed={conf.seed}"
    )
    _emit(report.to_csv(provenance=provenance), args.out, conf.outdir)
    if failures:
        print(json.dumps({"failures": failures}, indent=2), file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def _bench_rates(args, cfg: dict, conf: CliConfig) -> int:
    reps = int(_pick(args.replications, cfg, "replications", 1_000))
    workers = args.workers if args.workers is not None else 1
    alpha = float(_pick(args.alpha, cfg, "alpha", 0.05))
    n_values = tuple(2**e for e in range(12, 19))
    tol = 0.08
    failures = []
    lines = [
        "# config="
        + _hash_payload({"suite": "rates", "alpha": alpha, "reps": reps})
        + f" seed={conf.seed}",
        "function,class,target_slope,fitted_slope,stderr,n_lo,n_hi,pass",
    ]
    for label, func, shape, target in RATE_SUITE:
        plan = harness.ExperimentPlan(
            model=harness.WHITE_NOISE,
            shape=shape,
            function=func,
            n_values=n_values,
            replications=reps,
            alpha=alpha,
            base_seed=conf.seed,
            workers=workers,
        )
        result = harness.run(plan)
        fit = harness.rate_fit(n_values, [c.mean_length for c in result.cells])
        ok = abs(fit.slope - target) <= tol
        if not ok:
            failures.append(
                {
                    "check": "rate",
                    "function": label,
                    "class": shape.value,
                    "value": fit.slope,
                    "target": target,
                    "tol": tol,
                }
            )
        lines.append(
            f"{label},{shape.value},{target!r},{fit.slope!r},{fit.stderr!r},"
            f"{n_values[0]},{n_values[-1]},{str(ok).lower()}"
        )
    _emit("\n".join(lines) + "\n", args.out, conf.outdir)
    if failures:
        print(json.dumps({"failures": failures}, indent=2), file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_bench(args, cfg: dict, conf: CliConfig) -> int:
    if args.suite == "example1":
        return _bench_example1(args, conf)
    if args.suite == "constants":
        return _bench_constants(args, cfg, conf)
    return _bench_rates(args, cfg, conf)


# ---------------------------------------------------------------- rates


def cmd_rates(args, cfg: dict, conf: CliConfig) -> int:
    func = _parse_function(args.function)
    shape = _shape(args.shape)
    n_values = tuple(int(v) for v in args.n.split(","))
    reps = int(_pick(args.replications, cfg, "replications", 1_000))
    plan = harness.ExperimentPlan(
        model=_pick(args.model, cfg, "model", harness.WHITE_NOISE),
        shape=shape,
        function=func,
        n_values=n_values,
        replications=reps,
        alpha=float(_pick(args.alpha, cfg, "alpha", 0.05)),
        sigma=float(_pick(args.sigma, cfg, "sigma", 1.0)),
        base_seed=conf.seed,
        workers=args.workers if args.workers is not None else 1,
    )
    result = harness.run(plan)
    fit = harness.rate_fit(n_values, [c.mean_length for c in result.cells])
    record = {
        "config": result.config_hash,
        "seed": conf.seed,
        "function": describe(func),
        "class": shape.value,
        "slope": fit.slope,
        "intercept": fit.intercept,
        "stderr": fit.stderr,
        "mean_lengths": {str(c.n): c.mean_length for c in result.cells},
    }
    status = EXIT_OK
    if args.target is not None:
        ok = abs(fit.slope - args.target) <= args.tol
        record["target"] = args.target
        record["tol"] = args.tol
        record["pass"] = ok
        if not ok:
            status = EXIT_CHECK_FAILED
    _emit(json.dumps(record, indent=2) + "\n", args.out, conf.outdir)
    return status


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shapeci",
        description="Confidence intervals for a function value under monotone or convex constraints",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML or JSON config file")
    common.add_argument("--outdir", default=".", help="directory for output files")
    common.add_argument("--seed", type=int, help="base seed (env SHAPECI_SEED as fallback)")
    common.add_argument("--out", help="output file (default: stdout)")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_ci = sub.add_parser("ci", parents=[common], help="one interval from data or a synthetic draw")
    p_ci.add_argument("--shape", required=True, choices=[s.value for s in ShapeClass])
    p_ci.add_argument("--function", help="function spec as JSON or a path to one")
    p_ci.add_argument("--model", choices=[harness.WHITE_NOISE, harness.REGRESSION])
    p_ci.add_argument("--data", help="regression CSV with header i,x,y")
    p_ci.add_argument("--sigma", type=float, help="noise sd (estimated from data when omitted)")
    p_ci.add_argument("--t0", type=float)
    p_ci.add_argument("--alpha", type=float)
    p_ci.add_argument("--n", type=int)
    p_ci.add_argument("--j-max", dest="j_max", type=int)

    p_sim = sub.add_parser("simulate", parents=[common], help="replicated coverage/length experiment")
    p_sim.add_argument("--shape", choices=[s.value for s in ShapeClass])
    p_sim.add_argument("--function")
    p_sim.add_argument("--model", choices=[harness.WHITE_NOISE, harness.REGRESSION])
    p_sim.add_argument("--n", help="comma-separated n list")
    p_sim.add_argument("--replications", type=int)
    p_sim.add_argument("--alpha", type=float)
    p_sim.add_argument("--t0", type=float)
    p_sim.add_argument("--sigma", type=float)
    p_sim.add_argument("--workers", type=int)
    p_sim.add_argument("--fixed-j", dest="fixed_j", type=int)
    p_sim.add_argument("--j-max", dest="j_max", type=int)
    p_sim.add_argument("--allow-misspecified", action="store_true")
    p_sim.add_argument("--summary", help="also write a JSON summary here")

    p_mod = sub.add_parser("modulus", parents=[common], help="local modulus, closed form and oracle")
    p_mod.add_argument("--shape", required=True, choices=[s.value for s in ShapeClass])
    p_mod.add_argument("--function", required=True)
    p_mod.add_argument("--eps", required=True, help="comma-separated eps list")
    p_mod.add_argument("--mode", choices=["analytic", "numeric", "both"], default="both")
    p_mod.add_argument("--grid", type=int)
    p_mod.add_argument("--t0", type=float)

    p_bench = sub.add_parser("bench", parents=[common], help="benchmark suites")
    p_bench.add_argument("--suite", required=True, choices=["example1", "constants", "rates"])
    p_bench.add_argument("--alpha", type=float)
    p_bench.add_argument("--n", type=int)
    p_bench.add_argument("--replications", type=int)
    p_bench.add_argument("--workers", type=int)
    p_bench.add_argument("--grid", type=int)

    p_rates = sub.add_parser("rates", parents=[common], help="rate-exponent fit for one cell")
    p_rates.add_argument("--shape", required=True, choices=[s.value for s in ShapeClass])
    p_rates.add_argument("--function", required=True)
    p_rates.add_argument("--model", choices=[harness.WHITE_NOISE, harness.REGRESSION])
    p_rates.add_argument("--n", required=True, help="comma-separated geometric n ladder")
    p_rates.add_argument("--replications", type=int)
    p_rates.add_argument("--alpha", type=float)
    p_rates.add_argument("--sigma", type=float)
    p_rates.add_argument("--workers", type=int)
    p_rates.add_argument("--target", type=float, help="expected slope; enables pass/fail")
    p_rates.add_argument("--tol", type=float, default=0.08)

    return parser


_DISPATCH = {
    "ci": cmd_ci,
    "simulate": cmd_simulate,
    "modulus": cmd_modulus,
    "bench": cmd_bench,
    "rates": cmd_rates,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args.config) if args.config else {}
        seed = _resolve_seed(args.seed, cfg)
        outdir = args.outdir
        os.makedirs(outdir, exist_ok=True)
        if not os.access(outdir, os.W_OK):
            raise ValueError(f"output directory {outdir!r} is not writable")
        conf = CliConfig(
            subcommand=args.subcommand,
            config_path=args.config,
            outdir=outdir,
            seed=seed,
        )
        if (
            args.subcommand == "ci"
            and args.data is None
            and args.function is None
            and "function" not in cfg
        ):
            raise ValueError("ci needs either --data or --function")
        return _DISPATCH[args.subcommand](args, cfg, conf)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED


if __name__ == "__main__":
    sys.exit(main())
