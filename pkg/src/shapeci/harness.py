"""Replicated Monte Carlo experiments over the two confidence interval
constructions, with deterministic parallelism.

Replication r always draws from the Philox stream keyed (base_seed, r), and
per-chunk aggregates are merged in chunk order, so results are byte-identical
for any worker count.  The config hash excludes the worker count for the same
reason.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .convex_wn import ci_c_adaptive, ci_c_fixed, collect_stats_c
from .functions import FunctionSpec, ShapeClass, classify, evaluate, from_dict, to_dict
from .modulus import lower_bound_thm3, lower_bound_thm5
from .monotone_wn import ci_m_adaptive, ci_m_fixed, collect_stats_m
from .regression import ci_reg_c, ci_reg_m, simulate_regression
from .white_noise import (
    SeedSpec,
    convex_j_floor,
    monotone_j_floor,
    required_abscissae,
    sample_path,
)

CHUNK_SIZE = 256

MAX_REPLICATIONS = 1_000_000
MAX_N = 2**22

WHITE_NOISE = "white_noise"
REGRESSION = "regression"


@dataclass(frozen=True)
class ExperimentPlan:
    model: str
    shape: ShapeClass
    function: FunctionSpec
    n_values: tuple[int, ...]
    replications: int
    t0: float = 0.0
    alpha: float = 0.05
    sigma: float = 1.0
    base_seed: int = 0
    workers: int = 1
    fixed_j: int | None = None
    j_max: int | None = None
    allow_misspecified: bool = False

    def __post_init__(self):
        if self.model not in (WHITE_NOISE, REGRESSION):
            raise ValueError(f"unknown model {self.model!r}")
        if self.replications < 100:
            raise ValueError("replications must be at least 100")
        if self.replications > MAX_REPLICATIONS:
            raise ValueError(f"replication count {self.replications} over resource cap")
        if not 0.0 < self.alpha <= 0.2:
            raise ValueError(f"alpha must lie in (0, 0.2], got {self.alpha}")
        if not self.n_values:
            raise ValueError("n_values is empty")
        for n in self.n_values:
            if n < 4:
                raise ValueError(f"n must be at least 4, got {n}")
            if n > MAX_N:
                raise ValueError(f"n={n} over resource cap")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.shape not in classify(self.function) and not self.allow_misspecified:
            raise ValueError(
                f"{self.function!r} is not in the {self.shape.value} class; "
                "set allow_misspecified to study misspecification"
            )
        if self.model == REGRESSION:
            if self.t0 != 0.0:
                raise ValueError("the regression estimators target t0 = 0 only")
            if self.sigma < 0:
                raise ValueError(f"sigma must be nonnegative, got {self.sigma}")
            if self.fixed_j is not None:
                raise ValueError("fixed_j is supported in the white-noise model only")
            if self.shape is ShapeClass.CONVEX and min(self.n_values) < 8:
                raise ValueError("convex regression interval needs n >= 8")
        else:
            floor = (
                monotone_j_floor(self.t0)
                if self.shape is ShapeClass.MONOTONE
                else convex_j_floor(self.t0)
            )
            if self.fixed_j is not None and self.fixed_j < floor:
                raise ValueError(f"fixed_j={self.fixed_j} below the level floor {floor}")


@dataclass(frozen=True)
class CellResult:
    n: int
    replications: int
    coverage: float
    coverage_se: float
    mean_length: float
    length_se: float
    empty_freq: float
    truncation_freq: float
    j_hat_counts: dict[int, int] = field(default_factory=dict)
    length_ratio_to_lb: float | None = None


@dataclass(frozen=True)
class ExperimentResult:
    plan: ExperimentPlan
    cells: tuple[CellResult, ...]
    config_hash: str


def config_hash(plan: ExperimentPlan) -> str:
    """Hash of everything that can change the numbers; workers excluded."""
    payload = {
        "model": plan.model,
        "shape": plan.shape.value,
        "function": to_dict(plan.function),
        "t0": plan.t0,
        "alpha": plan.alpha,
        "n_values": list(plan.n_values),
        "replications": plan.replications,
        "base_seed": plan.base_seed,
        "fixed_j": plan.fixed_j,
        "j_max": plan.j_max,
        "allow_misspecified": plan.allow_misspecified,
    }
    if plan.model == REGRESSION:
        payload["sigma"] = plan.sigma
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _replicate_wn(plan: ExperimentPlan, n: int, rep: int, abscissae, j_top: int):
    path = sample_path(plan.function, n, abscissae, SeedSpec(plan.base_seed, rep))
    if plan.shape is ShapeClass.MONOTONE:
        if plan.fixed_j is not None:
            stats = collect_stats_m(path, plan.t0, plan.fixed_j)
            ci = ci_m_fixed(stats, plan.fixed_j, plan.alpha)
            return ci, plan.fixed_j, False
        ci, stats = ci_m_adaptive(path, plan.t0, plan.alpha, j_max=j_top)
        return ci, stats.j_hat, stats.truncated
    if plan.fixed_j is not None:
        stats = collect_stats_c(path, plan.t0, plan.fixed_j)
        ci = ci_c_fixed(stats, plan.fixed_j, plan.alpha)
        return ci, plan.fixed_j, False
    ci, stats = ci_c_adaptive(path, plan.t0, plan.alpha, j_max=j_top)
    return ci, stats.j_hat, stats.truncated


def _replicate_reg(plan: ExperimentPlan, n: int, rep: int):
    sample = simulate_regression(
        plan.function, n, plan.sigma, SeedSpec(plan.base_seed, rep)
    )
    if plan.shape is ShapeClass.MONOTONE:
        ci, stats = ci_reg_m(sample, plan.alpha)
        return ci, stats.j_hat, False
    ci, stats = ci_reg_c(sample, plan.alpha)
    return ci, stats.j_hat, stats.capped


def _wn_j_top(plan: ExperimentPlan, n: int) -> int:
    if plan.fixed_j is not None:
        j_top = plan.fixed_j
    elif plan.j_max is not None:
        j_top = plan.j_max
    else:
        j_top = int(math.log2(n))
    cap = int(math.log2(n))
    if j_top > cap:
        raise ValueError(f"level {j_top} too fine for n={n} (max {cap})")
    return j_top


def _run_chunk(args) -> tuple[int, float, float, int, int, dict[int, int], int]:
    """One contiguous block of replications; returns order-free aggregates.

    Module-level so ProcessPoolExecutor can pickle it.
    """
    plan, n, start, stop = args
    truth = evaluate(plan.function, plan.t0)
    if plan.model == WHITE_NOISE:
        j_top = _wn_j_top(plan, n)
        abscissae = required_abscissae(plan.shape, plan.t0, j_top)
    covered = 0
    length_sum = 0.0
    length_sumsq = 0.0
    empties = 0
    truncations = 0
    j_counts: Counter[int] = Counter()
    for rep in range(start, stop):
        if plan.model == WHITE_NOISE:
            ci, j_used, truncated = _replicate_wn(plan, n, rep, abscissae, j_top)
        else:
            ci, j_used, truncated = _replicate_reg(plan, n, rep)
        if ci.contains(truth):
            covered += 1
        length_sum += ci.length
        length_sumsq += ci.length**2
        if ci.empty:
            empties += 1
        if truncated:
            truncations += 1
        j_counts[j_used] += 1
    return covered, length_sum, length_sumsq, empties, truncations, dict(j_counts), stop - start


def _lb_for_plan(plan: ExperimentPlan, n: int) -> float | None:
    """Expected-length lower bound when it applies to this cell, else None.

    The bound is stated in the white-noise scaling, so regression cells
    never get a ratio.
    """
    if plan.model != WHITE_NOISE:
        return None
    if plan.t0 != 0.0 or plan.shape not in classify(plan.function):
        return None
    try:
        if plan.shape is ShapeClass.MONOTONE:
            return lower_bound_thm3(plan.function, n, plan.alpha)
        return lower_bound_thm5(plan.function, n, plan.alpha)
    except ValueError:
        return None


def run(plan: ExperimentPlan) -> ExperimentResult:
    """Execute the plan; deterministic for a given base seed at any worker count."""
    chunk_args = []
    spans = []
    for n in plan.n_values:
        if plan.model == WHITE_NOISE:
            _wn_j_top(plan, n)  # validate level budget before spawning workers
        lo = 0
        first = len(chunk_args)
        while lo < plan.replications:
            hi = min(lo + CHUNK_SIZE, plan.replications)
            chunk_args.append((plan, n, lo, hi))
            lo = hi
        spans.append((n, first, len(chunk_args)))

    if plan.workers == 1:
        outputs = [_run_chunk(a) for a in chunk_args]
    else:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            outputs = list(pool.map(_run_chunk, chunk_args))

    cells = []
    for n, first, last in spans:
        covered = 0
        length_sum = 0.0
        length_sumsq = 0.0
        empties = 0
        truncations = 0
        j_counts: Counter[int] = Counter()
        reps = 0
        for out in outputs[first:last]:  # fixed merge order, see module docstring
            covered += out[0]
            length_sum += out[1]
            length_sumsq += out[2]
            empties += out[3]
            truncations += out[4]
            j_counts.update(out[5])
            reps += out[6]
        p_hat = covered / reps
        mean_len = length_sum / reps
        var_len = max(length_sumsq - reps * mean_len**2, 0.0) / (reps - 1)
        lb = _lb_for_plan(plan, n)
        cells.append(
            CellResult(
                n=n,
                replications=reps,
                coverage=p_hat,
                coverage_se=math.sqrt(p_hat * (1.0 - p_hat) / reps),
                mean_length=mean_len,
                length_se=math.sqrt(var_len / reps),
                empty_freq=empties / reps,
                truncation_freq=truncations / reps,
                j_hat_counts=dict(sorted(j_counts.items())),
                length_ratio_to_lb=None if lb is None else mean_len / lb,
            )
        )
    return ExperimentResult(plan=plan, cells=tuple(cells), config_hash=config_hash(plan))


def result_to_csv(result: ExperimentResult) -> str:
    """One row per (n, metric); floats via repr so bytes are reproducible."""
    lines = [
        f"# config={result.config_hash} seed={result.plan.base_seed}",
        "n,metric,value,stderr",
    ]
    for cell in result.cells:
        rows = [
            ("coverage", repr(cell.coverage), repr(cell.coverage_se)),
            ("mean_length", repr(cell.mean_length), repr(cell.length_se)),
            ("empty_freq", repr(cell.empty_freq), ""),
            ("truncation_freq", repr(cell.truncation_freq), ""),
        ]
        if cell.length_ratio_to_lb is not None:
            rows.append(("length_ratio_to_lb", repr(cell.length_ratio_to_lb), ""))
        for j, count in cell.j_hat_counts.items():
            rows.append((f"jhat_{j}", repr(count / cell.replications), ""))
        for metric, value, se in rows:
            lines.append(f"{cell.n},{metric},{value},{se}")
    return "\n".join(lines) + "\n"


def result_to_summary(result: ExperimentResult) -> dict:
    plan = result.plan
    return {
        "config": result.config_hash,
        "seed": plan.base_seed,
        "plan": {
            "model": plan.model,
            "shape": plan.shape.value,
            "function": to_dict(plan.function),
            "t0": plan.t0,
            "alpha": plan.alpha,
            "n_values": list(plan.n_values),
            "sigma": plan.sigma if plan.model == REGRESSION else None,
            "replications": plan.replications,
            "fixed_j": plan.fixed_j,
            "j_max": plan.j_max,
        },
        "cells": [
            {
                "n": c.n,
                "replications": c.replications,
                "coverage": c.coverage,
                "coverage_se": c.coverage_se,
                "mean_length": c.mean_length,
                "length_se": c.length_se,
                "empty_freq": c.empty_freq,
                "truncation_freq": c.truncation_freq,
                "j_hat_counts": {str(j): k for j, k in c.j_hat_counts.items()},
                "length_ratio_to_lb": c.length_ratio_to_lb,
            }
            for c in result.cells
        ],
    }


def plan_from_dict(raw: dict) -> ExperimentPlan:
    """Build a plan from a parsed TOML/JSON mapping; unknown keys rejected."""
    known = {
        "model",
        "shape",
        "function",
        "n",
        "n_values",
        "replications",
        "t0",
        "alpha",
        "sigma",
        "seed",
        "workers",
        "fixed_j",
        "j_max",
        "allow_misspecified",
    }
    extra = set(raw) - known
    if extra:
        raise ValueError(f"unknown plan keys: {sorted(extra)}")
    if "function" not in raw:
        raise ValueError("plan is missing 'function'")
    if "n" in raw and "n_values" in raw:
        raise ValueError("give either 'n' or 'n_values', not both")
    n_raw = raw.get("n_values", raw.get("n"))
    if n_raw is None:
        raise ValueError("plan is missing 'n'")
    n_values = tuple(int(v) for v in (n_raw if isinstance(n_raw, (list, tuple)) else [n_raw]))
    try:
        shape = ShapeClass(raw.get("shape", ""))
    except ValueError:
        raise ValueError(f"unknown shape {raw.get('shape')!r}") from None
    func = raw["function"]
    if isinstance(func, str):
        # TOML cannot nest JSON, so config files may give the function as a string
        try:
            func = json.loads(func)
        except json.JSONDecodeError:
            raise ValueError(f"function is not valid JSON: {func!r}") from None
    if isinstance(func, dict):
        func = from_dict(func)
    elif not isinstance(func, FunctionSpec):
        raise ValueError(f"bad function value: {func!r}")
    return ExperimentPlan(
        model=raw.get("model", WHITE_NOISE),
        shape=shape,
        function=func,
        n_values=n_values,
        replications=int(raw.get("replications", 10_000)),
        t0=float(raw.get("t0", 0.0)),
        alpha=float(raw.get("alpha", 0.05)),
        sigma=float(raw.get("sigma", 1.0)),
        base_seed=int(raw.get("seed", 0)),
        workers=int(raw.get("workers", 1)),
        fixed_j=None if raw.get("fixed_j") is None else int(raw["fixed_j"]),
        j_max=None if raw.get("j_max") is None else int(raw["j_max"]),
        allow_misspecified=bool(raw.get("allow_misspecified", False)),
    )


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    stderr: float


def rate_fit(n_values, mean_lengths) -> RateFit:
    """Least-squares slope of log mean-length against log n.

    Needs at least 4 points on a geometric ladder of n.
    """
    if len(n_values) != len(mean_lengths):
        raise ValueError("n_values and mean_lengths differ in length")
    if len(n_values) < 4:
        raise ValueError("rate fit needs at least 4 points")
    ratios = [n_values[i + 1] / n_values[i] for i in range(len(n_values) - 1)]
    if any(abs(r - ratios[0]) > 1e-9 * ratios[0] for r in ratios):
        raise ValueError("n_values must form a geometric ladder")
    xs = [math.log(n) for n in n_values]
    ys = [math.log(v) for v in mean_lengths]
    m = len(xs)
    xbar = sum(xs) / m
    ybar = sum(ys) / m
    sxx = sum((x - xbar) ** 2 for x in xs)
    sxy = sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = ybar - slope * xbar
    resid = sum((y - intercept - slope * x) ** 2 for x, y in zip(xs, ys))
    stderr = math.sqrt(resid / (m - 2) / sxx) if m > 2 else float("nan")
    return RateFit(slope=slope, intercept=intercept, stderr=stderr)
