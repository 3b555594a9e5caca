"""Adaptive confidence interval for f(t0) over the convex class, white noise.

The level-j estimator delta_j is a symmetric local average whose bias under
convexity is nonnegative and at least halves with each refinement; the
extrapolation 2 delta_{j+1} - delta_j therefore under-shoots, which yields a
valid lower endpoint.  The contrast T_j = delta_j - delta_{j+1} drives the
level selection, and the final interval spends level alpha/6 to absorb the
randomness of the selected level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .functions import FunctionSpec, ShapeClass, classify, evaluate, integrate
from .intervals import Interval, make_interval, normal_upper_quantile
from .monotone_wn import sigma_j
from .white_noise import DyadicPath, convex_j_floor

SQRT5 = math.sqrt(5.0)

_J_SEARCH_CAP = 200
_SLACK = 1e-10


@dataclass(frozen=True)
class ConvexWnStats:
    """Per-level records; delta is stored for j_values plus one extra level."""

    t0: float
    n: int
    j_values: tuple[int, ...]
    delta: tuple[float, ...]        # levels j_values[0] .. j_values[-1] + 1
    delta_tilde: tuple[float, ...]  # 2 delta_{j+1} - delta_j, per j_values
    t_stat: tuple[float, ...]       # delta_j - delta_{j+1}, per j_values
    sigma: tuple[float, ...]
    j_hat: int | None = None
    truncated: bool = False

    def at(self, j: int) -> int:
        if j not in self.j_values:
            raise ValueError(f"level {j} not recorded (have {self.j_values})")
        return j - self.j_values[0]


def delta_c(path: DyadicPath, t0: float, j: int) -> float:
    w = 2.0**-j
    return 2.0 ** (j - 1) * (path.value_at(t0 + w) - path.value_at(t0 - w))


def estimators_c(path: DyadicPath, t0: float, j: int) -> tuple[float, float, float]:
    """(delta_j, delta_{j+1}, T_j) read off the sampled path."""
    if j < convex_j_floor(t0):
        raise ValueError(f"level {j} below admissible floor at t0={t0}")
    d_j = delta_c(path, t0, j)
    d_next = delta_c(path, t0, j + 1)
    return d_j, d_next, d_j - d_next


def collect_stats_c(path: DyadicPath, t0: float, j_max: int) -> ConvexWnStats:
    j_min = convex_j_floor(t0)
    if j_max < j_min:
        raise ValueError(f"j_max {j_max} below admissible floor {j_min}")
    js = tuple(range(j_min, j_max + 1))
    delta = tuple(delta_c(path, t0, j) for j in range(j_min, j_max + 2))
    tilde = tuple(2.0 * delta[i + 1] - delta[i] for i in range(len(js)))
    tstat = tuple(delta[i] - delta[i + 1] for i in range(len(js)))
    return ConvexWnStats(
        t0=t0,
        n=path.n,
        j_values=js,
        delta=delta,
        delta_tilde=tilde,
        t_stat=tstat,
        sigma=tuple(sigma_j(j, path.n) for j in js),
    )


def ci_c_fixed(stats: ConvexWnStats, j: int, alpha: float) -> Interval:
    """[2 d_{j+1} - d_j - z_{a/2} sqrt5 sigma_j,  d_{j+1} + z_{a/2} sigma_{j+1}]."""
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"alpha must lie in (0, 1/2), got {alpha}")
    i = stats.at(j)
    z = normal_upper_quantile(alpha / 2.0)
    lower = stats.delta_tilde[i] - z * SQRT5 * stats.sigma[i]
    upper = stats.delta[i + 1] + z * sigma_j(j + 1, stats.n)
    return make_interval(lower, upper)


def select_j_c(stats: ConvexWnStats, alpha: float) -> tuple[int, bool]:
    """First level with T_j <= z_alpha sigma_j; truncation flagged."""
    z = normal_upper_quantile(alpha)
    for i, j in enumerate(stats.j_values):
        if stats.t_stat[i] <= z * stats.sigma[i]:
            return j, False
    return stats.j_values[-1], True


def ci_c_adaptive(
    path: DyadicPath, t0: float, alpha: float, j_max: int | None = None
) -> tuple[Interval, ConvexWnStats]:
    """Adaptive interval: select at level alpha, then spend alpha/6 on the interval.

    The alpha/6 split is part of the construction (its constants depend on
    it), so it is not exposed as a knob.
    """
    if j_max is None:
        j_max = int(math.log2(path.n))
    stats = collect_stats_c(path, t0, j_max)
    j_hat, truncated = select_j_c(stats, alpha)
    stats = replace(stats, j_hat=j_hat, truncated=truncated)
    return ci_c_fixed(stats, j_hat, alpha / 6.0), stats


def expected_delta(f: FunctionSpec, t0: float, j: int) -> float:
    """Exact mean of delta_j via the closed-form integral."""
    w = 2.0**-j
    return 2.0 ** (j - 1) * integrate(f, t0 - w, t0 + w)


def expected_t(f: FunctionSpec, t0: float, j: int) -> float:
    return expected_delta(f, t0, j) - expected_delta(f, t0, j + 1)


def lemma1_check(f: FunctionSpec, j: int, t0: float = 0.0) -> bool:
    """Bias structure of the symmetric averages under convexity.

    Verifies, with exact integrals and slack 1e-10, that the level-(j+1)
    bias is between 0 and half the level-j bias, and that the second
    difference E d_j - 3 E d_{j+1} + 2 E d_{j+2} is nonnegative.
    """
    if ShapeClass.CONVEX not in classify(f):
        raise ValueError(f"{f!r} is not convex on [-1/2, 1/2]")
    truth = evaluate(f, t0)
    b_j = expected_delta(f, t0, j) - truth
    b_next = expected_delta(f, t0, j + 1) - truth
    b_far = expected_delta(f, t0, j + 2) - truth
    ok_sign = b_next >= -_SLACK
    ok_halving = b_next <= 0.5 * b_j + _SLACK
    ok_second = (b_j - 3.0 * b_next + 2.0 * b_far) >= -_SLACK
    return bool(ok_sign and ok_halving and ok_second)


def j_star_c(
    f: FunctionSpec, n: int, alpha: float, t0: float = 0.0
) -> tuple[int, float]:
    """Benchmark level: first j with E T_j <= (2/3) z_alpha sigma_j."""
    z = normal_upper_quantile(alpha)
    j = convex_j_floor(t0)
    while j <= _J_SEARCH_CAP:
        s = sigma_j(j, n)
        if expected_t(f, t0, j) <= (2.0 / 3.0) * z * s:
            return j, s
        j += 1
    raise RuntimeError("benchmark level search did not terminate")
