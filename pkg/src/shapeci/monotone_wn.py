"""Adaptive confidence interval for f(t0) over the monotone class, white noise.

At resolution level j the procedure reads one-sided local slopes delta_R,
delta_L around t0 and a second-band contrast xi that measures how far the
function is from locally flat.  The selected level is the coarsest one at
which xi drops below its noise scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .functions import FunctionSpec, integrate
from .intervals import Interval, make_interval, normal_upper_quantile
from .white_noise import DyadicPath, monotone_j_floor

SQRT2 = math.sqrt(2.0)

_J_SEARCH_CAP = 200


def sigma_j(j: int, n: int) -> float:
    """Noise scale at level j: sqrt(2^(j-1)/n)."""
    if j < 1 or n < 1:
        raise ValueError(f"need j >= 1 and n >= 1, got j={j}, n={n}")
    return math.sqrt(2.0 ** (j - 1) / n)


@dataclass(frozen=True)
class MonotoneWnStats:
    """Per-level statistics for j = j_values[0]..j_values[-1], plus the pick."""

    t0: float
    n: int
    j_values: tuple[int, ...]
    delta_r: tuple[float, ...]
    delta_l: tuple[float, ...]
    xi: tuple[float, ...]
    sigma: tuple[float, ...]
    j_hat: int | None = None
    truncated: bool = False

    def at(self, j: int) -> int:
        if j not in self.j_values:
            raise ValueError(f"level {j} not recorded (have {self.j_values})")
        return j - self.j_values[0]


def delta_support(t0: float, j: int) -> tuple[tuple[float, float], tuple[float, float]]:
    """Increment intervals read by (delta_R, delta_L) at level j."""
    w = 2.0**-j
    return ((t0, t0 + w), (t0 - w, t0))


def xi_support(t0: float, j: int) -> tuple[tuple[float, float], tuple[float, float]]:
    """Increment intervals read by xi at level j (the two outer bands)."""
    w = 2.0**-j
    return ((t0 + w, t0 + 2 * w), (t0 - 2 * w, t0 - w))


def estimators_m(path: DyadicPath, t0: float, j: int) -> tuple[float, float, float]:
    """(delta_R, delta_L, xi) at level j, read off the sampled path."""
    if j < monotone_j_floor(t0):
        raise ValueError(f"level {j} below admissible floor at t0={t0}")
    y = path.value_at
    w = 2.0**-j
    scale = 2.0**j
    delta_r = scale * (y(t0 + w) - y(t0))
    delta_l = scale * (y(t0) - y(t0 - w))
    half = 2.0 ** (j - 1)
    xi = half * (y(t0 + 2 * w) - y(t0 + w)) - half * (y(t0 - w) - y(t0 - 2 * w))
    return delta_r, delta_l, xi


def collect_stats_m(path: DyadicPath, t0: float, j_max: int) -> MonotoneWnStats:
    j_min = monotone_j_floor(t0)
    if j_max < j_min:
        raise ValueError(f"j_max {j_max} below admissible floor {j_min}")
    js = tuple(range(j_min, j_max + 1))
    rows = [estimators_m(path, t0, j) for j in js]
    return MonotoneWnStats(
        t0=t0,
        n=path.n,
        j_values=js,
        delta_r=tuple(r[0] for r in rows),
        delta_l=tuple(r[1] for r in rows),
        xi=tuple(r[2] for r in rows),
        sigma=tuple(sigma_j(j, path.n) for j in js),
    )


def ci_m_fixed(stats: MonotoneWnStats, j: int, alpha: float) -> Interval:
    """Fixed-level interval [delta_L - z_{a/2} sqrt2 sigma_j, delta_R + z_{a/2} sqrt2 sigma_j]."""
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"alpha must lie in (0, 1/2), got {alpha}")
    i = stats.at(j)
    half = normal_upper_quantile(alpha / 2.0) * SQRT2 * stats.sigma[i]
    return make_interval(stats.delta_l[i] - half, stats.delta_r[i] + half)


def select_j_m(stats: MonotoneWnStats, alpha: float) -> tuple[int, bool]:
    """First level whose xi is below (3/2) z_alpha sigma_j; truncation flagged."""
    z = normal_upper_quantile(alpha)
    for i, j in enumerate(stats.j_values):
        if stats.xi[i] <= 1.5 * z * stats.sigma[i]:
            return j, False
    return stats.j_values[-1], True


def ci_m_adaptive(
    path: DyadicPath, t0: float, alpha: float, j_max: int | None = None
) -> tuple[Interval, MonotoneWnStats]:
    """The adaptive interval: fixed-level interval evaluated at the selected level.

    Coverage is guaranteed only when the target is monotone nondecreasing;
    checking that is the caller's responsibility.
    """
    if j_max is None:
        j_max = int(math.log2(path.n))
    stats = collect_stats_m(path, t0, j_max)
    j_hat, truncated = select_j_m(stats, alpha)
    stats = replace(stats, j_hat=j_hat, truncated=truncated)
    return ci_m_fixed(stats, j_hat, alpha), stats


def expected_delta_r(f: FunctionSpec, t0: float, j: int) -> float:
    return 2.0**j * integrate(f, t0, t0 + 2.0**-j)


def expected_delta_l(f: FunctionSpec, t0: float, j: int) -> float:
    return 2.0**j * integrate(f, t0 - 2.0**-j, t0)


def expected_xi(f: FunctionSpec, t0: float, j: int) -> float:
    """Exact mean of xi at level j via closed-form integrals."""
    w = 2.0**-j
    right = integrate(f, t0 + w, t0 + 2 * w)
    left = integrate(f, t0 - 2 * w, t0 - w)
    return 2.0 ** (j - 1) * (right - left)


def j_star_m(
    f: FunctionSpec, n: int, alpha: float, t0: float = 0.0
) -> tuple[int, float]:
    """Benchmark level: first j with E xi_j <= z_alpha sigma_j, and its sigma."""
    z = normal_upper_quantile(alpha)
    j = monotone_j_floor(t0)
    while j <= _J_SEARCH_CAP:
        s = sigma_j(j, n)
        if expected_xi(f, t0, j) <= z * s:
            return j, s
        j += 1
    raise RuntimeError("benchmark level search did not terminate")
