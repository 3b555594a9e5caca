"""Adaptive intervals for f(0) from 2n+1 equispaced noisy observations.

Design is fixed at x_i = i/(2n), i = -n..n.  Levels j average dyadic blocks
of 2^(j-1) points on each side; the usable range is 1..J with J = floor(log2 n).
Unlike the continuous-observation construction, the selectors here scan from
fine to coarse (a max rule), and the bias of the symmetric average grows
with j rather than shrinking.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtri

from .functions import FunctionSpec, ShapeClass, classify, evaluate
from .intervals import Interval, make_interval, normal_upper_quantile
from .white_noise import SeedSpec, stream

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class RegressionSample:
    """Observations y_i = f(i/(2n)) + sigma z_i with known noise level."""

    n: int
    y: np.ndarray
    sigma: float

    def __post_init__(self):
        if self.n < 4:
            raise ValueError(f"n must be >= 4, got {self.n}")
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        y = np.asarray(self.y, dtype=float)
        if y.shape != (2 * self.n + 1,):
            raise ValueError(f"y must have length {2 * self.n + 1}, got {y.shape}")
        object.__setattr__(self, "y", y)

    @property
    def J(self) -> int:
        return int(math.log2(self.n))

    def y_at(self, i: int) -> float:
        if not -self.n <= i <= self.n:
            raise IndexError(f"index {i} outside -n..n")
        return float(self.y[i + self.n])

    def x_at(self, i: int) -> float:
        return i / (2.0 * self.n)


def design_points(n: int) -> np.ndarray:
    return np.arange(-n, n + 1) / (2.0 * n)


def simulate_regression(
    f: FunctionSpec, n: int, sigma: float, seed: SeedSpec
) -> RegressionSample:
    """Draw the 2n+1 observations; sigma = 0 returns the exact values."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    fx = np.asarray(evaluate(f, design_points(n)), dtype=float)
    if sigma > 0:
        fx = fx + sigma * stream(seed).standard_normal(2 * n + 1)
    return RegressionSample(n=n, y=fx, sigma=sigma)


def reg_sigma_j(j: int, sigma: float) -> float:
    """Noise scale of the level-j averages: 2^(-j/2) sigma."""
    return 2.0 ** (-j / 2.0) * sigma


def tau_j(j: int, sigma: float) -> float:
    """Standard deviation of the extrapolated lower estimate at level j."""
    var = (5.0 + 2.0 ** (-j + 3) + 2.0 ** (-2 * j + 2)) * 2.0 ** (-j - 1) * sigma**2
    return math.sqrt(var)


def _check_level(sample: RegressionSample, j: int) -> None:
    if not 1 <= j <= sample.J:
        raise ValueError(f"level {j} outside 1..{sample.J}")


def estimators_reg_m(
    sample: RegressionSample, j: int
) -> tuple[float, float, float]:
    """(delta_R, delta_L, xi) block averages at level j."""
    _check_level(sample, j)
    n, y = sample.n, sample.y
    m = 2 ** (j - 1)
    pos = y[n + 1 : n + m + 1]
    neg = y[n - m : n]
    delta_r = 2.0 ** (-j + 1) * float(np.sum(pos))
    delta_l = 2.0 ** (-j + 1) * float(np.sum(neg))
    outer_pos = y[n + m + 1 : n + 2 * m + 1]
    outer_neg = y[n - 2 * m : n - m]
    xi = 2.0**-j * float(np.sum(outer_pos) - np.sum(outer_neg))
    return delta_r, delta_l, xi


def estimators_reg_c(sample: RegressionSample, j: int):
    """(delta_bar_j, T_j, deltaL_j, tau_j); entries are None where undefined.

    T_j requires j >= 2 and the extrapolated lower estimate requires
    level j+1 to exist.
    """
    _check_level(sample, j)
    d_j = delta_bar(sample, j)
    t = d_j - delta_bar(sample, j - 1) if j >= 2 else None
    if j + 1 <= sample.J:
        t_next = delta_bar(sample, j + 1) - d_j
        d_low = d_j - (1.0 + 2.0 ** (-(j - 1))) * t_next
    else:
        d_low = None
    return d_j, t, d_low, tau_j(j, sample.sigma)


def delta_bar(sample: RegressionSample, j: int) -> float:
    """Symmetric block average at level j."""
    _check_level(sample, j)
    n, y = sample.n, sample.y
    m = 2 ** (j - 1)
    return 2.0**-j * float(np.sum(y[n + 1 : n + m + 1]) + np.sum(y[n - m : n]))


@dataclass(frozen=True)
class RegMonotoneStats:
    n: int
    J: int
    j_values: tuple[int, ...]
    delta_r: tuple[float, ...]
    delta_l: tuple[float, ...]
    xi: tuple[float, ...]
    sigma: tuple[float, ...]
    j_hat: int | None = None


@dataclass(frozen=True)
class RegConvexStats:
    n: int
    J: int
    j_values: tuple[int, ...]
    delta: tuple[float, ...]
    t_stat: tuple[float | None, ...]  # aligned with j_values; None at j = 1
    sigma: tuple[float, ...]
    tau: tuple[float, ...]
    j_hat: int | None = None
    capped: bool = False


def collect_stats_reg_m(sample: RegressionSample) -> RegMonotoneStats:
    js = tuple(range(1, sample.J + 1))
    rows = [estimators_reg_m(sample, j) for j in js]
    return RegMonotoneStats(
        n=sample.n,
        J=sample.J,
        j_values=js,
        delta_r=tuple(r[0] for r in rows),
        delta_l=tuple(r[1] for r in rows),
        xi=tuple(r[2] for r in rows),
        sigma=tuple(reg_sigma_j(j, sample.sigma) for j in js),
    )


def collect_stats_reg_c(sample: RegressionSample) -> RegConvexStats:
    js = tuple(range(1, sample.J + 1))
    delta = tuple(delta_bar(sample, j) for j in js)
    t_stat: list[float | None] = [None]
    t_stat += [delta[i] - delta[i - 1] for i in range(1, len(js))]
    return RegConvexStats(
        n=sample.n,
        J=sample.J,
        j_values=js,
        delta=delta,
        t_stat=tuple(t_stat),
        sigma=tuple(reg_sigma_j(j, sample.sigma) for j in js),
        tau=tuple(tau_j(j, sample.sigma) for j in js),
    )


def select_j_reg_m(sample: RegressionSample, alpha: float) -> int:
    """Largest level whose xi passes, provided level 1 passes; else 1.

    The qualifying set may have gaps; the literal maximum is taken.
    """
    stats = collect_stats_reg_m(sample)
    z = normal_upper_quantile(alpha)
    passing = [
        j
        for j, xi, s in zip(stats.j_values, stats.xi, stats.sigma)
        if xi <= 1.5 * z * s
    ]
    if not passing or passing[0] != 1:
        return 1
    return max(passing)


def ci_reg_m(
    sample: RegressionSample, alpha: float
) -> tuple[Interval, RegMonotoneStats]:
    """Adaptive monotone-class interval for f(0)."""
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"alpha must lie in (0, 1/2), got {alpha}")
    stats = collect_stats_reg_m(sample)
    j_hat = select_j_reg_m(sample, alpha)
    stats = replace(stats, j_hat=j_hat)
    i = j_hat - 1
    half = normal_upper_quantile(alpha / 2.0) * SQRT2 * stats.sigma[i]
    ci = make_interval(stats.delta_l[i] - half, stats.delta_r[i] + half)
    return ci, stats


def select_j_reg_c(sample: RegressionSample, alpha: float) -> tuple[int, bool]:
    """Largest level with T_j below z_alpha sigma_j (entry test at level 2).

    Capped at J-1 so the interval's T_{j+1} term exists; the flag reports
    when the cap binds.
    """
    stats = collect_stats_reg_c(sample)
    z = normal_upper_quantile(alpha)
    passing = [
        j
        for j, t, s in zip(stats.j_values, stats.t_stat, stats.sigma)
        if t is not None and t <= z * s
    ]
    if not passing or passing[0] != 2:
        return 1, False
    j_hat = max(passing)
    if j_hat > sample.J - 1:
        return sample.J - 1, True
    return j_hat, False


def ci_reg_c(
    sample: RegressionSample, alpha: float
) -> tuple[Interval, RegConvexStats]:
    """Adaptive convex-class interval for f(0); needs J >= 3 (n >= 8)."""
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"alpha must lie in (0, 1/2), got {alpha}")
    if sample.J < 3:
        raise ValueError(f"need J >= 3 (n >= 8), got J={sample.J}")
    stats = collect_stats_reg_c(sample)
    j_hat, capped = select_j_reg_c(sample, alpha)
    stats = replace(stats, j_hat=j_hat, capped=capped)
    i = j_hat - 1
    t_next = stats.delta[i + 1] - stats.delta[i]
    z = normal_upper_quantile(alpha / 12.0)
    lower = stats.delta[i] - (1.0 + 2.0 ** (-(j_hat - 1))) * t_next - z * stats.tau[i]
    upper = stats.delta[i] + z * stats.sigma[i]
    return make_interval(lower, upper), stats


def estimate_sigma(y) -> float:
    """Robust noise-level estimate from first differences.

    Median absolute difference scaled by sqrt(2) times the normal quartile;
    insensitive to smooth drift.  Needs at least 17 observations (n >= 8).
    """
    arr = np.asarray(y, dtype=float)
    if arr.ndim != 1 or arr.size < 17:
        raise ValueError("need a 1-d sample with at least 17 observations")
    diffs = np.abs(np.diff(arr))
    return float(np.median(diffs) / (SQRT2 * ndtri(0.75)))


def expected_delta_bar_r(f: FunctionSpec, n: int, j: int) -> float:
    k = np.arange(1, 2 ** (j - 1) + 1)
    return 2.0 ** (-j + 1) * float(np.sum(evaluate(f, k / (2.0 * n))))


def expected_delta_bar_l(f: FunctionSpec, n: int, j: int) -> float:
    k = np.arange(1, 2 ** (j - 1) + 1)
    return 2.0 ** (-j + 1) * float(np.sum(evaluate(f, -k / (2.0 * n))))


def expected_xi_bar(f: FunctionSpec, n: int, j: int) -> float:
    k = np.arange(2 ** (j - 1) + 1, 2**j + 1)
    x = k / (2.0 * n)
    return 2.0**-j * float(np.sum(evaluate(f, x) - evaluate(f, -x)))


def expected_delta_bar(f: FunctionSpec, n: int, j: int) -> float:
    k = np.arange(1, 2 ** (j - 1) + 1)
    x = k / (2.0 * n)
    return 2.0**-j * float(np.sum(evaluate(f, x) + evaluate(f, -x)))


def expected_t_reg(f: FunctionSpec, n: int, j: int) -> float:
    if j < 2:
        raise ValueError("T is defined for j >= 2")
    return expected_delta_bar(f, n, j) - expected_delta_bar(f, n, j - 1)


_SLACK = 1e-10


def lemma2_check(f: FunctionSpec, n: int, j: int) -> bool:
    """Bias structure of the regression averages under convexity.

    With exact finite sums: the contrast means at least double with each
    level, and the bias of delta_bar grows along j with the stated factor.
    Defined for 2 <= j <= J-1.
    """
    if ShapeClass.CONVEX not in classify(f):
        raise ValueError(f"{f!r} is not convex on [-1/2, 1/2]")
    J = int(math.log2(n))
    if not 2 <= j <= J - 1:
        raise ValueError(f"need 2 <= j <= J-1 = {J - 1}, got {j}")
    truth = evaluate(f, 0.0)
    ok_t = 2.0 * expected_t_reg(f, n, j) <= expected_t_reg(f, n, j + 1) + _SLACK
    bias_j = expected_delta_bar(f, n, j) - truth
    bias_next = expected_delta_bar(f, n, j + 1) - truth
    factor = (2.0 ** (j - 1) + 1.0) / (2.0**j + 1.0)
    ok_lo = bias_j >= -_SLACK
    ok_hi = bias_j <= factor * bias_next + _SLACK
    return bool(ok_t and ok_lo and ok_hi)


def write_sample_csv(sample: RegressionSample, path: str) -> None:
    """Write the sample in the "i,x,y" schema, i from -n to n."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "x", "y"])
        for i in range(-sample.n, sample.n + 1):
            writer.writerow([i, repr(sample.x_at(i)), repr(sample.y_at(i))])


def read_sample_csv(path: str, sigma: float) -> RegressionSample:
    """Read an "i,x,y" file back; validates the design grid.

    Raises ValueError on any malformed content: wrong header, incomplete
    index range, or x values off the i/(2n) grid.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["i", "x", "y"]:
        raise ValueError("expected header 'i,x,y'")
    body = [r for r in rows[1:] if r]
    if not body:
        raise ValueError("no data rows")
    try:
        data = {int(r[0]): (float(r[1]), float(r[2])) for r in body}
    except (ValueError, IndexError) as exc:
        raise ValueError(f"malformed data row: {exc}") from exc
    if len(data) != len(body):
        raise ValueError("duplicate indices")
    n, hi = -min(data), max(data)
    if n != hi or set(data) != set(range(-n, n + 1)):
        raise ValueError("index column must cover -n..n exactly")
    if n < 4:
        raise ValueError(f"n must be >= 4, got {n}")
    y = np.empty(2 * n + 1)
    for i in range(-n, n + 1):
        x, yi = data[i]
        if abs(x - i / (2.0 * n)) > 1e-9:
            raise ValueError(f"x at i={i} is off the i/(2n) design grid")
        y[i + n] = yi
    return RegressionSample(n=n, y=y, sigma=sigma)
