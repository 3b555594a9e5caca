"""Exact sampling of the drifted white-noise observation process.

The process is observed only through increments over a finite set of
abscissae, so a path is just those increments, each exactly Gaussian:
drift = integral of the target over the respective interval, variance =
interval width over n.  No time discretization is involved anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from .functions import DOMAIN_HI, DOMAIN_LO, FunctionSpec, ShapeClass, integrate

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SeedSpec:
    """(base seed, replication index) -> an independent Philox stream."""

    base: int
    replication: int = 0


def stream(seed: SeedSpec) -> Generator:
    key = np.array([seed.base & _MASK64, seed.replication & _MASK64], dtype=np.uint64)
    return Generator(Philox(key=key))


@dataclass(frozen=True, eq=False)
class DyadicPath:
    """Values of Y at a finite sorted abscissa set, anchored at Y(0) = 0."""

    n: int
    abscissae: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        index = {float(t): i for i, t in enumerate(self.abscissae)}
        object.__setattr__(self, "_index", index)

    def value_at(self, t: float) -> float:
        try:
            return float(self.values[self._index[float(t)]])
        except KeyError:
            raise KeyError(f"abscissa {t} was not sampled") from None


def _check_abscissae(abscissae) -> np.ndarray:
    a = np.asarray(abscissae, dtype=float)
    if a.ndim != 1 or a.size < 2:
        raise ValueError("need at least two abscissae")
    if np.any(np.diff(a) <= 0):
        raise ValueError("abscissae must be sorted and distinct")
    if a[0] < DOMAIN_LO or a[-1] > DOMAIN_HI:
        raise ValueError("abscissae must lie in [-1/2, 1/2]")
    if not np.any(a == 0.0):
        raise ValueError("abscissae must contain 0")
    return a


def drift_increments(f: FunctionSpec, abscissae: np.ndarray) -> np.ndarray:
    """Exact mean of each consecutive increment of Y."""
    return np.array(
        [integrate(f, float(s), float(t)) for s, t in zip(abscissae[:-1], abscissae[1:])]
    )


def noise_scales(abscissae: np.ndarray, n: int) -> np.ndarray:
    return np.sqrt(np.diff(abscissae) / n)


def assemble_path(n: int, abscissae: np.ndarray, increments: np.ndarray) -> DyadicPath:
    """Cumulate increments and re-anchor so that Y(0) = 0."""
    values = np.concatenate([[0.0], np.cumsum(increments)])
    i_zero = int(np.flatnonzero(abscissae == 0.0)[0])
    values = values - values[i_zero]
    return DyadicPath(n=n, abscissae=abscissae, values=values)


def sample_path(f: FunctionSpec, n: int, abscissae, seed: SeedSpec) -> DyadicPath:
    """Draw Y at the abscissae, exact in law.

    Consecutive increments are independent Gaussians with mean equal to the
    exact drift integral and variance (t - s)/n.

    Parameters
    ----------
    f : FunctionSpec
        Drift of the observation process.
    n : int
        Calibration of the noise level; n >= 4.
    abscissae : array_like
        Sorted points in [-1/2, 1/2] containing 0.
    seed : SeedSpec
        Identifies the replication stream; identical seeds give identical
        paths bit for bit.
    """
    if n < 4:
        raise ValueError(f"n must be >= 4, got {n}")
    a = _check_abscissae(abscissae)
    z = stream(seed).standard_normal(a.size - 1)
    incr = drift_increments(f, a) + noise_scales(a, n) * z
    return assemble_path(n, a, incr)


def drift_path(f: FunctionSpec, n: int, abscissae) -> DyadicPath:
    """The noiseless path (increments equal to their means); test utility."""
    a = _check_abscissae(abscissae)
    return assemble_path(n, a, drift_increments(f, a))


def monotone_j_floor(t0: float) -> int:
    """Smallest admissible resolution level for the monotone procedure at t0.

    Level j reads t0 +/- 2^(1-j), which must stay inside [-1/2, 1/2]; the
    base construction additionally starts at j = 2.
    """
    gap = 0.5 - abs(t0)
    if gap <= 0:
        raise ValueError("t0 at the boundary: intervals there are unbounded")
    j = max(2, math.ceil(1.0 - math.log2(gap) - 1e-12))
    while abs(t0) + 2.0 ** (1 - j) > 0.5:
        j += 1
    return j


def convex_j_floor(t0: float) -> int:
    """Smallest admissible level for the convex procedure (reads t0 +/- 2^-j)."""
    gap = 0.5 - abs(t0)
    if gap <= 0:
        raise ValueError("t0 at the boundary: intervals there are unbounded")
    j = max(1, math.ceil(-math.log2(gap) - 1e-12))
    while abs(t0) + 2.0 ** (-j) > 0.5:
        j += 1
    return j


def required_abscissae(shape: ShapeClass, t0: float, j_max: int) -> np.ndarray:
    """Every point the estimators of the given procedure read, plus 0 and t0."""
    points = {0.0, float(t0)}
    if shape is ShapeClass.MONOTONE:
        j_min = monotone_j_floor(t0)
        if j_max < j_min:
            raise ValueError(f"j_max {j_max} below admissible floor {j_min}")
        for j in range(j_min, j_max + 1):
            for off in (2.0**-j, 2.0 ** (1 - j)):
                points.add(t0 + off)
                points.add(t0 - off)
    elif shape is ShapeClass.CONVEX:
        j_min = convex_j_floor(t0)
        if j_max < j_min:
            raise ValueError(f"j_max {j_max} below admissible floor {j_min}")
        for j in range(j_min, j_max + 2):
            points.add(t0 + 2.0**-j)
            points.add(t0 - 2.0**-j)
    else:
        raise TypeError(f"unknown procedure shape {shape!r}")
    return np.array(sorted(points))
