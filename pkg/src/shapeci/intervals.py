"""Closed intervals with an explicit empty state, plus normal quantile helpers."""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import ndtri


@dataclass(frozen=True)
class Interval:
    """A closed interval [lower, upper], or the empty set.

    An empty interval keeps the inverted endpoints it was built from for
    diagnostics, reports length 0 and contains nothing.
    """

    lower: float
    upper: float
    empty: bool = False

    @property
    def length(self) -> float:
        if self.empty:
            return 0.0
        return self.upper - self.lower

    def contains(self, x: float) -> bool:
        return (not self.empty) and self.lower <= x <= self.upper


def make_interval(lower: float, upper: float) -> Interval:
    """Collapse to the empty interval when the endpoints invert."""
    return Interval(lower, upper, empty=lower > upper)


def normal_upper_quantile(alpha: float) -> float:
    """z with P(Z > z) = alpha for standard normal Z; alpha in (0, 1)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return float(ndtri(1.0 - alpha))


def normal_pdf(z: float) -> float:
    return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
