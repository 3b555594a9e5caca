"""Seeded random function generators used by property and invariant tests."""

import numpy as np

from shapeci.functions import PiecewiseLinear


def _random_knots(rng, n_interior):
    interior = np.sort(rng.uniform(-0.45, 0.45, size=n_interior))
    # enforce a minimum gap so the strictly-increasing knot check never trips
    keep = [interior[0]]
    for t in interior[1:]:
        if t - keep[-1] > 0.02:
            keep.append(t)
    return np.concatenate(([-0.5], keep, [0.5]))


def random_convex_pl(rng: np.random.Generator, n_interior: int = 6) -> PiecewiseLinear:
    knots = _random_knots(rng, n_interior)
    slopes = np.sort(rng.normal(0.0, 3.0, size=knots.size - 1))
    v0 = rng.normal(0.0, 0.5)
    values = v0 + np.concatenate(([0.0], np.cumsum(slopes * np.diff(knots))))
    return PiecewiseLinear(tuple(knots.tolist()), tuple(values.tolist()))


def random_monotone_pl(rng: np.random.Generator, n_interior: int = 6) -> PiecewiseLinear:
    knots = _random_knots(rng, n_interior)
    slopes = np.abs(rng.normal(0.0, 3.0, size=knots.size - 1))
    v0 = rng.normal(0.0, 0.5)
    values = v0 + np.concatenate(([0.0], np.cumsum(slopes * np.diff(knots))))
    return PiecewiseLinear(tuple(knots.tolist()), tuple(values.tolist()))
