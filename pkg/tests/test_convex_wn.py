import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from families import random_convex_pl
from shapeci.convex_wn import (
    ci_c_adaptive,
    ci_c_fixed,
    collect_stats_c,
    expected_delta,
    expected_t,
    j_star_c,
    lemma1_check,
    select_j_c,
)
from shapeci.functions import Linear, LinearPlusPower, OddPower, ShapeClass, Square, evaluate
from shapeci.intervals import normal_upper_quantile
from shapeci.monotone_wn import sigma_j
from shapeci.white_noise import SeedSpec, drift_path, required_abscissae, sample_path


def _noiseless_stats(f, n, j_max, t0=0.0):
    absc = required_abscissae(ShapeClass.CONVEX, t0, j_max)
    return collect_stats_c(drift_path(f, n, absc), t0, j_max)


def test_noiseless_estimators_square():
    f = Square()
    stats = _noiseless_stats(f, 1024, 7)
    for i, j in enumerate(stats.j_values):
        # symmetric local mean of t^2 over [-2^-j, 2^-j] is 2^-2j / 3
        assert stats.delta[i] == pytest.approx(2.0 ** (-2 * j) / 3.0, abs=1e-14)
        assert stats.delta[i] == pytest.approx(expected_delta(f, 0.0, j), abs=1e-14)
        assert stats.t_stat[i] == pytest.approx(expected_t(f, 0.0, j), abs=1e-14)
    # the extrapolated estimate and the t statistic tie out by definition
    for i, j in enumerate(stats.j_values):
        assert stats.delta_tilde[i] == pytest.approx(
            2.0 * stats.delta[i + 1] - stats.delta[i], abs=1e-15
        )
        assert stats.t_stat[i] == pytest.approx(stats.delta[i] - stats.delta[i + 1], abs=1e-15)


def test_ci_c_fixed_endpoints():
    stats = _noiseless_stats(Square(), 1024, 6)
    j = 2
    ci = ci_c_fixed(stats, j, 0.05)
    z = normal_upper_quantile(0.025)
    i = stats.j_values.index(j)
    assert ci.lower == pytest.approx(
        stats.delta_tilde[i] - z * math.sqrt(5.0) * sigma_j(j, 1024), abs=1e-15
    )
    assert ci.upper == pytest.approx(
        stats.delta[i + 1] + z * sigma_j(j + 1, 1024), abs=1e-15
    )


def test_select_j_square_crossing():
    """Noise-free selection lands at level 2 for the parabola at n=1024."""
    stats = _noiseless_stats(Square(), 1024, 9)
    j_hat, truncated = select_j_c(stats, 0.05)
    assert not truncated
    z = normal_upper_quantile(0.05)
    expected = None
    for j in range(1, 10):
        if expected_t(Square(), 0.0, j) <= z * sigma_j(j, 1024):
            expected = j
            break
    assert expected == 2
    assert j_hat == 2


def test_select_j_truncates_on_steep_curvature():
    stats = _noiseless_stats(Linear(k=0.0), 64, 3)
    j_hat, truncated = select_j_c(stats, 0.05)
    # flat line passes immediately at the floor
    assert (j_hat, truncated) == (1, False)
    steep = _noiseless_stats(LinearPlusPower(k1=0.0, k2=400.0, r=1.0), 64, 3)
    j_hat2, truncated2 = select_j_c(steep, 0.05)
    assert truncated2
    assert j_hat2 == 3


def test_adaptive_uses_alpha_over_six():
    """The adaptive interval pays a fixed alpha/6 split, not alpha itself."""
    absc = required_abscissae(ShapeClass.CONVEX, 0.0, 10)
    path = sample_path(Square(), 1024, absc, SeedSpec(77))
    ci, stats = ci_c_adaptive(path, 0.0, 0.05)
    refit = ci_c_fixed(collect_stats_c(path, 0.0, 10), stats.j_hat, 0.05 / 6.0)
    assert ci.lower == refit.lower and ci.upper == refit.upper
    wrong = ci_c_fixed(collect_stats_c(path, 0.0, 10), stats.j_hat, 0.05)
    assert ci.length > wrong.length


def test_j_star_square():
    j, sigma = j_star_c(Square(), 1024, 0.05)
    assert j == 2
    assert sigma == pytest.approx(sigma_j(2, 1024), abs=1e-15)
    j_flat, _ = j_star_c(Linear(k=3.0), 1024, 0.05)
    assert j_flat == 1  # any line has zero curvature gap


def test_lemma1_on_paper_families():
    for f in (Linear(k=0.0), Linear(k=1.0), Linear(k=5.0),
              LinearPlusPower(k1=1.0, k2=2.0, r=1.0),
              LinearPlusPower(k1=1.0, k2=2.0, r=2.0), Square()):
        for j in range(1, 7):
            assert lemma1_check(f, j)


def test_lemma1_rejects_nonconvex():
    with pytest.raises(ValueError):
        lemma1_check(OddPower(k=1.0, r=3.0), 2)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_lemma1_random_convex(seed):
    rng = np.random.default_rng(seed)
    f = random_convex_pl(rng)
    for j in range(1, 7):
        assert lemma1_check(f, j)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_noiseless_interval_always_covers(seed):
    """Bias signs from the curvature inequalities make the noise-free
    interval bracket the truth at every level."""
    rng = np.random.default_rng(seed)
    f = random_convex_pl(rng)
    t0 = float(rng.uniform(-0.2, 0.2))
    j_max = 7
    stats = _noiseless_stats(f, 256, j_max, t0=t0)
    truth = evaluate(f, t0)
    for j in stats.j_values:
        ci = ci_c_fixed(stats, j, 0.05)
        assert ci.contains(truth)
