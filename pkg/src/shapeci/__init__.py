"""Adaptive confidence intervals for a function value under monotonicity or
convexity, in the white noise and nonparametric regression models, plus the
local-modulus benchmark machinery that calibrates them."""

from .convex_wn import ci_c_adaptive, ci_c_fixed, j_star_c
from .functions import (
    FunctionSpec,
    Linear,
    LinearPlusPower,
    OddPower,
    PiecewiseLinear,
    ShapeClass,
    Square,
    classify,
    evaluate,
)
from .harness import ExperimentPlan, run
from .intervals import Interval
from .modulus import (
    ModulusQuery,
    lower_bound_thm1,
    lower_bound_thm3,
    lower_bound_thm5,
    modulus_analytic,
    modulus_numeric,
)
from .monotone_wn import ci_m_adaptive, ci_m_fixed, j_star_m
from .regression import ci_reg_c, ci_reg_m, simulate_regression
from .white_noise import DyadicPath, SeedSpec, sample_path

__version__ = "0.1.0"

__all__ = [
    "FunctionSpec",
    "Linear",
    "LinearPlusPower",
    "OddPower",
    "PiecewiseLinear",
    "Square",
    "ShapeClass",
    "classify",
    "evaluate",
    "Interval",
    "DyadicPath",
    "SeedSpec",
    "sample_path",
    "ci_m_adaptive",
    "ci_m_fixed",
    "j_star_m",
    "ci_c_adaptive",
    "ci_c_fixed",
    "j_star_c",
    "ci_reg_m",
    "ci_reg_c",
    "simulate_regression",
    "ModulusQuery",
    "modulus_analytic",
    "modulus_numeric",
    "lower_bound_thm1",
    "lower_bound_thm3",
    "lower_bound_thm5",
    "ExperimentPlan",
    "run",
    "__version__",
]
