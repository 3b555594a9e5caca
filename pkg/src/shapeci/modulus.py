"""Local modulus of continuity: closed forms, a brute-force oracle, and the
minimax lower bounds built from them.

The modulus omega(eps, f, class) is the largest shift of f(t0) achievable by
a member of the constraint class within L2 distance eps of f.  Closed forms
exist for the standard families; the numeric oracle solves the inner
problem (smallest L2 distance at a prescribed shift) over a discretized
cone and inverts it by bisection.

Discretizations used by the oracle.  Monotone: piecewise-linear functions
with jumps allowed at the grid_size - 1 uniform cell boundaries.  Each cell
carries a free linear piece (a_c, b_c); b_c >= a_c inside the cell and
a_{c+1} >= b_c across boundaries make g monotone, and ||g - f||^2 is an
exact quadratic in (a, b) through the per-cell moments of f.  Jumps are
essential: the extremal monotone perturbation is discontinuous at t0, and
a continuity requirement would halve the least cost's denominator (a 2^(1/3)
error in the modulus for linear f).  Piecewise-constant cells are wrong the
other way: any step must pay the within-cell variation of f over the whole
domain, which for steep f visibly shrinks the eps budget at desk grids.
Convex: continuous piecewise-linear functions on the same grid; nonnegative
nodal second differences make g genuinely convex, the pinned node carries
g(t0) exactly, and ||g - f||^2 is the exact quadratic g'Ag - 2b'g + c with
the tridiagonal mass matrix A and hat-function moments b.  Both cones are
subsets of their classes, so the oracle converges from below.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .convex_wn import j_star_c
from .functions import (
    DOMAIN_HI,
    DOMAIN_LO,
    FunctionSpec,
    Linear,
    LinearPlusPower,
    OddPower,
    PiecewiseLinear,
    ShapeClass,
    Square,
    classify,
    evaluate,
    integrate,
    moment1,
    square_integral,
)
from .intervals import normal_pdf, normal_upper_quantile
from .monotone_wn import j_star_m

SQRT2PI = math.sqrt(2.0 * math.pi)
_R_TOL = 1e-12

A_BISECT_TOL = 1e-6


class UncoveredCaseError(ValueError):
    """No closed form is stated for this (function, class) pair."""


class WindowError(ValueError):
    """eps lies outside the closed form's validity window."""


class SolverError(RuntimeError):
    """The cone projection inside the numeric oracle did not converge."""


@dataclass(frozen=True)
class ModulusQuery:
    f: FunctionSpec
    shape: ShapeClass
    eps: float
    t0: float = 0.0

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not DOMAIN_LO <= self.t0 <= DOMAIN_HI:
            raise ValueError(f"t0 outside [-1/2, 1/2]: {self.t0}")

    def in_window(self) -> bool:
        w = analytic_window(self.f, self.shape)
        return w is None or self.eps <= w


@dataclass(frozen=True)
class AnalyticModulus:
    value: float
    exponent: float
    asymptotic: bool = False


def analytic_window(f: FunctionSpec, shape: ShapeClass) -> float | None:
    """Largest eps the closed form is stated for; None when unrestricted.

    Raises UncoveredCaseError for pairs without a closed form.
    """
    if isinstance(f, Linear):
        if shape is ShapeClass.MONOTONE:
            return None if f.k == 0 else f.k / math.sqrt(24.0)
        return None
    if isinstance(f, OddPower):
        r, k = f.r, f.k
        if shape is ShapeClass.MONOTONE:
            if abs(r - 1.0) <= _R_TOL:
                return k / math.sqrt(24.0)
            w2 = 0.5 ** (2 * r + 1) * k**2 * 2 * r**2 / ((r + 1) * (2 * r + 1))
            return math.sqrt(w2)
        if abs(r - 1.0) <= _R_TOL:
            return None
        raise UncoveredCaseError(f"no closed form for OddPower(r={r}) under {shape}")
    if isinstance(f, LinearPlusPower):
        if abs(f.r - 1.0) <= _R_TOL:
            if shape is ShapeClass.MONOTONE:
                return (f.k1 + f.k2) / math.sqrt(24.0)
            return f.k2 / math.sqrt(48.0)
        if shape is ShapeClass.MONOTONE and f.k1 > 0:
            return None  # asymptotic leading term, no finite window stated
        raise UncoveredCaseError(
            f"no closed-form constant for LinearPlusPower(r={f.r}) under {shape}"
        )
    if isinstance(f, Square):
        if shape is ShapeClass.CONVEX:
            return 15.0 ** -0.25
        raise UncoveredCaseError("Square is covered for the convex class only")
    raise UncoveredCaseError(f"no closed form for {type(f).__name__}")


def modulus_exponent(f: FunctionSpec, shape: ShapeClass) -> float:
    """The eps-exponent of the modulus, also where the constant is unknown."""
    if isinstance(f, Linear):
        if shape is ShapeClass.MONOTONE and f.k > 0:
            return 2.0 / 3.0
        return 1.0
    if isinstance(f, OddPower):
        if shape is ShapeClass.MONOTONE:
            return 2 * f.r / (2 * f.r + 1)
        if abs(f.r - 1.0) <= _R_TOL:
            return 1.0
        raise UncoveredCaseError(f"OddPower(r={f.r}) under {shape}")
    if isinstance(f, LinearPlusPower):
        if shape is ShapeClass.MONOTONE:
            return 2.0 / 3.0
        if abs(f.r - 1.0) <= _R_TOL:
            return 2.0 / 3.0
        return 2 * f.r / (2 * f.r + 1)
    if isinstance(f, Square) and shape is ShapeClass.CONVEX:
        return 4.0 / 5.0
    raise UncoveredCaseError(f"no stated exponent for {type(f).__name__} under {shape}")


def modulus_analytic(q: ModulusQuery) -> AnalyticModulus:
    """Closed-form modulus for the covered pairs at t0 = 0.

    Cases whose constant is only a leading term carry asymptotic=True.
    Raises WindowError when eps exceeds the stated validity window and
    UncoveredCaseError for pairs with no closed form.
    """
    if q.t0 != 0.0:
        raise UncoveredCaseError("closed forms are stated at t0 = 0 only")
    f, shape, eps = q.f, q.shape, q.eps
    window = analytic_window(f, shape)
    if window is not None and eps > window:
        raise WindowError(f"eps={eps} outside validity window {window:.6g}")
    if isinstance(f, Linear):
        if shape is ShapeClass.MONOTONE:
            if f.k == 0:
                return AnalyticModulus(math.sqrt(2.0) * eps, 1.0)
            return AnalyticModulus((3.0 * f.k) ** (1.0 / 3.0) * eps ** (2.0 / 3.0), 2.0 / 3.0)
        return AnalyticModulus(2.0 * eps, 1.0)
    if isinstance(f, OddPower):
        r, k = f.r, f.k
        if shape is ShapeClass.MONOTONE:
            expo = 2 * r / (2 * r + 1)
            const = ((r + 1) * (2 * r + 1) * k / (2 * r**2)) ** (r / (2 * r + 1))
            return AnalyticModulus(const * eps**expo, expo)
        return AnalyticModulus(2.0 * eps, 1.0)  # r = 1, linear in disguise
    if isinstance(f, LinearPlusPower):
        if abs(f.r - 1.0) <= _R_TOL:
            if shape is ShapeClass.MONOTONE:
                const = (3.0 * (f.k1 + f.k2)) ** (1.0 / 3.0)
            else:
                const = (3.0 * f.k2 / 4.0) ** (1.0 / 3.0)
            return AnalyticModulus(const * eps ** (2.0 / 3.0), 2.0 / 3.0)
        # r > 1, monotone, k1 > 0 (window lookup has rejected the rest)
        return AnalyticModulus(
            (3.0 * f.k1) ** (1.0 / 3.0) * eps ** (2.0 / 3.0), 2.0 / 3.0, asymptotic=True
        )
    if isinstance(f, Square):
        return AnalyticModulus(15.0**0.4 / 2.0 * eps**0.8, 0.8)
    raise UncoveredCaseError(f"no closed form for {type(f).__name__}")


def _hat_moments(f: FunctionSpec, edges: np.ndarray):
    """Per-cell integrals of f against the two local linear shape functions."""
    h = edges[1] - edges[0]
    i0 = np.array(
        [integrate(f, float(a), float(b)) for a, b in zip(edges[:-1], edges[1:])]
    )
    i1 = np.array(
        [moment1(f, float(a), float(b)) for a, b in zip(edges[:-1], edges[1:])]
    )
    against_left = (edges[1:] * i0 - i1) / h
    against_right = (i1 - edges[:-1] * i0) / h
    return against_left, against_right


def _solve_qp(problem, cp) -> float:
    # the status check below supersedes the solver's inaccuracy warning
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        problem.solve(solver=cp.CLARABEL)
    if problem.status not in ("optimal", "optimal_inaccurate"):
        raise SolverError(f"cone projection failed: status {problem.status}")
    return float(problem.value)


class _MonotoneConeSolver:
    """Exact ||g - f||^2 minimized over piecewise-linear monotone g with
    jumps allowed at the cell boundaries and the value at t0 pinned.

    The jump freedom matters: the cost-minimizing monotone perturbation is
    discontinuous at t0, so continuous trial functions understate the
    modulus by a constant factor no grid refinement can recover."""

    def __init__(self, f: FunctionSpec, edges: np.ndarray, t0: float, sign: float):
        import cvxpy as cp

        m = edges.size - 1
        h = edges[1] - edges[0]
        pa, pb = _hat_moments(f, edges)
        const = square_integral(f, DOMAIN_LO, DOMAIN_HI)

        self._cp = cp
        a = cp.Variable(m)
        b = cp.Variable(m)
        self.v = cp.Parameter()
        # int g^2 over a cell is h/3 (a^2 + ab + b^2); split into squares
        objective = (
            (h / 4.0) * cp.sum_squares(a + b)
            + (h / 12.0) * cp.sum_squares(a - b)
            - 2.0 * (pa @ a + pb @ b)
            + const
        )
        constraints = [b >= a, a[1:] >= b[:-1]]
        k = (t0 - DOMAIN_LO) / h
        i = int(round(k))
        if abs(k - i) < 1e-9 * max(1.0, abs(k)):
            # t0 on a cell boundary: pin the favorable one-sided limit
            if sign > 0:
                pinned = a[i] if i < m else b[m - 1]
            else:
                pinned = b[i - 1] if i > 0 else a[0]
        else:
            c = int(k)
            w = k - c
            pinned = (1.0 - w) * a[c] + w * b[c]
        constraints.append(pinned == self.v)
        self.problem = cp.Problem(cp.Minimize(objective), constraints)

    def cost(self, v: float) -> float:
        self.v.value = v
        return _solve_qp(self.problem, self._cp)


class _ConvexConeSolver:
    """Exact ||g - f||^2 minimized over continuous piecewise-linear convex g
    with one pinned node, as a conic QP over the nodal values."""

    def __init__(self, f: FunctionSpec, nodes: np.ndarray, pin: int):
        import cvxpy as cp
        import scipy.sparse as sp

        m = nodes.size
        h = nodes[1] - nodes[0]
        diag = np.full(m, 2.0 * h / 3.0)
        diag[0] = diag[-1] = h / 3.0
        mass = sp.diags(
            [np.full(m - 1, h / 6.0), diag, np.full(m - 1, h / 6.0)],
            [-1, 0, 1],
            format="csc",
        )
        i0 = np.array([integrate(f, float(a), float(b)) for a, b in zip(nodes[:-1], nodes[1:])])
        i1 = np.array([moment1(f, float(a), float(b)) for a, b in zip(nodes[:-1], nodes[1:])])
        b = np.zeros(m)
        b[:-1] += (nodes[1:] * i0 - i1) / h
        b[1:] += (i1 - nodes[:-1] * i0) / h
        const = square_integral(f, DOMAIN_LO, DOMAIN_HI)

        self._cp = cp
        self.g = cp.Variable(m)
        self.v = cp.Parameter()
        d2 = sp.diags(
            [np.ones(m - 2), -2.0 * np.ones(m - 2), np.ones(m - 2)],
            [0, 1, 2],
            shape=(m - 2, m),
            format="csr",
        )
        objective = (
            cp.quad_form(self.g, mass, assume_PSD=True) - 2.0 * b @ self.g + const
        )
        self.problem = cp.Problem(
            cp.Minimize(objective),
            [d2 @ self.g >= 0, self.g[pin] == self.v],
        )

    def cost(self, v: float) -> float:
        self.v.value = v
        return _solve_qp(self.problem, self._cp)


def _largest_feasible_shift(cost, eps: float, budget: float) -> float | None:
    """Invert a convex cost-of-shift curve: the largest a with cost(a) <= budget.

    None when not even a = 0 fits the budget.
    """
    if cost(0.0) > budget:
        return None
    lo, hi = 0.0, max(eps, 1e-3)
    while cost(hi) <= budget:
        lo = hi
        hi *= 2.0
        if hi > 1e6:
            raise SolverError("shift bracket grew unboundedly")
    while hi - lo > A_BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if cost(mid) <= budget:
            lo = mid
        else:
            hi = mid
    return lo


def _monotone_numeric(q: ModulusQuery, grid_size: int) -> float:
    edges = np.linspace(DOMAIN_LO, DOMAIN_HI, grid_size)
    truth = evaluate(q.f, q.t0)
    budget = q.eps**2
    best = 0.0
    for sign in (1.0, -1.0):
        solver = _MonotoneConeSolver(q.f, edges, q.t0, sign)
        a = _largest_feasible_shift(
            lambda a: solver.cost(truth + sign * a), q.eps, budget
        )
        if a is not None:
            best = max(best, a)
    return best


def _convex_numeric(q: ModulusQuery, grid_size: int) -> float:
    nodes = np.linspace(DOMAIN_LO, DOMAIN_HI, grid_size)
    h = nodes[1] - nodes[0]
    pin = int(round((q.t0 - DOMAIN_LO) / h))
    truth = evaluate(q.f, q.t0)
    solver = _ConvexConeSolver(q.f, nodes, pin)
    budget = q.eps**2
    best = 0.0
    for sign in (1.0, -1.0):
        a = _largest_feasible_shift(
            lambda a: solver.cost(truth + sign * a), q.eps, budget
        )
        if a is not None:
            best = max(best, a)
    return best


def modulus_numeric(q: ModulusQuery, grid_size: int = 1025) -> float:
    """Brute-force modulus on a uniform grid of grid_size nodes.

    Both shift directions are tried and the larger feasible shift wins.
    The bisection on the shift runs to 1e-6 absolute.
    """
    if grid_size < 257 or grid_size % 2 == 0:
        raise ValueError("grid_size must be odd and >= 257")
    if q.shape is ShapeClass.MONOTONE:
        return _monotone_numeric(q, grid_size)
    if q.shape is ShapeClass.CONVEX:
        return _convex_numeric(q, grid_size)
    raise TypeError(f"unknown shape {q.shape!r}")


@dataclass(frozen=True)
class Thm1Bound:
    omega: float
    simple: float
    full: float


def _omega_for_bounds(f: FunctionSpec, shape: ShapeClass, eps: float) -> float:
    """Exact closed form when available, else the numeric oracle."""
    q = ModulusQuery(f, shape, eps)
    try:
        a = modulus_analytic(q)
        if not a.asymptotic:
            return a.value
    except (UncoveredCaseError, WindowError):
        pass
    return modulus_numeric(q)


def lower_bound_thm1(
    f: FunctionSpec, shape: ShapeClass, n: int, alpha: float
) -> Thm1Bound:
    """Minimax expected-length lower bound from the modulus at eps = z_alpha/sqrt(n).

    Returns both the simple variant (1 - 1/(sqrt(2 pi) z)) omega and the full
    variant, which adds (phi(z)/z - alpha) omega.
    """
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"alpha must lie in (0, 1/2), got {alpha}")
    z = normal_upper_quantile(alpha)
    omega = _omega_for_bounds(f, shape, z / math.sqrt(n))
    simple = (1.0 - 1.0 / (SQRT2PI * z)) * omega
    full = simple + (normal_pdf(z) / z - alpha) * omega
    return Thm1Bound(omega=omega, simple=simple, full=full)


def lower_bound_thm3(f: FunctionSpec, n: int, alpha: float) -> float:
    """Lower bound on the best expected length over the monotone class at f."""
    if not 0.0 < alpha <= 0.2:
        raise ValueError(f"alpha must lie in (0, 0.2], got {alpha}")
    if ShapeClass.MONOTONE not in classify(f):
        raise ValueError(f"{f!r} is not monotone nondecreasing")
    z = normal_upper_quantile(alpha)
    _, sigma_star = j_star_m(f, n, alpha)
    return (1.0 - 1.0 / (SQRT2PI * z)) * z * sigma_star / math.sqrt(2.0)


def lower_bound_thm5(f: FunctionSpec, n: int, alpha: float) -> float:
    """Lower bound on the best expected length over the convex class at f."""
    if not 0.0 < alpha <= 0.2:
        raise ValueError(f"alpha must lie in (0, 0.2], got {alpha}")
    if ShapeClass.CONVEX not in classify(f):
        raise ValueError(f"{f!r} is not convex")
    z = normal_upper_quantile(alpha)
    _, sigma_star = j_star_c(f, n, alpha)
    return (1.0 - 1.0 / (SQRT2PI * z)) * z * sigma_star * math.sqrt(2.0) / 3.0


def monotone_length_cap(alpha: float, sigma_jstar: float) -> float:
    """Guaranteed expected-length ceiling of the adaptive monotone interval."""
    z_a = normal_upper_quantile(alpha)
    z_half = normal_upper_quantile(alpha / 2.0)
    return 1.21 * (3.0 * z_a + 2.0 * math.sqrt(2.0) * z_half) * sigma_jstar


def convex_length_cap(alpha: float, sigma_jstar: float) -> float:
    """Guaranteed expected-length ceiling of the adaptive convex interval."""
    z_a = normal_upper_quantile(alpha)
    z_split = normal_upper_quantile(alpha / 12.0)
    return 1.25 * (z_a + (math.sqrt(5.0) + math.sqrt(2.0)) * z_split) * sigma_jstar


REPORT_COLUMNS = (
    "function",
    "class",
    "n",
    "alpha",
    "j_star",
    "sigma_jstar",
    "omega",
    "lb_thm1_simple",
    "lb_thm1_full",
    "lb_thm3or5",
    "mc_length",
    "ratio",
)


@dataclass(frozen=True)
class BenchmarkRow:
    function: str
    shape: ShapeClass
    n: int
    alpha: float
    j_star: int
    sigma_jstar: float
    omega: float
    lb_thm1_simple: float
    lb_thm1_full: float
    lb_thm3or5: float
    mc_length: float
    ratio: float

    def as_csv_fields(self) -> list[str]:
        return [
            self.function,
            self.shape.value,
            str(self.n),
            repr(self.alpha),
            str(self.j_star),
            repr(self.sigma_jstar),
            repr(self.omega),
            repr(self.lb_thm1_simple),
            repr(self.lb_thm1_full),
            repr(self.lb_thm3or5),
            repr(self.mc_length),
            repr(self.ratio),
        ]


@dataclass(frozen=True)
class BenchmarkReport:
    rows: tuple[BenchmarkRow, ...]

    def to_csv(self, provenance: str | None = None) -> str:
        lines = []
        if provenance:
            lines.append(f"# {provenance}")
        lines.append(",".join(REPORT_COLUMNS))
        for row in self.rows:
            lines.append(",".join(row.as_csv_fields()))
        return "\n".join(lines) + "\n"


def benchmark_row(
    f: FunctionSpec,
    shape: ShapeClass,
    n: int,
    alpha: float,
    mc_length: float,
    label: str,
) -> BenchmarkRow:
    """Assemble one report row; ratio compares the MC length to the class bound."""
    if shape is ShapeClass.MONOTONE:
        j_star, sigma_star = j_star_m(f, n, alpha)
        lb = lower_bound_thm3(f, n, alpha)
    else:
        j_star, sigma_star = j_star_c(f, n, alpha)
        lb = lower_bound_thm5(f, n, alpha)
    t1 = lower_bound_thm1(f, shape, n, alpha)
    return BenchmarkRow(
        function=label,
        shape=shape,
        n=n,
        alpha=alpha,
        j_star=j_star,
        sigma_jstar=sigma_star,
        omega=t1.omega,
        lb_thm1_simple=t1.simple,
        lb_thm1_full=t1.full,
        lb_thm3or5=lb,
        mc_length=mc_length,
        ratio=mc_length / lb,
    )
