"""Target function families on the interval [-1/2, 1/2].

Every family is a small frozen dataclass; a FunctionSpec is any of them.
All integrals used elsewhere (plain, first moment, squared) have closed
forms, so expectations of the dyadic statistics are exact rather than
quadrature-based.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

DOMAIN_LO = -0.5
DOMAIN_HI = 0.5

_ODD_TOL = 1e-9


class ShapeClass(enum.Enum):
    """Constraint classes a target function may belong to."""

    MONOTONE = "monotone"
    CONVEX = "convex"


def _is_odd_integer(x: float) -> bool:
    n = round(x)
    return abs(x - n) <= _ODD_TOL and n >= 1 and n % 2 == 1


def _valid_odd_power(r: float) -> bool:
    # r must be an odd integer or the reciprocal of one
    if r <= 0:
        return False
    return _is_odd_integer(r) or _is_odd_integer(1.0 / r)


@dataclass(frozen=True)
class Linear:
    """f(t) = k t with k >= 0."""

    k: float

    def __post_init__(self):
        if self.k < 0:
            raise ValueError(f"Linear requires k >= 0, got {self.k}")


@dataclass(frozen=True)
class LinearPlusPower:
    """f(t) = k1 t + k2 t^r for t > 0, and k1 t otherwise.

    Requires k1 >= 0, k2 > 0 and r >= 1.  The power term is one-sided,
    so f(0) = 0 and the function kinks at the origin when r = 1.
    """

    k1: float
    k2: float
    r: float

    def __post_init__(self):
        if self.k1 < 0 or self.k2 <= 0 or self.r < 1:
            raise ValueError(
                f"LinearPlusPower requires k1 >= 0, k2 > 0, r >= 1, "
                f"got ({self.k1}, {self.k2}, {self.r})"
            )


@dataclass(frozen=True)
class OddPower:
    """f(t) = k sign(t) |t|^r with k > 0 and r an odd integer or its reciprocal."""

    k: float
    r: float

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError(f"OddPower requires k > 0, got {self.k}")
        if not _valid_odd_power(self.r):
            raise ValueError(
                f"OddPower requires r = 2l+1 or 1/(2l+1) for integer l >= 0, got {self.r}"
            )


@dataclass(frozen=True)
class Square:
    """f(t) = t^2."""


@dataclass(frozen=True)
class PiecewiseLinear:
    """Linear interpolation through (knots, values), covering [-1/2, 1/2]."""

    knots: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        knots = tuple(float(x) for x in self.knots)
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)
        if len(knots) != len(values) or len(knots) < 2:
            raise ValueError("knots and values must have equal length >= 2")
        if any(b <= a for a, b in zip(knots, knots[1:])):
            raise ValueError("knots must be strictly increasing")
        if abs(knots[0] - DOMAIN_LO) > 1e-12 or abs(knots[-1] - DOMAIN_HI) > 1e-12:
            raise ValueError("knots must cover [-1/2, 1/2]")

    def slopes(self) -> np.ndarray:
        k = np.asarray(self.knots)
        v = np.asarray(self.values)
        return np.diff(v) / np.diff(k)


FunctionSpec = Union[Linear, LinearPlusPower, OddPower, Square, PiecewiseLinear]

_VARIANTS = {
    "Linear": Linear,
    "LinearPlusPower": LinearPlusPower,
    "OddPower": OddPower,
    "Square": Square,
    "PiecewiseLinear": PiecewiseLinear,
}


def _check_domain(t) -> np.ndarray:
    arr = np.asarray(t, dtype=float)
    if np.any(arr < DOMAIN_LO - 1e-12) or np.any(arr > DOMAIN_HI + 1e-12):
        raise ValueError(f"argument outside [-1/2, 1/2]: {t}")
    return arr


def evaluate(f: FunctionSpec, t):
    """Evaluate f at t (scalar or array), t restricted to [-1/2, 1/2]."""
    arr = _check_domain(t)
    if isinstance(f, Linear):
        out = f.k * arr
    elif isinstance(f, LinearPlusPower):
        out = f.k1 * arr + f.k2 * np.where(arr > 0, np.abs(arr) ** f.r, 0.0)
    elif isinstance(f, OddPower):
        out = f.k * np.sign(arr) * np.abs(arr) ** f.r
    elif isinstance(f, Square):
        out = arr * arr
    elif isinstance(f, PiecewiseLinear):
        out = np.interp(arr, f.knots, f.values)
    else:
        raise TypeError(f"not a FunctionSpec: {f!r}")
    if np.isscalar(t) or np.ndim(t) == 0:
        return float(out)
    return out


def _pl_segments(f: PiecewiseLinear, a: float, b: float):
    """Yield (lo, hi) pieces of [a, b] cut at interior knots."""
    cuts = [a] + [x for x in f.knots if a < x < b] + [b]
    for lo, hi in zip(cuts, cuts[1:]):
        yield lo, hi


def _simpson_exact(g, lo: float, hi: float) -> float:
    # exact for quadratics, which covers t*f and f^2 on linear segments
    mid = 0.5 * (lo + hi)
    return (hi - lo) / 6.0 * (g(lo) + 4.0 * g(mid) + g(hi))


def integrate(f: FunctionSpec, a: float, b: float) -> float:
    """Closed-form integral of f over [a, b] within [-1/2, 1/2]."""
    _check_domain([a, b])
    if b < a:
        raise ValueError("integrate requires a <= b")
    if isinstance(f, Linear):
        return f.k * (b * b - a * a) / 2.0
    if isinstance(f, Square):
        return (b**3 - a**3) / 3.0
    if isinstance(f, OddPower):
        # even antiderivative of the odd integrand
        F = lambda t: f.k * abs(t) ** (f.r + 1.0) / (f.r + 1.0)
        return F(b) - F(a)
    if isinstance(f, LinearPlusPower):
        base = f.k1 * (b * b - a * a) / 2.0
        lo, hi = max(a, 0.0), max(b, 0.0)
        power = f.k2 * (hi ** (f.r + 1.0) - lo ** (f.r + 1.0)) / (f.r + 1.0)
        return base + power
    if isinstance(f, PiecewiseLinear):
        total = 0.0
        for lo, hi in _pl_segments(f, a, b):
            total += 0.5 * (evaluate(f, lo) + evaluate(f, hi)) * (hi - lo)
        return total
    raise TypeError(f"not a FunctionSpec: {f!r}")


def moment1(f: FunctionSpec, a: float, b: float) -> float:
    """Closed-form integral of t*f(t) over [a, b]."""
    _check_domain([a, b])
    if b < a:
        raise ValueError("moment1 requires a <= b")
    if isinstance(f, Linear):
        return f.k * (b**3 - a**3) / 3.0
    if isinstance(f, Square):
        return (b**4 - a**4) / 4.0
    if isinstance(f, OddPower):
        # t*f is even; odd antiderivative
        G = lambda t: f.k * math.copysign(abs(t) ** (f.r + 2.0), t) / (f.r + 2.0)
        return G(b) - G(a)
    if isinstance(f, LinearPlusPower):
        base = f.k1 * (b**3 - a**3) / 3.0
        lo, hi = max(a, 0.0), max(b, 0.0)
        power = f.k2 * (hi ** (f.r + 2.0) - lo ** (f.r + 2.0)) / (f.r + 2.0)
        return base + power
    if isinstance(f, PiecewiseLinear):
        g = lambda t: t * evaluate(f, t)
        return sum(_simpson_exact(g, lo, hi) for lo, hi in _pl_segments(f, a, b))
    raise TypeError(f"not a FunctionSpec: {f!r}")


def square_integral(f: FunctionSpec, a: float, b: float) -> float:
    """Closed-form integral of f(t)^2 over [a, b]."""
    _check_domain([a, b])
    if b < a:
        raise ValueError("square_integral requires a <= b")
    if isinstance(f, Linear):
        return f.k**2 * (b**3 - a**3) / 3.0
    if isinstance(f, Square):
        return (b**5 - a**5) / 5.0
    if isinstance(f, OddPower):
        # f^2 is even; odd antiderivative
        H = lambda t: f.k**2 * math.copysign(abs(t) ** (2 * f.r + 1.0), t) / (2 * f.r + 1.0)
        return H(b) - H(a)
    if isinstance(f, LinearPlusPower):
        k1, k2, r = f.k1, f.k2, f.r
        total = k1**2 * (max(b, 0.0) ** 3 - max(a, 0.0) ** 3) / 3.0
        neg_lo, neg_hi = min(a, 0.0), min(b, 0.0)
        total += k1**2 * (neg_hi**3 - neg_lo**3) / 3.0
        lo, hi = max(a, 0.0), max(b, 0.0)
        total += 2.0 * k1 * k2 * (hi ** (r + 2.0) - lo ** (r + 2.0)) / (r + 2.0)
        total += k2**2 * (hi ** (2 * r + 1.0) - lo ** (2 * r + 1.0)) / (2 * r + 1.0)
        return total
    if isinstance(f, PiecewiseLinear):
        g = lambda t: evaluate(f, t) ** 2
        return sum(_simpson_exact(g, lo, hi) for lo, hi in _pl_segments(f, a, b))
    raise TypeError(f"not a FunctionSpec: {f!r}")


def classify(f: FunctionSpec) -> frozenset[ShapeClass]:
    """Which of {monotone nondecreasing, convex} f satisfies on [-1/2, 1/2]."""
    if isinstance(f, Linear):
        return frozenset({ShapeClass.MONOTONE, ShapeClass.CONVEX})
    if isinstance(f, LinearPlusPower):
        # slope k1 + k2 r t^(r-1) >= k1 >= 0 on t > 0 and nondecreasing for r >= 1
        return frozenset({ShapeClass.MONOTONE, ShapeClass.CONVEX})
    if isinstance(f, OddPower):
        tags = {ShapeClass.MONOTONE}
        if abs(f.r - 1.0) <= _ODD_TOL:
            tags.add(ShapeClass.CONVEX)
        return frozenset(tags)
    if isinstance(f, Square):
        return frozenset({ShapeClass.CONVEX})
    if isinstance(f, PiecewiseLinear):
        slopes = f.slopes()
        tags = set()
        if np.all(slopes >= 0):
            tags.add(ShapeClass.MONOTONE)
        if np.all(np.diff(slopes) >= 0):
            tags.add(ShapeClass.CONVEX)
        return frozenset(tags)
    raise TypeError(f"not a FunctionSpec: {f!r}")


def describe(f: FunctionSpec) -> str:
    """Short human-readable label, used in report tables (CSV-safe)."""
    if isinstance(f, Linear):
        return f"Linear(k={f.k:g})"
    if isinstance(f, LinearPlusPower):
        return f"LinearPlusPower(k1={f.k1:g};k2={f.k2:g};r={f.r:g})"
    if isinstance(f, OddPower):
        return f"OddPower(k={f.k:g};r={f.r:g})"
    if isinstance(f, Square):
        return "Square"
    if isinstance(f, PiecewiseLinear):
        return f"PiecewiseLinear({len(f.knots)} knots)"
    raise TypeError(f"not a FunctionSpec: {f!r}")


def to_dict(f: FunctionSpec) -> dict:
    """Serialize to the {"variant": ..., "params": {...}} form used by configs."""
    if isinstance(f, Linear):
        params = {"k": f.k}
    elif isinstance(f, LinearPlusPower):
        params = {"k1": f.k1, "k2": f.k2, "r": f.r}
    elif isinstance(f, OddPower):
        params = {"k": f.k, "r": f.r}
    elif isinstance(f, Square):
        params = {}
    elif isinstance(f, PiecewiseLinear):
        params = {"knots": list(f.knots), "values": list(f.values)}
    else:
        raise TypeError(f"not a FunctionSpec: {f!r}")
    return {"variant": type(f).__name__, "params": params}


def from_dict(obj: dict) -> FunctionSpec:
    """Inverse of to_dict; raises ValueError on malformed input."""
    try:
        variant = obj["variant"]
        params = dict(obj.get("params", {}))
    except (TypeError, KeyError) as exc:
        raise ValueError(f"malformed function spec: {obj!r}") from exc
    if variant not in _VARIANTS:
        raise ValueError(f"unknown function variant {variant!r}")
    cls = _VARIANTS[variant]
    try:
        if cls is PiecewiseLinear:
            return PiecewiseLinear(tuple(params["knots"]), tuple(params["values"]))
        return cls(**params)
    except (TypeError, KeyError) as exc:
        raise ValueError(f"bad parameters for {variant}: {params!r}") from exc


def to_json(f: FunctionSpec) -> str:
    return json.dumps(to_dict(f), sort_keys=True)


def from_json(text: str) -> FunctionSpec:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid JSON for function spec: {text!r}") from exc
    return from_dict(obj)
