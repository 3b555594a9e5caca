"""Canonical function families exercised by the benchmark suites.

Labels are stable identifiers used in report CSVs.
"""

from __future__ import annotations

from .functions import FunctionSpec, Linear, LinearPlusPower, OddPower, ShapeClass, Square

MONOTONE_FAMILY: tuple[tuple[str, FunctionSpec], ...] = (
    ("linear_k0", Linear(k=0.0)),
    ("linear_k1", Linear(k=1.0)),
    ("linear_k5", Linear(k=5.0)),
    ("lpp_r1", LinearPlusPower(k1=1.0, k2=2.0, r=1.0)),
    ("lpp_r2", LinearPlusPower(k1=1.0, k2=2.0, r=2.0)),
    ("oddpower_3", OddPower(k=1.0, r=3.0)),
    ("oddpower_1over3", OddPower(k=1.0, r=1.0 / 3.0)),
)

CONVEX_FAMILY: tuple[tuple[str, FunctionSpec], ...] = (
    ("linear_k0", Linear(k=0.0)),
    ("linear_k1", Linear(k=1.0)),
    ("linear_k5", Linear(k=5.0)),
    ("lpp_r1", LinearPlusPower(k1=1.0, k2=2.0, r=1.0)),
    ("lpp_r2", LinearPlusPower(k1=1.0, k2=2.0, r=2.0)),
    ("square", Square()),
)


def matrix() -> tuple[tuple[str, FunctionSpec, ShapeClass], ...]:
    """Every (function, class) benchmark cell."""
    out = [(lbl, f, ShapeClass.MONOTONE) for lbl, f in MONOTONE_FAMILY]
    out += [(lbl, f, ShapeClass.CONVEX) for lbl, f in CONVEX_FAMILY]
    return tuple(out)
