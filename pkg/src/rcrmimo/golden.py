"""Golden-section search for unimodal scalar functions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
INV_PHI_SQ = (3.0 - math.sqrt(5.0)) / 2.0


@dataclass
class GoldenResult:
    x: float
    fx: float
    iterations: int
    converged: bool


def golden_section(f: Callable[[float], float], lo: float, hi: float, tol: float,
                   max_iter: int = 200, maximize: bool = False) -> GoldenResult:
    """Locate the extremum of ``f`` on ``[lo, hi]`` to bracket width ``tol``.

    Non-finite function values are treated as the worst possible value so
    the search walks away from overflow regions.
    """
    sign = -1.0 if maximize else 1.0
    worst = math.inf

    def g(x):
        v = sign * f(x)
        return v if math.isfinite(v) else worst

    a, b = (lo, hi) if lo <= hi else (hi, lo)
    h = b - a
    if h <= tol:
        x = 0.5 * (a + b)
        return GoldenResult(x, f(x), 0, True)
    c = a + INV_PHI_SQ * h
    d = a + INV_PHI * h
    yc, yd = g(c), g(d)
    it = 0
    while h > tol and it < max_iter:
        it += 1
        if yc < yd:
            b, d, yd = d, c, yc
            h = INV_PHI * h
            c = a + INV_PHI_SQ * h
            yc = g(c)
        else:
            a, c, yc = c, d, yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = g(d)
    x, y = (c, yc) if yc < yd else (d, yd)
    return GoldenResult(x, sign * y, it, h <= tol)
