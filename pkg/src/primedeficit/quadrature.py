"""Globally adaptive Gauss-Kronrod (7, 15) quadrature with an error bound.

The per-interval error is the raw ``|K15 - G7|`` difference (no QUADPACK
rescaling), which over-estimates the true error for the smooth integrands
used in this package.  A rounding term of a few ulps per interval is added
on top.
"""
from __future__ import annotations

import heapq
import math
from typing import Callable

import numpy as np

from .errors import DomainError, PrecisionError

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate((-_XGK[:-1], _XGK[::-1]))
_WK = np.concatenate((_WGK[:-1], _WGK[::-1]))
# Gauss nodes are the odd-indexed Kronrod nodes
_WG_FULL = np.zeros(15)
_WG_FULL[1::2] = np.concatenate((_WG[:-1], _WG[::-1]))
_EPS = np.finfo(float).eps


def _rule(f: Callable, a: float, b: float) -> tuple[float, float, float]:
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    fx = np.asarray(f(mid + half * _NODES), dtype=float)
    if not np.all(np.isfinite(fx)):
        raise DomainError(f"integrand not finite on [{a}, {b}]")
    k = half * float(np.dot(_WK, fx))
    g = half * float(np.dot(_WG_FULL, fx))
    rounding = 16 * _EPS * abs(half) * float(np.dot(_WK, np.abs(fx)))
    return k, abs(k - g), rounding


def integrate(
    f: Callable,
    a: float,
    b: float,
    rel_tol: float = 1e-13,
    abs_tol: float = 0.0,
    max_intervals: int = 20000,
) -> tuple[float, float]:
    """Integrate a vectorized ``f`` over [a, b].

    Returns
    -------
    value, error_bound : float
        ``error_bound`` sums the Kronrod-Gauss differences and rounding
        estimates of the final partition.

    Raises
    ------
    PrecisionError
        If ``max_intervals`` subintervals do not reach the tolerance.
    """
    a, b = float(a), float(b)
    if a == b:
        return 0.0, 0.0
    if b < a:
        val, err = integrate(f, b, a, rel_tol, abs_tol, max_intervals)
        return -val, err
    k, e, r = _rule(f, a, b)
    heap = [(-e, a, b, k, e, r)]
    total_err = e
    while True:
        value = math.fsum(item[3] for item in heap)
        rounding = math.fsum(item[5] for item in heap)
        total_err = math.fsum(item[4] for item in heap)
        if total_err + rounding <= max(abs_tol, rel_tol * abs(value)):
            return value, total_err + rounding
        if total_err <= rounding or len(heap) >= max_intervals:
            raise PrecisionError(
                f"quadrature on [{a}, {b}] stalled at error {total_err + rounding:.3g} "
                f"(target {max(abs_tol, rel_tol * abs(value)):.3g})"
            )
        _, lo, hi, *_ = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        for x0, x1 in ((lo, mid), (mid, hi)):
            k, e, r = _rule(f, x0, x1)
            heapq.heappush(heap, (-e, x0, x1, k, e, r))
