"""Shared numerical constants and scalar helpers.

Probabilities are clamped away from the simplex boundary before any log is
taken, and every schedule that conceptually ends "at zero temperature"
terminates at ``T_MIN`` instead, which removes the singular limit while
staying far below the structural thresholds of desk-scale games.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
from scipy.special import expit

# Floor standing in for "temperature -> 0".
T_MIN = 1e-3

# Probabilities are clamped to [P_EPS, 1 - P_EPS] before logs.
P_EPS = 1e-12

# Half-band excluded around x = 1/2 where the second-form representation blows up.
HALF_BAND = 1e-9

# Largest |logit| used on scan grids; sigmoid(690) is still a normal double.
U_MAX = 690.0

# Maximum bisection iterations (double precision exhausts long before this).
BISECT_MAX_ITER = 200


def clamp01(p: float) -> float:
    """Clamp a probability into the representable open interval."""
    return min(max(p, P_EPS), 1.0 - P_EPS)


def sigmoid(z):
    """Numerically stable 1 / (1 + exp(-z)); accepts scalars or arrays."""
    return expit(z)


def logit(p: float) -> float:
    """log(p / (1-p)) on the clamped probability."""
    p = clamp01(p)
    return math.log(p) - math.log1p(-p)


def bisect(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    xtol: float = 1e-13,
    max_iter: int = BISECT_MAX_ITER,
) -> float:
    """Bisection on a sign change of ``f`` over [lo, hi].

    Requires f(lo) and f(hi) of opposite sign (either may be exactly zero).
    Stops when the bracket is below ``xtol`` both absolutely and relative to
    the root, or when the midpoint can no longer be distinguished from an
    endpoint in double precision.
    """
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ValueError(f"no sign change on [{lo!r}, {hi!r}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi or (hi - lo) < xtol * min(1.0, abs(mid)):
            break
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def composite_logit_grid(grid_n: int, u_max: float = U_MAX) -> np.ndarray:
    """Scan grid in logit(x) space: uniform-in-x core plus geometric tails.

    The uniform core resolves mid-simplex structure; the geometric part covers
    both the near-1/2 blowup of the temperature representation (|u| down to
    1e-7) and near-corner equilibria out to |u| = u_max.  Returned sorted,
    without the u = 0 point.
    """
    core_x = np.linspace(0.0, 1.0, grid_n + 2)[1:-1]
    core_u = np.log(core_x) - np.log1p(-core_x)
    m = max(grid_n // 4, 64)
    geo = np.geomspace(1e-7, max(u_max, 1.0), m)
    u = np.concatenate([core_u, geo, -geo])
    u = np.unique(u)
    return u[u != 0.0]
