"""Threshold temperatures, critical temperature, diagram tracing, achievability.

Conventions (normalized diagonal labeling, see ``games.diagonal_form``):

* inverting temperature T_I = max{0, (b_Y - a_Y) / (2 ln(a_X/b_X))} flips the
  side of x = 1/2 that hosts the principal branch;
* branch temperature T_B = b_Y / ln(a_X/b_X) is the largest T_y at which
  off-principal equilibria survive on the left side;
* lower branch temperature T_A = max{0, -a_Y / ln(a_X/b_X)} is the smallest
  T_y at which the right-side off-principal branch exists;
* critical temperature T_C(T_y): above it the equilibrium is unique.  It is
  attained where L(x, T_y) = b_X / (a_X + b_X) with
  L = y + x(1-x) ln(1/x - 1) dy/dx, located by bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .errors import UnsupportedClassError
from .games import DiagonalForm, GameClass, classify
from .numerics import HALF_BAND, T_MIN, bisect, composite_logit_grid, sigmoid
from .qre import _second_form_u, scan_u_max

PRINCIPAL_PROBES = (0.01, 0.1, 1.0, 10.0, 100.0, 1000.0)

DEFAULT_TRACE_GRID_N = 4096


@dataclass(frozen=True)
class ThresholdTemps:
    """Closed-form T_y thresholds; None values when ln(a_X/b_X) degenerates."""

    t_i: Optional[float]
    t_b: Optional[float]
    t_a: Optional[float]
    degenerate: bool


@dataclass(frozen=True)
class BoundaryPoints:
    """Sign-change boundaries of T_X(x, T_y); fields absent for other cases."""

    x_1: Optional[float] = None
    x_2: Optional[float] = None
    x_3: Optional[float] = None


class Side(Enum):
    LEFT_OF_HALF = "left"
    RIGHT_OF_HALF = "right"


@dataclass
class BranchCurve:
    """One maximal positive-temperature run of T_X(x, T_y) on one side of 1/2.

    Samples are strictly increasing in the logit coordinate u; x is
    non-decreasing and may saturate at the double-precision corners.
    """

    u: np.ndarray
    x: np.ndarray
    y: np.ndarray
    t_x: np.ndarray
    dT_dx: np.ndarray
    stable: np.ndarray          # bool mask per sample
    side: Side
    is_principal: bool = False
    stable_segments: list[tuple[float, float]] = field(default_factory=list)

    def probes_covered(self, probes=PRINCIPAL_PROBES) -> int:
        n = 0
        for p in probes:
            d = self.t_x - p
            if d.size >= 2 and np.any(d[:-1] * d[1:] <= 0.0):
                n += 1
            elif np.any(d == 0.0):
                n += 1
        return n


@dataclass
class BifurcationDiagram:
    t_y: float
    branches: list[BranchCurve]
    thresholds: ThresholdTemps
    critical_temp: Optional[float]

    @property
    def principal(self) -> BranchCurve:
        return next(b for b in self.branches if b.is_principal)


def threshold_temps(diag: DiagonalForm) -> ThresholdTemps:
    """T_I, T_B, T_A from their closed forms; degeneracy is flagged, not raised."""
    if diag.degenerate:
        return ThresholdTemps(t_i=None, t_b=None, t_a=None, degenerate=True)
    log_ratio = math.log(diag.a_x / diag.b_x)
    t_i = max(0.0, (diag.b_y - diag.a_y) / (2.0 * log_ratio))
    t_b = diag.b_y / log_ratio
    t_a = max(0.0, -diag.a_y / log_ratio)
    return ThresholdTemps(t_i=t_i, t_b=t_b, t_a=t_a, degenerate=False)


def boundary_points(diag: DiagonalForm, t_y: float) -> BoundaryPoints:
    """Case-specific clamps of the sign-change point of T_X(x, T_y).

    The underlying crossing is v = (-T_y ln(a_X/b_X) + b_Y) / (a_Y + b_Y);
    per case it is clamped as x_1 = min(1/2, v), x_2 = max(1/2, v) (left/right
    boundaries for b_X >= 0, a_Y+b_Y > 0) or x_3 (single boundary for
    a_Y+b_Y < 0).  Absent for a_Y + b_Y = 0, where y(x, T_y) is constant.
    """
    cls = classify(diag)
    if cls is GameClass.DOMINANT:
        raise UnsupportedClassError("boundary points are defined for b_X >= 0 only")
    if t_y < T_MIN:
        raise ValueError(f"t_y must be >= {T_MIN}")
    s_y = diag.a_y + diag.b_y
    if s_y == 0.0 or diag.degenerate:
        return BoundaryPoints()
    v = (-t_y * math.log(diag.a_x / diag.b_x) + diag.b_y) / s_y
    if cls is GameClass.COORDINATION:
        x_2 = max(0.5, v) if diag.b_y > diag.a_y else None
        return BoundaryPoints(x_1=min(0.5, v), x_2=x_2)
    th = threshold_temps(diag)
    if th.t_i is not None and t_y < th.t_i:
        return BoundaryPoints(x_3=max(0.0, v))
    return BoundaryPoints(x_3=min(1.0, v))


def _ratio_x(diag: DiagonalForm) -> float:
    return diag.b_x / (diag.a_x + diag.b_x)


def _l_minus_ratio(diag: DiagonalForm, x: float, t_y: float) -> float:
    u = math.log(x) - math.log1p(-x)
    _, _, _, L, _ = _second_form_u(diag, u, t_y)
    return float(L) - _ratio_x(diag)


def _t_at_x(diag: DiagonalForm, x: float, t_y: float) -> float:
    u = math.log(x) - math.log1p(-x)
    return float(_second_form_u(diag, u, t_y)[2])


def _fold_scan(diag: DiagonalForm, t_y: float, left_side: bool, grid_n: int = 2048) -> list[float]:
    """Temperatures of local maxima of T_X on one side, found by a dT/dx
    sign scan plus bisection.  Catches the extra fold pair that appears on
    the principal side when a_Y < b_Y makes the branch discontinuous."""
    u = composite_logit_grid(grid_n)
    u = u[u < -4.0 * HALF_BAND] if left_side else u[u > 4.0 * HALF_BAND]
    _, _, t, _, dT = _second_form_u(diag, u, t_y)
    sign = np.sign(dT)
    out: list[float] = []
    flips = np.flatnonzero(sign[:-1] * sign[1:] < 0)
    for i in flips:
        if sign[i] <= 0:  # want + -> - : a local max of T_X in x
            continue
        u_star = bisect(
            lambda uu: float(_second_form_u(diag, uu, t_y)[4]), float(u[i]), float(u[i + 1])
        )
        t_star = float(_second_form_u(diag, u_star, t_y)[2])
        if t_star > 0.0 and math.isfinite(t_star):
            out.append(t_star)
    return out


def critical_temperature(diag: DiagonalForm, t_y: float) -> float:
    """T_C(T_y): the temperature above which the QRE at this T_y is unique.

    For b_X >= 0 only.  The canonical fold solves L(x, T_y) = b_X/(a_X+b_X)
    by bisection inside (0, x_1) when T_y > T_I (present only for T_y < T_B)
    or inside (1/2, 1) when T_A < T_y < T_I.  When a_Y < b_Y the principal
    side can fold as well ("discontinuous principal branch"); the largest
    fold temperature is reported, matching the uniqueness definition.
    Returns 0 when no off-principal equilibria exist at any T_x.
    """
    if diag.b_x < 0.0:
        raise UnsupportedClassError("critical temperature is defined for b_X >= 0 only")
    if t_y < T_MIN:
        raise ValueError(f"t_y must be >= {T_MIN}")
    if diag.a_y + diag.b_y == 0.0:
        return 0.0  # y(x, T_y) constant: T_X monotone on each side, no folds
    if diag.degenerate:
        folds = _fold_scan(diag, t_y, left_side=True) + _fold_scan(diag, t_y, left_side=False)
        return max(folds, default=0.0)

    th = threshold_temps(diag)
    eps = 1e-9
    candidates: list[float] = []
    if t_y >= th.t_i:
        bp = boundary_points(diag, t_y)
        x_1 = bp.x_1 if bp.x_1 is not None else 0.5
        if t_y < th.t_b and x_1 > 2 * eps:
            # L is increasing on (0, x_1) with a unique crossing.
            x_l = bisect(lambda xx: _l_minus_ratio(diag, xx, t_y), eps, x_1 - eps)
            candidates.append(_t_at_x(diag, x_l, t_y))
        if diag.a_y < diag.b_y:
            candidates.extend(_fold_scan(diag, t_y, left_side=False))
    elif t_y > th.t_a:
        # L dips then rises across the ratio exactly once on (1/2, 1).
        x_l = bisect(lambda xx: _l_minus_ratio(diag, xx, t_y), 0.5 + eps, 1.0 - eps)
        candidates.append(_t_at_x(diag, x_l, t_y))
    return max((c for c in candidates if c > 0.0), default=0.0)


def _split_branches(
    u: np.ndarray, x: np.ndarray, y: np.ndarray, t: np.ndarray, dT: np.ndarray, side: Side
) -> list[BranchCurve]:
    """Group contiguous positive-temperature samples into branch curves.

    Adjacent samples are glued only when the temperature jump is consistent
    with the local slope, which prevents bridging across blowups.  Saturated
    corner samples (x(1-x) underflowed, slope infinite) always glue.
    """
    pos = (t > 0.0) & np.isfinite(t)
    branches: list[BranchCurve] = []
    i = 0
    n = x.size
    while i < n:
        if not pos[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and pos[j + 1]:
            slope = max(abs(dT[j]), abs(dT[j + 1]))
            if math.isfinite(slope) and abs(t[j + 1] - t[j]) >= 10.0 * slope * (x[j + 1] - x[j]) + 1.0:
                break
            j += 1
        sl = slice(i, j + 1)
        if side is Side.LEFT_OF_HALF:
            stable = dT[sl] > 0.0
        else:
            stable = dT[sl] < 0.0
        branches.append(
            BranchCurve(
                u=u[sl].copy(), x=x[sl].copy(), y=y[sl].copy(), t_x=t[sl].copy(),
                dT_dx=dT[sl].copy(), stable=stable, side=side,
            )
        )
        i = j + 1
    return branches


def _stable_segments(branch: BranchCurve) -> list[tuple[float, float]]:
    segs: list[tuple[float, float]] = []
    start = None
    for k, s in enumerate(branch.stable):
        if s and start is None:
            start = branch.x[k]
        elif not s and start is not None:
            segs.append((float(start), float(branch.x[k - 1])))
            start = None
    if start is not None:
        segs.append((float(start), float(branch.x[-1])))
    return segs


def trace_diagram(
    diag: DiagonalForm, t_y: float, grid_n: int = DEFAULT_TRACE_GRID_N
) -> BifurcationDiagram:
    """Sample T_X(x, T_y) over (0,1) \\ {1/2} and assemble annotated branches.

    Exactly one branch is marked principal: the one whose sampled temperature
    range brackets every probe in PRINCIPAL_PROBES (six decades stand in for
    "every positive T_x").
    """
    if t_y < T_MIN:
        raise ValueError(f"t_y must be >= {T_MIN}")
    if grid_n < 256:
        raise ValueError("grid_n must be >= 256")
    u = composite_logit_grid(grid_n, u_max=scan_u_max(diag, 0.005))
    u = u[np.abs(u) >= 4.0 * HALF_BAND]
    x, y, t, _, dT = _second_form_u(diag, u, t_y)

    branches: list[BranchCurve] = []
    for side, mask in ((Side.LEFT_OF_HALF, u < 0), (Side.RIGHT_OF_HALF, u > 0)):
        branches.extend(_split_branches(u[mask], x[mask], y[mask], t[mask], dT[mask], side))

    for b in branches:
        b.stable_segments = _stable_segments(b)

    if branches:
        scores = [b.probes_covered() for b in branches]
        full = [i for i, s in enumerate(scores) if s == len(PRINCIPAL_PROBES)]
        if len(full) == 1:
            principal_idx = full[0]
        else:
            # Numerical edge: fall back to best coverage, then widest T range.
            principal_idx = max(
                range(len(branches)),
                key=lambda i: (scores[i], float(branches[i].t_x.max() - branches[i].t_x.min())),
            )
        branches[principal_idx].is_principal = True

    crit = None
    if diag.b_x >= 0.0:
        crit = critical_temperature(diag, t_y)
    return BifurcationDiagram(
        t_y=t_y, branches=branches, thresholds=threshold_temps(diag), critical_temp=crit
    )


@dataclass(frozen=True)
class AchievableRegion:
    """The closed set of states reachable as QREs at finite positive temps.

    Union/intersection of four axis-aligned rectangles whose corners come from
    the indifference ratios r_x = b_X/(a_X+b_X) and r_y = b_Y/(a_Y+b_Y); the
    ratios are None when the corresponding sum vanishes.
    """

    r_x: Optional[float]
    r_y: Optional[float]
    pieces: tuple[tuple[tuple[float, float], tuple[float, float]], ...]


def is_qre_achievable(diag: DiagonalForm, x: float, y: float) -> bool:
    """Membership in the closed achievable set (boundary included).

    The state is achievable iff both first-form temperatures have matching
    numerator/denominator signs: sign(b_X - (a_X+b_X) y) must agree with
    sign(1/2 - x), and symmetrically for the column player.
    """
    eps = 1e-12
    num_x = diag.b_x - (diag.a_x + diag.b_x) * y
    num_y = diag.b_y - (diag.a_y + diag.b_y) * x
    p1 = (num_x >= -eps and x <= 0.5 + eps) or (num_x <= eps and x >= 0.5 - eps)
    p2 = (num_y >= -eps and y <= 0.5 + eps) or (num_y <= eps and y >= 0.5 - eps)
    return p1 and p2


def achievable_region(diag: DiagonalForm) -> AchievableRegion:
    """Rectangle decomposition of the achievable set (None ratios omitted)."""
    s_x = diag.a_x + diag.b_x
    s_y = diag.a_y + diag.b_y
    r_x = diag.b_x / s_x if s_x != 0.0 else None
    r_y = diag.b_y / s_y if s_y != 0.0 else None
    pieces: list[tuple[tuple[float, float], tuple[float, float]]] = []
    if r_x is not None and r_y is not None:
        raw = [
            ((max(0.5, r_y), 1.0), (max(r_x, 0.5), 1.0)),
            ((0.5, r_y), (r_x, 0.5)),
            ((r_y, 0.5), (0.5, r_x)),
            ((0.0, min(0.5, r_y)), (0.0, min(r_x, 0.5))),
        ]
        pieces = [
            ((xl, xh), (yl, yh))
            for (xl, xh), (yl, yh) in raw
            if xl <= xh and yl <= yh
        ]
    return AchievableRegion(r_x=r_x, r_y=r_y, pieces=tuple(pieces))
