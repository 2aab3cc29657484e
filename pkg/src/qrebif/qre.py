"""QRE fixed-point conditions, representation forms, stability, enumeration.

Everything here works in the normalized diagonal labeling (see
``games.diagonal_form``).  Two equivalent representations of the equilibrium
manifold are used throughout:

* first form: temperatures as functions of the state,
  T_X(x, y) = (-(a_X+b_X) y + b_X) / ln(1/x - 1) and symmetrically for T_Y;
* second form: fix T_y and express both the column player's response
  y(x, T_y) = 1 / (1 + exp((-(a_Y+b_Y) x + b_Y)/T_y)) and the row
  temperature T_X(x, T_y) along the one-dimensional slice.

Internally x is parameterized by its logit u = ln(x/(1-x)), for which
ln(1/x - 1) = -u exactly; this keeps near-corner equilibria representable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InternalConsistencyError, SingularityError
from .games import DiagonalForm, StrategyProfile
from .numerics import (
    HALF_BAND,
    T_MIN,
    U_MAX,
    bisect,
    clamp01,
    composite_logit_grid,
    logit,
    sigmoid,
)

# |dT/dx| below this is treated as a tangency and left unclassified.
DTDX_INDETERMINATE = 1e-10

# Relative residual allowed between T_X at a bisected root and the target.
TEMP_RESIDUAL_TOL = 1e-9

DEFAULT_GRID_N = 4096


@dataclass(frozen=True)
class TemperaturePair:
    """Exploration temperatures; floored at T_MIN to avoid the singular limit."""

    t_x: float
    t_y: float

    def __post_init__(self):
        if not (math.isfinite(self.t_x) and math.isfinite(self.t_y)):
            raise ValueError("temperatures must be finite")
        if self.t_x < T_MIN or self.t_y < T_MIN:
            raise ValueError(f"temperatures must be >= {T_MIN}")


class Stability(Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class QrePoint:
    """One equilibrium sample; (x, y) solves the fixed point at (t_x, t_y)."""

    x: float
    y: float
    t_x: float
    t_y: float
    stability: Stability


@dataclass(frozen=True)
class SecondFormSample:
    """Second-form quantities at a single x for fixed T_y."""

    x: float
    y_ii: float
    t_x_ii: float
    dT_dx: float
    L_val: float


def delta_a(diag: DiagonalForm, y: float) -> float:
    """Row player's payoff advantage of action 1: a_X y - b_X (1-y)."""
    return diag.a_x * y - diag.b_x * (1.0 - y)


def delta_b(diag: DiagonalForm, x: float) -> float:
    """Column player's payoff advantage of action 1: a_Y x - b_Y (1-x)."""
    return diag.a_y * x - diag.b_y * (1.0 - x)


def qre_response(
    diag: DiagonalForm, profile: StrategyProfile, temps: TemperaturePair
) -> StrategyProfile:
    """Boltzmann best response of both players to the given profile."""
    x, y = profile
    rx = float(sigmoid(delta_a(diag, y) / temps.t_x))
    ry = float(sigmoid(delta_b(diag, x) / temps.t_y))
    return StrategyProfile(rx, ry)


def _check_not_half(value: float, name: str) -> None:
    if abs(value - 0.5) <= HALF_BAND:
        raise SingularityError(f"{name} = 1/2 is a singular point of the representation")


def first_form_temps(diag: DiagonalForm, x: float, y: float) -> tuple[float, float]:
    """Temperatures that make (x, y) a QRE; either may come out negative.

    A negative value means the state is not reachable at any positive
    temperature on that axis.
    """
    _check_not_half(x, "x")
    _check_not_half(y, "y")
    u = logit(x)
    v = logit(y)
    t_x = (diag.b_x - (diag.a_x + diag.b_x) * y) / (-u)
    t_y = (diag.b_y - (diag.a_y + diag.b_y) * x) / (-v)
    return t_x, t_y


def _second_form_u(diag: DiagonalForm, u, t_y: float):
    """Vectorized second-form quantities at logit coordinates u.

    Returns (x, y, t, L, dT/dx); u may be a scalar or an ndarray and must not
    contain 0.  Division warnings are suppressed: x(1-x) underflows to zero
    for |u| beyond ~745, where dT/dx correctly becomes +-inf.
    """
    u = np.asarray(u, dtype=float)
    x = sigmoid(u)
    xq = sigmoid(u) * sigmoid(-u)  # x(1-x) without cancellation
    z = (diag.a_y + diag.b_y) * x - diag.b_y
    y = sigmoid(z / t_y)
    yq = sigmoid(z / t_y) * sigmoid(-z / t_y)
    s_x = diag.a_x + diag.b_x
    with np.errstate(divide="ignore", over="ignore"):
        t = (s_x * y - diag.b_x) / u
        dy_dx = yq * (diag.a_y + diag.b_y) / t_y
        L = y - xq * u * dy_dx
        dT = (diag.b_x - s_x * L) / (xq * u * u)
    return x, y, t, L, dT


def second_form(diag: DiagonalForm, x: float, t_y: float) -> SecondFormSample:
    """Second-form sample at x for fixed T_y; x = 1/2 is singular."""
    _check_not_half(x, "x")
    if t_y < T_MIN:
        raise ValueError(f"t_y must be >= {T_MIN}")
    u = logit(x)
    _, y, t, L, dT = _second_form_u(diag, u, t_y)
    return SecondFormSample(x=x, y_ii=float(y), t_x_ii=float(t), dT_dx=float(dT), L_val=float(L))


def stability_from_slope(x: float, dT_dx: float) -> Stability:
    """Stability of (x, y(x)) from the slope of T_X along the branch.

    Stable iff the branch moves away from x = 1/2 as T_x decreases:
    dT/dx > 0 left of 1/2, dT/dx < 0 right of it.
    """
    if abs(dT_dx) < DTDX_INDETERMINATE:
        return Stability.INDETERMINATE
    if x < 0.5:
        return Stability.STABLE if dT_dx > 0 else Stability.UNSTABLE
    return Stability.STABLE if dT_dx < 0 else Stability.UNSTABLE


def stability(diag: DiagonalForm, x: float, t_y: float) -> Stability:
    """Derivative-sign stability classification of the QRE at (x, y(x, T_y))."""
    sample = second_form(diag, x, t_y)
    return stability_from_slope(x, sample.dT_dx)


def jacobian(
    diag: DiagonalForm, profile: StrategyProfile, temps: TemperaturePair
) -> np.ndarray:
    """Jacobian of the reduced flow (x_dot, y_dot) at an interior point."""
    x = clamp01(profile.x)
    y = clamp01(profile.y)
    u = logit(x)
    v = logit(y)
    f_inner = delta_a(diag, y) - temps.t_x * u
    g_inner = delta_b(diag, x) - temps.t_y * v
    return np.array(
        [
            [(1 - 2 * x) * f_inner - temps.t_x, x * (1 - x) * (diag.a_x + diag.b_x)],
            [y * (1 - y) * (diag.a_y + diag.b_y), (1 - 2 * y) * g_inner - temps.t_y],
        ]
    )


def jacobian_eigen_realparts(
    diag: DiagonalForm, profile: StrategyProfile, temps: TemperaturePair
) -> tuple[float, float]:
    """Real parts of both Jacobian eigenvalues, ascending."""
    J = jacobian(diag, profile, temps)
    half_tr = 0.5 * (J[0, 0] + J[1, 1])
    disc = 0.25 * (J[0, 0] - J[1, 1]) ** 2 + J[0, 1] * J[1, 0]
    if disc >= 0.0:
        r = math.sqrt(disc)
        return half_tr - r, half_tr + r
    return half_tr, half_tr


def stability_from_jacobian(
    diag: DiagonalForm, profile: StrategyProfile, temps: TemperaturePair
) -> Stability:
    """Eigenvalue-sign stability; the independent cross-check for stability()."""
    lo, hi = jacobian_eigen_realparts(diag, profile, temps)
    if hi < 0.0:
        return Stability.STABLE
    if hi > 0.0:
        return Stability.UNSTABLE
    return Stability.INDETERMINATE


def scan_u_max(diag: DiagonalForm, t_floor: float) -> float:
    """Logit range guaranteed to contain every equilibrium with T_x >= t_floor.

    At a fixed point, |u| = |payoff advantage| / T_x <= (|a_X| + |b_X|) / T_x.
    """
    span = abs(diag.a_x) + abs(diag.b_x)
    return max(U_MAX, 1.1 * span / max(t_floor, T_MIN))


def _scan_roots(diag: DiagonalForm, t_x: float, t_y: float, grid_n: int) -> list[float]:
    """Roots (in u) of T_X(x, T_y) = t_x by sign-change scan plus bisection."""
    u = composite_logit_grid(grid_n, u_max=scan_u_max(diag, t_x))
    u = u[np.abs(u) >= 4.0 * HALF_BAND]
    _, _, t, _, _ = _second_form_u(diag, u, t_y)
    f = t - t_x
    roots: list[float] = []

    def refine(lo: float, hi: float) -> float:
        return bisect(lambda uu: float(_second_form_u(diag, uu, t_y)[2]) - t_x, lo, hi)

    for side in (u < 0, u > 0):
        us = u[side]
        fs = f[side]
        if us.size == 0:
            continue
        sign = np.sign(fs)
        exact = np.flatnonzero(sign == 0)
        roots.extend(us[exact].tolist())
        flips = np.flatnonzero(sign[:-1] * sign[1:] < 0)
        for i in flips:
            roots.append(refine(float(us[i]), float(us[i + 1])))

    roots.sort()
    deduped: list[float] = []
    for r in roots:
        if not deduped or abs(r - deduped[-1]) > 1e-9 * max(1.0, abs(r)):
            deduped.append(r)
    return deduped


def _half_point_qre(diag: DiagonalForm, temps: TemperaturePair) -> QrePoint | None:
    """x = 1/2 solves the fixed point only when the row player is exactly
    indifferent there (e.g. the all-constant game, or T_y exactly at the
    inverting temperature); the scan's exclusion band would miss it."""
    y_half = float(sigmoid(delta_b(diag, 0.5) / temps.t_y))
    if abs(float(sigmoid(delta_a(diag, y_half) / temps.t_x)) - 0.5) > 1e-9:
        return None
    label = stability_from_jacobian(diag, StrategyProfile(0.5, y_half), temps)
    return QrePoint(0.5, y_half, temps.t_x, temps.t_y, label)


def enumerate_qre(
    diag: DiagonalForm, temps: TemperaturePair, grid_n: int = DEFAULT_GRID_N
) -> list[QrePoint]:
    """All QREs at the given temperatures, sorted ascending in x.

    Scans T_X(x, T_y) - t_x for sign changes over a composite logit grid and
    bisects each bracket.  At least one QRE always exists; if the scan comes
    up empty it retries once on a denser grid before declaring an internal
    inconsistency.
    """
    if grid_n < 100:
        raise ValueError("grid_n must be >= 100")
    roots = _scan_roots(diag, temps.t_x, temps.t_y, grid_n)
    half = _half_point_qre(diag, temps)
    if not roots and half is None:
        roots = _scan_roots(diag, temps.t_x, temps.t_y, grid_n * 8)
        if not roots:
            raise InternalConsistencyError(
                f"no QRE found at (t_x={temps.t_x:.6g}, t_y={temps.t_y:.6g})"
            )
    points: list[QrePoint] = []
    for u in roots:
        x, y, t, _, dT = (float(a) for a in _second_form_u(diag, u, temps.t_y))
        if abs(t - temps.t_x) > TEMP_RESIDUAL_TOL * max(1.0, temps.t_x):
            raise InternalConsistencyError(
                f"root residual too large at u={u!r}: T={t!r} vs {temps.t_x!r}"
            )
        points.append(
            QrePoint(
                x=clamp01(x),
                y=clamp01(y),
                t_x=temps.t_x,
                t_y=temps.t_y,
                stability=stability_from_slope(x, dT),
            )
        )
    if half is not None and all(abs(p.x - half.x) > 1e-9 for p in points):
        points.append(half)
    points.sort(key=lambda p: p.x)
    return points
