"""Continuous-time Q-learning dynamics, schedules, entropy, discrete agents.

The two-strategy reduction of the learning flow is

    x_dot = x(1-x) [ a_X y - b_X (1-y) - T_x ln(x/(1-x)) ]
    y_dot = y(1-y) [ a_Y x - b_Y (1-x) - T_y ln(y/(1-y)) ]

Integration happens in logit coordinates (u, v) = (ln(x/(1-x)), ln(y/(1-y))),
where the boundary log singularities vanish and the flow has constant
divergence -(T_x + T_y).  Convergence is detected on the simplex-coordinate
field norm and certified by a Boltzmann-response fixed-point polish, so
near-corner equilibria at low temperature are recognized without waiting out
the O(1/T) logit drift toward them.

Public entry points accept and report states in the caller's original action
labels; any orientation swaps recorded in the diagonal form are applied
internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .errors import IntegrationDivergedError, ScheduleStalledError
from .games import DiagonalForm, PayoffMatrices, StrategyProfile, social_welfare
from .numerics import P_EPS, T_MIN, clamp01, logit, sigmoid
from .qre import TemperaturePair, delta_a, delta_b


@dataclass(frozen=True)
class IntegratorConfig:
    step: float = 1e-3
    max_time: float = 1e4
    residual_tol: float = 1e-9
    record_every: int = 100

    def __post_init__(self):
        if not 0.0 < self.step <= 0.1:
            raise ValueError("step must be in (0, 0.1]")
        if self.max_time <= 0.0:
            raise ValueError("max_time must be positive")
        if self.residual_tol <= 0.0:
            raise ValueError("residual_tol must be positive")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


class TempAxis(Enum):
    TX = "tx"
    TY = "ty"
    BOTH = "both"


@dataclass(frozen=True)
class SchedulePhase:
    which: TempAxis
    target: float
    label: str

    def __post_init__(self):
        if self.target < T_MIN:
            raise ValueError(f"phase target must be >= {T_MIN}")


@dataclass(frozen=True)
class TemperatureSchedule:
    """Ordered piecewise temperature program starting from ``initial``."""

    initial: TemperaturePair
    phases: tuple[SchedulePhase, ...]

    def __init__(self, initial: TemperaturePair, phases: Sequence[SchedulePhase]):
        object.__setattr__(self, "initial", initial)
        object.__setattr__(self, "phases", tuple(phases))

    def temps_after(self, n_phases: Optional[int] = None) -> TemperaturePair:
        """Temperatures once the first ``n_phases`` phases completed."""
        t_x, t_y = self.initial.t_x, self.initial.t_y
        phases = self.phases if n_phases is None else self.phases[:n_phases]
        for ph in phases:
            if ph.which in (TempAxis.TX, TempAxis.BOTH):
                t_x = ph.target
            if ph.which in (TempAxis.TY, TempAxis.BOTH):
                t_y = ph.target
        return TemperaturePair(t_x, t_y)


@dataclass
class Trajectory:
    """Recorded flow: parallel columns plus the convergence verdict.

    ``phase_marks`` maps schedule phase labels to the row index of the state
    at which that phase completed (empty for plain integrations).
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    t_x: np.ndarray
    t_y: np.ndarray
    sw: np.ndarray
    entropy: np.ndarray
    converged: bool
    final_residual: float
    phase_marks: list[tuple[str, int]] = field(default_factory=list)

    @property
    def final_state(self) -> StrategyProfile:
        return StrategyProfile(float(self.x[-1]), float(self.y[-1]))

    def __len__(self) -> int:
        return int(self.t.size)


def entropy(profile: StrategyProfile) -> float:
    """Joint Shannon entropy of both mixed strategies (clamped logs)."""
    return float(_entropy_arrays(np.asarray([profile.x]), np.asarray([profile.y]))[0])


def _entropy_arrays(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    def h(p):
        p = np.clip(p, P_EPS, 1.0 - P_EPS)
        return -(p * np.log(p) + (1.0 - p) * np.log1p(-p))

    return h(x) + h(y)


def vector_field(
    diag: DiagonalForm, profile: StrategyProfile, temps: TemperaturePair
) -> tuple[float, float]:
    """(x_dot, y_dot) of the reduced flow at a clamped interior profile.

    Normalized diagonal labeling.
    """
    x = clamp01(profile.x)
    y = clamp01(profile.y)
    u = logit(x)
    v = logit(y)
    return (
        x * (1.0 - x) * (delta_a(diag, y) - temps.t_x * u),
        y * (1.0 - y) * (delta_b(diag, x) - temps.t_y * v),
    )


def logit_field(
    diag: DiagonalForm, u: float, v: float, temps: TemperaturePair
) -> tuple[float, float]:
    """(u_dot, v_dot) in logit coordinates; divergence is -(T_x + T_y).

    Normalized diagonal labeling.
    """
    y = float(sigmoid(v))
    x = float(sigmoid(u))
    return (delta_a(diag, y) - temps.t_x * u, delta_b(diag, x) - temps.t_y * v)


# ---------------------------------------------------------------------------
# numba kernels

_STATUS_CONVERGED = 0
_STATUS_MAX_TIME = 1
_STATUS_DIVERGED = 2


@njit(cache=True)
def _sig(z):
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@njit(cache=True)
def _rhs(u, v, ax, bx, ay, by, tx, ty):
    y = _sig(v)
    x = _sig(u)
    du = ax * y - bx * (1.0 - y) - tx * u
    dv = ay * x - by * (1.0 - x) - ty * v
    return du, dv


@njit(cache=True)
def _simplex_residual(u, v, ax, bx, ay, by, tx, ty):
    du, dv = _rhs(u, v, ax, bx, ay, by, tx, ty)
    xq = _sig(u) * _sig(-u)
    yq = _sig(v) * _sig(-v)
    return math.hypot(xq * du, yq * dv)


@njit(cache=True)
def _polish(u, v, ax, bx, ay, by, tx, ty):
    """Boltzmann-response fixed-point iteration; contracts near stable QREs."""
    for _ in range(200):
        nu = (ax * _sig(v) - bx * _sig(-v)) / tx
        nv = (ay * _sig(u) - by * _sig(-u)) / ty
        done = abs(nu - u) < 1e-14 * (1.0 + abs(nu)) and abs(nv - v) < 1e-14 * (1.0 + abs(nv))
        u, v = nu, nv
        if done:
            break
    return u, v


@njit(cache=True)
def _rk4_relax(u, v, ax, bx, ay, by, tx, ty, h, n_max, res_tol, rec_every, rec):
    """Fixed-step classical RK4 until the simplex-field norm drops below
    res_tol (certified by the response polish) or n_max steps elapse.

    ``rec`` is a preallocated (m, 3) buffer receiving (t, u, v) rows every
    ``rec_every`` steps.  Returns (u, v, t, n_rec, status, residual).
    """
    t = 0.0
    n_rec = 0
    skip_until = 0
    res = _simplex_residual(u, v, ax, bx, ay, by, tx, ty)
    if res < res_tol:
        pu, pv = _polish(u, v, ax, bx, ay, by, tx, ty)
        if abs(_sig(pu) - _sig(u)) < 1e-6 and abs(_sig(pv) - _sig(v)) < 1e-6:
            res = _simplex_residual(pu, pv, ax, bx, ay, by, tx, ty)
            return pu, pv, t, n_rec, _STATUS_CONVERGED, res
        skip_until = 64
    for step in range(1, n_max + 1):
        k1u, k1v = _rhs(u, v, ax, bx, ay, by, tx, ty)
        k2u, k2v = _rhs(u + 0.5 * h * k1u, v + 0.5 * h * k1v, ax, bx, ay, by, tx, ty)
        k3u, k3v = _rhs(u + 0.5 * h * k2u, v + 0.5 * h * k2v, ax, bx, ay, by, tx, ty)
        k4u, k4v = _rhs(u + h * k3u, v + h * k3v, ax, bx, ay, by, tx, ty)
        u = u + (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        v = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        t = t + h
        if not (math.isfinite(u) and math.isfinite(v)):
            return u, v, t, n_rec, _STATUS_DIVERGED, math.inf
        if rec_every > 0 and step % rec_every == 0 and n_rec < rec.shape[0]:
            rec[n_rec, 0] = t
            rec[n_rec, 1] = u
            rec[n_rec, 2] = v
            n_rec += 1
        if step >= skip_until:
            res = _simplex_residual(u, v, ax, bx, ay, by, tx, ty)
            if res < res_tol:
                pu, pv = _polish(u, v, ax, bx, ay, by, tx, ty)
                if abs(_sig(pu) - _sig(u)) < 1e-6 and abs(_sig(pv) - _sig(v)) < 1e-6:
                    res = _simplex_residual(pu, pv, ax, bx, ay, by, tx, ty)
                    return pu, pv, t, n_rec, _STATUS_CONVERGED, res
                skip_until = step + 64
    res = _simplex_residual(u, v, ax, bx, ay, by, tx, ty)
    return u, v, t, n_rec, _STATUS_MAX_TIME, res


# ---------------------------------------------------------------------------
# trajectory assembly


def _effective_step(cfg: IntegratorConfig, diag: DiagonalForm, t_x: float, t_y: float) -> float:
    """Step bounded by the explicit-RK4 stability limit of the stiffest rate."""
    rate = max(t_x, t_y) + 0.25 * (abs(diag.a_x) + abs(diag.b_x) + abs(diag.a_y) + abs(diag.b_y))
    return min(cfg.step, 2.5 / rate)


class _Recorder:
    """Accumulates (t, u, v, t_x, t_y) rows across integration segments."""

    def __init__(self):
        self.rows: list[tuple[float, float, float, float, float]] = []

    def add(self, t: float, u: float, v: float, t_x: float, t_y: float) -> None:
        if self.rows and t <= self.rows[-1][0]:
            # Replace a coincident-time row (e.g. polish refinement of the
            # final recorded point) to keep t strictly increasing.
            if t == self.rows[-1][0]:
                self.rows[-1] = (t, u, v, t_x, t_y)
                return
            raise AssertionError("non-monotone trajectory time")
        self.rows.append((t, u, v, t_x, t_y))

    @property
    def last_index(self) -> int:
        return len(self.rows) - 1


# Maximum equilibrium drift per tracked schedule increment; larger moves mean
# a branch transition and fall back to honest flow integration.
_TRACK_TOL = 0.02


def _run_segment(
    rec: _Recorder,
    diag: DiagonalForm,
    u: float,
    v: float,
    t_x: float,
    t_y: float,
    cfg: IntegratorConfig,
    t_offset: float,
    tracking: bool = False,
) -> tuple[float, float, float, int, float]:
    """One constant-temperature relaxation; returns (u, v, t_end, status, residual).

    With ``tracking`` the Boltzmann-response iteration is tried first: under a
    small temperature increment the adiabatic equilibrium moves only slightly,
    so a nearby fixed point that meets the residual tolerance is accepted
    without simulating the flow.  Fold transitions move the state too far and
    take the integration path.
    """
    if tracking:
        pu, pv = _polish(u, v, diag.a_x, diag.b_x, diag.a_y, diag.b_y, t_x, t_y)
        moved = max(abs(_sig(pu) - _sig(u)), abs(_sig(pv) - _sig(v)))
        res = _simplex_residual(pu, pv, diag.a_x, diag.b_x, diag.a_y, diag.b_y, t_x, t_y)
        if moved < _TRACK_TOL and res < cfg.residual_tol:
            h = _effective_step(cfg, diag, t_x, t_y)
            rec.add(t_offset + h, pu, pv, t_x, t_y)
            return pu, pv, t_offset + h, _STATUS_CONVERGED, res
    h = _effective_step(cfg, diag, t_x, t_y)
    n_max = int(math.ceil(cfg.max_time / h))
    buf_rows = min(n_max // cfg.record_every + 2, 200_000)
    buf = np.empty((buf_rows, 3))
    u2, v2, t_rel, n_rec, status, res = _rk4_relax(
        u, v, diag.a_x, diag.b_x, diag.a_y, diag.b_y,
        t_x, t_y, h, n_max, cfg.residual_tol, cfg.record_every, buf,
    )
    if status == _STATUS_DIVERGED:
        raise IntegrationDivergedError(
            f"non-finite state at temperatures ({t_x:.6g}, {t_y:.6g})"
        )
    for k in range(n_rec):
        if buf[k, 0] < t_rel:  # final point appended separately
            rec.add(t_offset + buf[k, 0], buf[k, 1], buf[k, 2], t_x, t_y)
    rec.add(t_offset + t_rel, u2, v2, t_x, t_y)
    return u2, v2, t_offset + t_rel, status, res


def _assemble(
    rec: _Recorder,
    diag: DiagonalForm,
    converged: bool,
    residual: float,
    welfare_game: Optional[PayoffMatrices],
    phase_marks: list[tuple[str, int]],
) -> Trajectory:
    arr = np.asarray(rec.rows)
    t = arr[:, 0]
    x = np.clip(sigmoid(arr[:, 1]), P_EPS, 1.0 - P_EPS)
    y = np.clip(sigmoid(arr[:, 2]), P_EPS, 1.0 - P_EPS)
    ori = diag.orientation
    if ori.swap_p1:
        x = 1.0 - x
    if ori.swap_p2:
        y = 1.0 - y
    game = welfare_game if welfare_game is not None else diag.as_matrices(original_labels=True)
    A, B = game.A, game.B
    sw = (
        x * y * (A[0, 0] + B[0, 0])
        + x * (1 - y) * (A[0, 1] + B[1, 0])
        + (1 - x) * y * (A[1, 0] + B[0, 1])
        + (1 - x) * (1 - y) * (A[1, 1] + B[1, 1])
    )
    return Trajectory(
        t=t, x=x, y=y, t_x=arr[:, 3], t_y=arr[:, 4],
        sw=sw, entropy=_entropy_arrays(x, y),
        converged=converged, final_residual=residual, phase_marks=phase_marks,
    )


def _initial_uv(diag: DiagonalForm, init: StrategyProfile) -> tuple[float, float]:
    norm = diag.orientation.to_normalized(
        StrategyProfile(clamp01(init.x), clamp01(init.y))
    )
    return logit(norm.x), logit(norm.y)


def integrate(
    diag: DiagonalForm,
    init: StrategyProfile,
    temps: TemperaturePair,
    cfg: IntegratorConfig = IntegratorConfig(),
    welfare_game: Optional[PayoffMatrices] = None,
) -> Trajectory:
    """Relax the flow at fixed temperatures from ``init`` (original labels).

    Stops once the simplex-coordinate field norm falls below
    ``cfg.residual_tol`` (endpoint refined by the response polish) or
    ``cfg.max_time`` is reached.  The welfare column is evaluated on
    ``welfare_game`` when given, else on the reconstructed diagonal game.
    """
    u, v = _initial_uv(diag, init)
    rec = _Recorder()
    rec.add(0.0, u, v, temps.t_x, temps.t_y)
    _, _, _, status, res = _run_segment(rec, diag, u, v, temps.t_x, temps.t_y, cfg, 0.0)
    return _assemble(rec, diag, status == _STATUS_CONVERGED, res, welfare_game, [])


def _geometric_targets(current: float, target: float, ratio: float = 1.05) -> list[float]:
    """Intermediate temperatures from current to target, steps of <= ratio."""
    if current == target:
        return []
    n = max(1, math.ceil(abs(math.log(target / current)) / math.log(ratio)))
    seq = [current * (target / current) ** (k / n) for k in range(1, n)]
    seq.append(target)
    return seq


def integrate_schedule(
    diag: DiagonalForm,
    init: StrategyProfile,
    schedule: TemperatureSchedule,
    cfg: IntegratorConfig = IntegratorConfig(),
    welfare_game: Optional[PayoffMatrices] = None,
) -> Trajectory:
    """Quasi-static schedule execution.

    The state first relaxes at the schedule's initial temperatures; each
    phase then moves its declared temperature(s) in geometric increments
    (ratio <= 1.05), relaxing to convergence after every increment so the
    state tracks the adiabatic equilibrium branch.  An increment that fails
    to converge within ``cfg.max_time`` raises ScheduleStalledError.
    """
    t_x, t_y = schedule.initial.t_x, schedule.initial.t_y
    u, v = _initial_uv(diag, init)
    rec = _Recorder()
    rec.add(0.0, u, v, t_x, t_y)
    t_now = 0.0
    u, v, t_now, status, res = _run_segment(rec, diag, u, v, t_x, t_y, cfg, t_now)
    if status != _STATUS_CONVERGED:
        raise ScheduleStalledError("initial", t_x, t_y)
    marks: list[tuple[str, int]] = [("initial", rec.last_index)]

    for phase in schedule.phases:
        tx_steps = (
            _geometric_targets(t_x, phase.target)
            if phase.which in (TempAxis.TX, TempAxis.BOTH)
            else []
        )
        ty_steps = (
            _geometric_targets(t_y, phase.target)
            if phase.which in (TempAxis.TY, TempAxis.BOTH)
            else []
        )
        n = max(len(tx_steps), len(ty_steps))
        for k in range(n):
            if tx_steps:
                t_x = tx_steps[min(k, len(tx_steps) - 1)]
            if ty_steps:
                t_y = ty_steps[min(k, len(ty_steps) - 1)]
            u, v, t_now, status, res = _run_segment(
                rec, diag, u, v, t_x, t_y, cfg, t_now, tracking=True
            )
            if status != _STATUS_CONVERGED:
                raise ScheduleStalledError(phase.label, t_x, t_y)
        marks.append((phase.label, rec.last_index))

    return _assemble(rec, diag, True, res, welfare_game, marks)


# ---------------------------------------------------------------------------
# discrete Q-learning cross-validator


@dataclass(frozen=True)
class DiscreteAgentConfig:
    """Two-agent Q-learning with Boltzmann selection and mean-field rewards.

    ``seed`` is recorded for interface stability; the expected-reward update
    is deterministic.  ``initial_q`` holds one 2-vector of action values per
    player (zeros when omitted, i.e. uniform initial strategies).
    """

    alpha: float = 0.01
    horizon: int = 5000
    seed: int = 0
    initial_q: Optional[tuple[np.ndarray, np.ndarray]] = None

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 0.1:
            raise ValueError("alpha must be in [0, 0.1] for the ODE-tracking regime")
        if self.horizon < 0:
            raise ValueError("horizon must be non-negative")


def q_from_expected_payoffs(
    game: PayoffMatrices, profile: StrategyProfile
) -> tuple[np.ndarray, np.ndarray]:
    """Initial action values equal to the expected payoffs at ``profile``.

    When the profile is a QRE at the simulation temperatures this is the
    discrete learner's exact rest point.
    """
    yv = np.array([profile.y, 1.0 - profile.y])
    xv = np.array([profile.x, 1.0 - profile.x])
    return game.A @ yv, game.B @ xv


def simulate_discrete_q(
    game: PayoffMatrices, temps: TemperaturePair, cfg: DiscreteAgentConfig
) -> Trajectory:
    """Iterate Q-value updates Q += alpha (r - Q) with Boltzmann strategies.

    Rewards are the expected payoffs against the opponent's current mixed
    strategy.  Row times are round * alpha / T_x, the rescaling under which
    the learner's strategy drift matches the continuous flow (exactly so for
    the row player; the column player's transient runs at T_x/T_y of the
    flow's speed, with identical rest points).
    """
    qx, qy = cfg.initial_q if cfg.initial_q is not None else (np.zeros(2), np.zeros(2))
    qx = np.asarray(qx, dtype=float).copy()
    qy = np.asarray(qy, dtype=float).copy()
    dt = cfg.alpha / temps.t_x if cfg.alpha > 0 else 1.0

    n = cfg.horizon + 1
    t = np.arange(n) * dt
    xs = np.empty(n)
    ys = np.empty(n)
    x = float(sigmoid((qx[0] - qx[1]) / temps.t_x))
    y = float(sigmoid((qy[0] - qy[1]) / temps.t_y))
    xs[0], ys[0] = x, y
    for k in range(1, n):
        rx = game.A @ np.array([y, 1.0 - y])
        ry = game.B @ np.array([x, 1.0 - x])
        qx += cfg.alpha * (rx - qx)
        qy += cfg.alpha * (ry - qy)
        x = float(sigmoid((qx[0] - qx[1]) / temps.t_x))
        y = float(sigmoid((qy[0] - qy[1]) / temps.t_y))
        xs[k], ys[k] = x, y

    xs = np.clip(xs, P_EPS, 1.0 - P_EPS)
    ys = np.clip(ys, P_EPS, 1.0 - P_EPS)
    A, B = game.A, game.B
    sw = (
        xs * ys * (A[0, 0] + B[0, 0])
        + xs * (1 - ys) * (A[0, 1] + B[1, 0])
        + (1 - xs) * ys * (A[1, 0] + B[0, 1])
        + (1 - xs) * (1 - ys) * (A[1, 1] + B[1, 1])
    )
    if n >= 2 and cfg.alpha > 0:
        residual = math.hypot(xs[-1] - xs[-2], ys[-1] - ys[-2]) / dt
    else:
        residual = 0.0
    return Trajectory(
        t=t, x=xs, y=ys,
        t_x=np.full(n, temps.t_x), t_y=np.full(n, temps.t_y),
        sw=sw, entropy=_entropy_arrays(xs, ys),
        converged=residual < 1e-9, final_residual=residual,
    )
