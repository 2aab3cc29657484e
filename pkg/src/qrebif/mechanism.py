"""Plan and execute temperature-control mechanisms; taxation view.

Two mechanism families for strict coordination games (all four diagonal
values positive):

* hysteresis (cases C1/D1/D2): when one pure equilibrium is socially optimal,
  a transient excursion of T_x above the critical temperature relocates the
  system onto the principal branch, after which cooling locks in the optimum;
* optimal control (cases A1-A4, B1-B4, plus the A3' fallback): when no pure
  equilibrium is optimal, a target on the boundary of the achievable set with
  welfare above every Nash equilibrium is stabilized by steering both
  temperatures to its first-form values.

Case ids follow the normalized diagonal labeling; all states in planner
inputs/outputs use the caller's original action labels.  Welfare is always
evaluated on the original matrices: the diagonal rescaling does not preserve
social optimality, so plans report their expected improvement honestly
instead of assuming it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .bifurcation import critical_temperature, is_qre_achievable, threshold_temps
from .dynamics import (
    IntegratorConfig,
    SchedulePhase,
    TempAxis,
    TemperatureSchedule,
    Trajectory,
    integrate_schedule,
)
from .errors import InfeasibleMechanismError, UnsupportedClassError
from .games import (
    DiagonalForm,
    PayoffMatrices,
    StrategyProfile,
    diagonal_form,
    is_strict_coordination,
    max_welfare,
    pure_nash,
    social_welfare,
)
from .numerics import T_MIN
from .qre import (
    Stability,
    TemperaturePair,
    first_form_temps,
    stability_from_jacobian,
)

DEFAULT_DELTA = 0.01
CRITICAL_MARGIN = 0.1  # raise targets sit 10% above the critical temperature


class MechanismKind(Enum):
    HYSTERESIS = "hysteresis"
    OPTIMAL_CONTROL = "optimal_control"


@dataclass(frozen=True)
class MechanismPlan:
    kind: MechanismKind
    case_id: str
    target_state: StrategyProfile       # original labels
    schedule: TemperatureSchedule
    expected_sw: float
    best_ne_sw: float

    @property
    def improves_expected(self) -> bool:
        return self.expected_sw > self.best_ne_sw


@dataclass
class ExecutionReport:
    final_state: StrategyProfile        # original labels
    final_sw: float
    improved: bool
    trajectory: Trajectory
    phase_endpoints: list[tuple[str, StrategyProfile]]


def _require_strict_coordination(diag: DiagonalForm) -> None:
    if not is_strict_coordination(diag):
        raise UnsupportedClassError(
            "mechanism planning requires a strict coordination game "
            "(all four diagonal values positive)"
        )


def _corner_analysis(game: PayoffMatrices, diag: DiagonalForm):
    """(SO corner, SO welfare, best-NE welfare, SO in normalized labels, best NE normalized)."""
    so, so_sw = max_welfare(game)
    pnes = pure_nash(game)
    pne_sws = [social_welfare(game, p) for p in pnes]
    best_idx = max(range(len(pnes)), key=lambda i: pne_sws[i])
    so_norm = diag.orientation.to_normalized(so)
    best_norm = diag.orientation.to_normalized(pnes[best_idx])
    return so, so_sw, pne_sws[best_idx], so_norm, best_norm, pne_sws


def _clamped_temps(diag: DiagonalForm, x: float, y: float) -> TemperaturePair:
    t_x, t_y = first_form_temps(diag, x, y)
    return TemperaturePair(max(t_x, T_MIN), max(t_y, T_MIN))


def plan_hysteresis(
    game: PayoffMatrices,
    initial_temps: Optional[TemperaturePair] = None,
) -> MechanismPlan:
    """Select the best pure equilibrium via a transient temperature excursion.

    Requires a strict coordination game with exactly one socially optimal
    pure equilibrium.  Infeasible when a_Y >= b_Y and the optimum is the
    normalized (0,0) corner: the principal branch then always lives on
    x > 1/2 and (0,0) cannot be approached from it.
    """
    diag = diagonal_form(game)
    _require_strict_coordination(diag)
    so, so_sw, best_ne_sw, so_norm, _, pne_sws = _corner_analysis(game, diag)
    if so_norm not in (StrategyProfile(0.0, 0.0), StrategyProfile(1.0, 1.0)):
        raise UnsupportedClassError(
            "no pure equilibrium is socially optimal; use plan_optimal_control"
        )
    if sum(1 for sw in pne_sws if sw >= so_sw - 1e-12) != 1:
        raise InfeasibleMechanismError(
            "both pure equilibria attain the optimal welfare; selection is moot"
        )
    th = threshold_temps(diag)
    t_i = th.t_i if th.t_i is not None else 0.0
    aims_high = so_norm == StrategyProfile(1.0, 1.0)

    if diag.a_y >= diag.b_y:
        if not aims_high:
            raise InfeasibleMechanismError(
                "with a_Y >= b_Y the principal branch stays on x > 1/2 at every "
                "temperature, so the (0,0) optimum cannot be selected by "
                "temperature control"
            )
        case = "C1"
        t_b = th.t_b if th.t_b is not None else 1.0
        hold_ty = initial_temps.t_y if initial_temps is not None else 0.5 * t_b
    elif aims_high:
        case = "D2"
        hold_ty = 1.5 * t_i
        if initial_temps is not None and initial_temps.t_y > t_i * (1.0 + CRITICAL_MARGIN):
            hold_ty = initial_temps.t_y
    else:
        case = "D1"
        hold_ty = 0.5 * t_i
        if initial_temps is not None and T_MIN <= initial_temps.t_y < t_i * (1.0 - CRITICAL_MARGIN):
            hold_ty = initial_temps.t_y
    hold_ty = max(hold_ty, T_MIN)

    initial = initial_temps if initial_temps is not None else TemperaturePair(0.01, hold_ty)
    t_c = critical_temperature(diag, hold_ty)
    raise_to = max((1.0 + CRITICAL_MARGIN) * t_c, initial.t_x, T_MIN)

    phases: list[SchedulePhase] = []
    if hold_ty != initial.t_y:
        phases.append(SchedulePhase(TempAxis.TY, hold_ty, "adjust-ty-hold"))
    phases.extend(
        [
            SchedulePhase(TempAxis.TX, raise_to, "raise-tx-above-critical"),
            SchedulePhase(TempAxis.TX, T_MIN, "lower-tx"),
            SchedulePhase(TempAxis.TY, T_MIN, "lower-ty"),
        ]
    )
    return MechanismPlan(
        kind=MechanismKind.HYSTERESIS,
        case_id=case,
        target_state=so,
        schedule=TemperatureSchedule(initial, phases),
        expected_sw=so_sw,
        best_ne_sw=best_ne_sw,
    )


def _stabilized_boundary_offset(
    diag: DiagonalForm,
    build,
    delta: float,
) -> tuple[float, float, TemperaturePair]:
    """Shrink the boundary-adjacent offset until the target is stable.

    ``build(db)`` maps the boundary offset to the candidate (x, y).  The
    theorem guarantees stability for *some* small offsets; the equal-offset
    starting point can land past the fold, in which case shrinking the
    boundary offset restores det J > 0.
    """
    db = delta
    for _ in range(9):
        x, y = build(db)
        temps = _clamped_temps(diag, x, y)
        label = stability_from_jacobian(diag, StrategyProfile(x, y), temps)
        if label is Stability.STABLE:
            break
        db *= 0.25
    return x, y, temps


def plan_optimal_control(
    game: PayoffMatrices,
    initial_temps: Optional[TemperaturePair] = None,
    delta: float = DEFAULT_DELTA,
    on_principal_branch: bool = False,
) -> MechanismPlan:
    """Stabilize a QRE-achievable state better than every Nash equilibrium.

    Requires a strict coordination game whose social optimum is an
    off-diagonal corner (no pure equilibrium is optimal).  The target comes
    from the case table; it is nudged into the open achievable region by
    ``delta`` (boundary-adjacent component shrunk as needed for stability)
    and the schedule steers the temperatures to the first-form values of the
    nudged point in the order the case requires.

    ``on_principal_branch`` selects the A3' fallback for A3/A4 games whose
    state does not start near the (0,0) equilibrium: it stabilizes the
    normalized (0.5, 1) state instead, improving on the initial state though
    not necessarily on the best equilibrium.
    """
    diag = diagonal_form(game)
    _require_strict_coordination(diag)
    so, so_sw, best_ne_sw, so_norm, best_norm, _ = _corner_analysis(game, diag)
    if so_norm in (StrategyProfile(0.0, 0.0), StrategyProfile(1.0, 1.0)):
        raise UnsupportedClassError(
            "a pure equilibrium is already socially optimal; use plan_hysteresis"
        )
    r_x = diag.b_x / (diag.a_x + diag.b_x)
    r_y = diag.b_y / (diag.a_y + diag.b_y)
    family_a = diag.a_y >= diag.b_y
    best_high = best_norm == StrategyProfile(1.0, 1.0)
    so_is_01 = so_norm == StrategyProfile(0.0, 1.0)

    if family_a:
        case = {(True, True): "A1", (True, False): "A2", (False, True): "A3", (False, False): "A4"}[
            (best_high, so_is_01)
        ]
    else:
        case = {(True, True): "B1", (True, False): "B2", (False, True): "B3", (False, False): "B4"}[
            (best_high, so_is_01)
        ]
    if on_principal_branch and case in ("A3", "A4"):
        case = "A3prime"

    d = delta
    phases: list[SchedulePhase] = []
    initial = initial_temps

    if case in ("A1", "A3prime"):
        target_norm = (0.5, 1.0)
        x, y, temps = _stabilized_boundary_offset(
            diag, lambda db: (0.5 + d, 1.0 - db), d
        )
        phases = [
            SchedulePhase(TempAxis.TX, temps.t_x, "move-tx"),
            SchedulePhase(TempAxis.TY, temps.t_y, "move-ty"),
        ]
    elif case in ("A2", "B2"):
        target_norm = (1.0, 0.5)
        dx = min(d, (1.0 - r_y) / 2.0) if r_y > 0.5 else d
        x, y, temps = _stabilized_boundary_offset(
            diag, lambda db: (1.0 - min(db, dx), 0.5 + d), d
        )
        phases = [
            SchedulePhase(TempAxis.TY, temps.t_y, "move-ty"),
            SchedulePhase(TempAxis.TX, temps.t_x, "move-tx"),
        ]
    elif case in ("A3", "B3"):
        target_norm = (0.0, r_x)
        dy = min(d, r_x / 2.0)
        x, y, temps = _stabilized_boundary_offset(
            diag, lambda db: (db, r_x - dy), d
        )
        phases = [
            SchedulePhase(TempAxis.TX, temps.t_x, "move-tx"),
            SchedulePhase(TempAxis.TY, temps.t_y, "move-ty"),
        ]
        if case == "A3" and initial is None:
            initial = _clamped_temps(diag, d, d)
        if case == "B3":
            th = threshold_temps(diag)
            hold_ty = max(0.5 * (th.t_i or 0.0), T_MIN)
            t_c = critical_temperature(diag, hold_ty)
            phases = [
                SchedulePhase(TempAxis.TY, hold_ty, "hold-ty-below-inverting"),
                SchedulePhase(
                    TempAxis.TX,
                    max((1.0 + CRITICAL_MARGIN) * t_c, T_MIN),
                    "raise-tx-above-critical",
                ),
                SchedulePhase(TempAxis.TX, temps.t_x, "move-tx"),
                SchedulePhase(TempAxis.TY, temps.t_y, "move-ty"),
            ]
    elif case == "A4":
        target_norm = (r_y, 0.0)
        dx = min(d, r_y / 2.0)
        x, y, temps = _stabilized_boundary_offset(
            diag, lambda db: (r_y - dx, db), d
        )
        phases = [
            SchedulePhase(TempAxis.TY, temps.t_y, "move-ty"),
            SchedulePhase(TempAxis.TX, temps.t_x, "move-tx"),
        ]
        if initial is None:
            initial = _clamped_temps(diag, d, d)
    elif case == "B1":
        target_norm = (r_y, 1.0)
        dx = min(d, (1.0 - r_y) / 2.0)
        x, y, temps = _stabilized_boundary_offset(
            diag, lambda db: (r_y + dx, 1.0 - db), d
        )
        phases = [
            SchedulePhase(TempAxis.TX, temps.t_x, "move-tx"),
            SchedulePhase(TempAxis.TY, temps.t_y, "move-ty"),
        ]
    else:  # B4
        target_norm = (0.5, 0.0)
        x, y, temps = _stabilized_boundary_offset(
            diag, lambda db: (0.5 - d, db), d
        )
        phases = [
            SchedulePhase(TempAxis.TX, temps.t_x, "move-tx"),
            SchedulePhase(TempAxis.TY, temps.t_y, "move-ty"),
        ]

    if not is_qre_achievable(diag, target_norm[0], target_norm[1]):
        raise InfeasibleMechanismError(
            f"case {case} target {target_norm} is not a QRE-achievable state"
        )
    if initial is None:
        initial = TemperaturePair(0.01, 0.01)

    target = diag.orientation.to_original(StrategyProfile(*target_norm))
    expected_sw = social_welfare(game, target)
    return MechanismPlan(
        kind=MechanismKind.OPTIMAL_CONTROL,
        case_id=case,
        target_state=target,
        schedule=TemperatureSchedule(initial, phases),
        expected_sw=expected_sw,
        best_ne_sw=best_ne_sw,
    )


def execute(
    plan: MechanismPlan,
    game: PayoffMatrices,
    init: StrategyProfile,
    cfg: IntegratorConfig = IntegratorConfig(),
) -> ExecutionReport:
    """Run the plan quasi-statically from ``init`` and score the outcome.

    The improved flag compares the final welfare (original matrices) to the
    best pure-equilibrium welfare recorded in the plan.
    """
    diag = diagonal_form(game)
    traj = integrate_schedule(diag, init, plan.schedule, cfg, welfare_game=game)
    final = traj.final_state
    final_sw = float(social_welfare(game, final))
    endpoints = [
        (label, StrategyProfile(float(traj.x[i]), float(traj.y[i])))
        for label, i in traj.phase_marks
    ]
    return ExecutionReport(
        final_state=final,
        final_sw=final_sw,
        improved=bool(final_sw > plan.best_ne_sw - 1e-9),
        trajectory=traj,
        phase_endpoints=endpoints,
    )


def taxation_view(
    schedule: TemperatureSchedule, base_temp: float
) -> list[tuple[str, float, float]]:
    """Per-phase flat tax rates alpha = 1 - T0/T implied by the schedule.

    Requires every temperature along the schedule (initial included) to be at
    least the base temperature; cooling below it would mean a subsidy, which
    is out of scope.
    """
    if base_temp <= 0.0:
        raise ValueError("base temperature must be positive")
    if schedule.initial.t_x < base_temp or schedule.initial.t_y < base_temp:
        raise ValueError("initial temperatures below the base temperature")
    out = []
    for k, phase in enumerate(schedule.phases):
        temps = schedule.temps_after(k + 1)
        if temps.t_x < base_temp or temps.t_y < base_temp:
            raise ValueError(
                f"phase {phase.label!r} cools below the base temperature "
                f"{base_temp:.6g}: tax rate would be negative (subsidy out of scope)"
            )
        out.append((phase.label, 1.0 - base_temp / temps.t_x, 1.0 - base_temp / temps.t_y))
    return out


# ---------------------------------------------------------------------------
# plan (de)serialization


def plan_to_dict(plan: MechanismPlan) -> dict:
    return {
        "kind": plan.kind.value,
        "case_id": plan.case_id,
        "target_state": [plan.target_state.x, plan.target_state.y],
        "expected_sw": plan.expected_sw,
        "best_ne_sw": plan.best_ne_sw,
        "schedule": {
            "initial": [plan.schedule.initial.t_x, plan.schedule.initial.t_y],
            "phases": [
                {"which": ph.which.value, "target": ph.target, "label": ph.label}
                for ph in plan.schedule.phases
            ],
        },
    }


def plan_from_dict(obj: dict) -> MechanismPlan:
    sched = obj["schedule"]
    schedule = TemperatureSchedule(
        TemperaturePair(*sched["initial"]),
        [
            SchedulePhase(TempAxis(ph["which"]), float(ph["target"]), str(ph["label"]))
            for ph in sched["phases"]
        ],
    )
    return MechanismPlan(
        kind=MechanismKind(obj["kind"]),
        case_id=str(obj["case_id"]),
        target_state=StrategyProfile(*(float(v) for v in obj["target_state"])),
        schedule=schedule,
        expected_sw=float(obj["expected_sw"]),
        best_ne_sw=float(obj["best_ne_sw"]),
    )


def plan_to_json(plan: MechanismPlan) -> str:
    return json.dumps(plan_to_dict(plan), indent=2)


def plan_from_json(text: str) -> MechanismPlan:
    return plan_from_dict(json.loads(text))
