"""Bifurcation analysis and temperature-control mechanism design for 2x2
games under Boltzmann Q-learning dynamics."""

__version__ = "0.1.0"

from .bifurcation import (
    AchievableRegion,
    BifurcationDiagram,
    BoundaryPoints,
    BranchCurve,
    Side,
    ThresholdTemps,
    achievable_region,
    boundary_points,
    critical_temperature,
    is_qre_achievable,
    threshold_temps,
    trace_diagram,
)
from .dynamics import (
    DiscreteAgentConfig,
    IntegratorConfig,
    SchedulePhase,
    TempAxis,
    TemperatureSchedule,
    Trajectory,
    entropy,
    integrate,
    integrate_schedule,
    logit_field,
    q_from_expected_payoffs,
    simulate_discrete_q,
    vector_field,
)
from .errors import (
    InfeasibleMechanismError,
    IntegrationDivergedError,
    InternalConsistencyError,
    QrebifError,
    ScheduleStalledError,
    SingularityError,
    UndefinedRatioError,
    UnsupportedClassError,
)
from .games import (
    DiagonalForm,
    GameClass,
    Orientation,
    PayoffMatrices,
    StrategyProfile,
    classify,
    diagonal_form,
    is_strict_coordination,
    max_welfare,
    mixed_nash,
    poa_pos,
    pure_nash,
    social_welfare,
)
from .mechanism import (
    ExecutionReport,
    MechanismKind,
    MechanismPlan,
    execute,
    plan_from_json,
    plan_hysteresis,
    plan_optimal_control,
    plan_to_json,
    taxation_view,
)
from .qre import (
    QrePoint,
    SecondFormSample,
    Stability,
    TemperaturePair,
    enumerate_qre,
    first_form_temps,
    jacobian_eigen_realparts,
    qre_response,
    second_form,
    stability,
    stability_from_jacobian,
)
