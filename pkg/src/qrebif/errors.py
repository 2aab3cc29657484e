"""Exception types raised across the toolkit."""


class QrebifError(Exception):
    """Base class for all toolkit errors."""


class SingularityError(QrebifError):
    """A representation formula was evaluated at its singular point (x or y = 1/2)."""


class UndefinedRatioError(QrebifError):
    """Efficiency ratio requested with a non-positive welfare denominator."""


class UnsupportedClassError(QrebifError):
    """Operation is only defined for a different game class."""


class InfeasibleMechanismError(QrebifError):
    """The requested mechanism provably cannot reach its target for this game."""


class ScheduleStalledError(QrebifError):
    """A quasi-static schedule increment failed to converge within the time budget."""

    def __init__(self, phase_label: str, t_x: float, t_y: float):
        self.phase_label = phase_label
        self.t_x = t_x
        self.t_y = t_y
        super().__init__(
            f"schedule stalled in phase {phase_label!r} at temperatures "
            f"(T_x={t_x:.6g}, T_y={t_y:.6g})"
        )


class IntegrationDivergedError(QrebifError):
    """Integrator produced a non-finite state; indicates a bug or an unstable step size."""


class InternalConsistencyError(QrebifError):
    """A structural guarantee failed numerically (e.g. no equilibrium found)."""
