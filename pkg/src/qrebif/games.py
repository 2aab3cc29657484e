"""Game representation, rescaling to diagonal form, Nash enumeration, welfare.

Payoff conventions for a 2x2 bimatrix game: ``A[i][j]`` is player 1's payoff
when player 1 plays action i and player 2 plays action j; ``B[i][j]`` is
player 2's payoff when *player 2* plays action i and player 1 plays action j
(B's rows are the column player's own actions).

Social welfare is always evaluated on the original matrices.  The diagonal
rescaling preserves equilibria and dynamics but not welfare, so every welfare
number in this package refers back to the matrices the caller supplied.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import UndefinedRatioError


class StrategyProfile(NamedTuple):
    """Mixed profile: probability each player assigns to their first action."""

    x: float
    y: float


@dataclass(frozen=True)
class PayoffMatrices:
    """2x2 bimatrix game; entries must be finite."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        B = np.asarray(self.B, dtype=float)
        if A.shape != (2, 2) or B.shape != (2, 2):
            raise ValueError("payoff matrices must be 2x2")
        if not (np.isfinite(A).all() and np.isfinite(B).all()):
            raise ValueError("payoff entries must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @classmethod
    def from_lists(cls, A: Sequence[Sequence[float]], B: Sequence[Sequence[float]]) -> "PayoffMatrices":
        return cls(np.asarray(A, dtype=float), np.asarray(B, dtype=float))

    @classmethod
    def from_json(cls, text: str) -> "PayoffMatrices":
        obj = json.loads(text)
        if not isinstance(obj, dict) or "A" not in obj or "B" not in obj:
            raise ValueError('game JSON must be an object {"A": [[..]], "B": [[..]]}')
        return cls.from_lists(obj["A"], obj["B"])

    def to_json(self) -> str:
        return json.dumps({"A": self.A.tolist(), "B": self.B.tolist()})


@dataclass(frozen=True)
class Orientation:
    """Action relabelings applied during orientation normalization.

    ``swap_p1`` means player 1's action labels were exchanged (x -> 1-x),
    ``swap_p2`` the same for player 2.  Both maps are involutions.
    """

    swap_p1: bool = False
    swap_p2: bool = False

    def to_normalized(self, profile: StrategyProfile) -> StrategyProfile:
        x, y = profile
        return StrategyProfile(1.0 - x if self.swap_p1 else x, 1.0 - y if self.swap_p2 else y)

    # The relabeling is its own inverse.
    to_original = to_normalized

    @property
    def identity(self) -> bool:
        return not (self.swap_p1 or self.swap_p2)


@dataclass(frozen=True)
class DiagonalForm:
    """Payoff-difference reduction (a_X, b_X, a_Y, b_Y) plus the recorded swaps.

    After normalization a_X > 0 and |a_X| >= |b_X| whenever the game allows it
    (an all-constant game yields zeros and sets ``degenerate``).  All analytic
    formulas downstream assume this normalized labeling.
    """

    a_x: float
    b_x: float
    a_y: float
    b_y: float
    orientation: Orientation = Orientation()

    @property
    def degenerate(self) -> bool:
        """True when ln(a_X/b_X) is undefined or zero (a_X <= 0, b_X <= 0 or a_X == b_X)."""
        return self.a_x <= 0.0 or self.b_x <= 0.0 or self.a_x == self.b_x

    @property
    def doubly_degenerate(self) -> bool:
        """a_X == b_X and b_X == b_Y simultaneously; analysis unspecified there."""
        return self.a_x == self.b_x and self.b_x == self.b_y

    def as_matrices(self, original_labels: bool = False) -> PayoffMatrices:
        """Reconstruct the diagonal game as payoff matrices.

        With ``original_labels`` the recorded swaps are undone so the matrices
        line up with the caller's action labels.
        """
        A = np.array([[self.a_x, 0.0], [0.0, self.b_x]])
        B = np.array([[self.a_y, 0.0], [0.0, self.b_y]])
        if original_labels:
            if self.orientation.swap_p1:
                A = A[::-1, :]
                B = B[:, ::-1]
            if self.orientation.swap_p2:
                A = A[:, ::-1]
                B = B[::-1, :]
        return PayoffMatrices(A, B)


class GameClass(Enum):
    """Sign-table classification of the normalized diagonal form."""

    COORDINATION = "coordination"        # b_X >= 0, a_Y + b_Y > 0
    MIXED_PREFERENCE = "mixed_preference"  # b_X >= 0, a_Y + b_Y < 0
    ZERO_SUM2 = "zero_sum2"              # b_X >= 0, a_Y + b_Y == 0
    DOMINANT = "dominant"                # b_X < 0


def diagonal_form(game: PayoffMatrices) -> DiagonalForm:
    """Reduce to (a_X, b_X, a_Y, b_Y) and normalize orientation.

    a_X = a11-a21, b_X = a22-a12, a_Y = b11-b21, b_Y = b22-b12.  If
    |a_X| < |b_X| both players' labels are exchanged (which exchanges the two
    diagonal entries); if a_X < 0 afterwards, player 1's labels are exchanged,
    which maps (a_X, b_X, a_Y, b_Y) -> (-a_X, -b_X, -b_Y, -a_Y).  Ties
    |a_X| == |b_X| are left alone.
    """
    A, B = game.A, game.B
    a_x = A[0, 0] - A[1, 0]
    b_x = A[1, 1] - A[0, 1]
    a_y = B[0, 0] - B[1, 0]
    b_y = B[1, 1] - B[0, 1]
    swap_p1 = swap_p2 = False
    if abs(a_x) < abs(b_x):
        a_x, b_x = b_x, a_x
        a_y, b_y = b_y, a_y
        swap_p1 = not swap_p1
        swap_p2 = not swap_p2
    if a_x < 0.0:
        a_x, b_x = -a_x, -b_x
        a_y, b_y = -b_y, -a_y
        swap_p1 = not swap_p1
    return DiagonalForm(a_x, b_x, a_y, b_y, Orientation(swap_p1, swap_p2))


def social_welfare(game: PayoffMatrices, profile: StrategyProfile) -> float:
    """SW(x,y): expected sum of both players' payoffs on the original matrices."""
    x, y = profile
    A, B = game.A, game.B
    return (
        x * y * (A[0, 0] + B[0, 0])
        + x * (1 - y) * (A[0, 1] + B[1, 0])
        + (1 - x) * y * (A[1, 0] + B[0, 1])
        + (1 - x) * (1 - y) * (A[1, 1] + B[1, 1])
    )


_CORNERS = (
    StrategyProfile(1.0, 1.0),
    StrategyProfile(1.0, 0.0),
    StrategyProfile(0.0, 1.0),
    StrategyProfile(0.0, 0.0),
)


def pure_nash(game: PayoffMatrices) -> list[StrategyProfile]:
    """All corner profiles where neither player gains by unilateral deviation.

    Weak inequalities: payoff ties count as equilibria.
    """
    A, B = game.A, game.B
    out = []
    for profile in _CORNERS:
        i = 0 if profile.x == 1.0 else 1   # player 1's action index
        j = 0 if profile.y == 1.0 else 1   # player 2's action index
        if A[i, j] >= A[1 - i, j] and B[j, i] >= B[1 - j, i]:
            out.append(profile)
    return out


def mixed_nash(diag: DiagonalForm) -> Optional[StrategyProfile]:
    """Interior indifference point, in normalized coordinates, when it exists.

    (x*, y*) = (b_Y/(a_Y+b_Y), b_X/(a_X+b_X)) makes both players indifferent;
    it is a Nash equilibrium exactly when it lies in the open square.
    """
    sx = diag.a_x + diag.b_x
    sy = diag.a_y + diag.b_y
    if sx == 0.0 or sy == 0.0:
        return None
    x_star = diag.b_y / sy
    y_star = diag.b_x / sx
    if 0.0 < x_star < 1.0 and 0.0 < y_star < 1.0:
        return StrategyProfile(x_star, y_star)
    return None


def max_welfare(game: PayoffMatrices) -> tuple[StrategyProfile, float]:
    """Maximizer of SW over the square.

    SW is bilinear, so a corner attains the maximum; ties break toward
    lexicographically larger (x, y) for determinism.
    """
    best = _CORNERS[0]
    best_sw = social_welfare(game, best)
    for corner in _CORNERS[1:]:
        sw = social_welfare(game, corner)
        if sw > best_sw:
            best, best_sw = corner, sw
    return best, best_sw


def poa_pos(game: PayoffMatrices, equilibria: Sequence[StrategyProfile]) -> tuple[float, float]:
    """(price of anarchy, price of stability) against the given equilibrium set.

    Ratios are only meaningful with positive welfare throughout; a zero or
    negative denominator raises UndefinedRatioError.
    """
    if not equilibria:
        raise ValueError("equilibria set must be non-empty")
    _, opt = max_welfare(game)
    sws = [social_welfare(game, p) for p in equilibria]
    worst, best = min(sws), max(sws)
    if worst <= 0.0 or opt <= 0.0:
        raise UndefinedRatioError(
            f"welfare ratios undefined: optimum={opt:.6g}, worst equilibrium={worst:.6g}"
        )
    return opt / worst, opt / best


def classify(diag: DiagonalForm) -> GameClass:
    """Tag from the signs of b_X and a_Y + b_Y in the normalized diagonal form."""
    if diag.b_x < 0.0:
        return GameClass.DOMINANT
    s = diag.a_y + diag.b_y
    if s > 0.0:
        return GameClass.COORDINATION
    if s < 0.0:
        return GameClass.MIXED_PREFERENCE
    return GameClass.ZERO_SUM2


def is_strict_coordination(diag: DiagonalForm) -> bool:
    """All four diagonal values positive (the mechanism theorems' hypothesis)."""
    return diag.a_x > 0.0 and diag.b_x > 0.0 and diag.a_y > 0.0 and diag.b_y > 0.0
