"""Shared games and random samplers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from qrebif.games import DiagonalForm, PayoffMatrices

# Coordination game with payoff-dominant corner (1,1) and a second pure
# equilibrium at (0,0); its diagonal form is (10, 5, 2, 4).
COORD_A = [[10.0, 0.0], [0.0, 5.0]]
COORD_B = [[2.0, 0.0], [0.0, 4.0]]


def coord_game() -> PayoffMatrices:
    return PayoffMatrices.from_lists(COORD_A, COORD_B)


def eps_coord_game(eps: float = 0.1, eps2: float = 0.05) -> PayoffMatrices:
    """Coordination game whose social optimum is the off-equilibrium corner
    (1,0); diagonal form (eps, eps2, eps, eps2)."""
    A = [[eps, 1.0], [0.0, 1.0 + eps2]]
    B = [[1.0 + eps, 0.0], [1.0, eps2]]
    return PayoffMatrices.from_lists(A, B)


def zero_game() -> PayoffMatrices:
    return PayoffMatrices.from_lists([[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]])


@pytest.fixture
def coord():
    return coord_game()


@pytest.fixture
def coord_diag():
    from qrebif.games import diagonal_form

    return diagonal_form(coord_game())


@pytest.fixture
def eps_coord():
    return eps_coord_game()


# ---------------------------------------------------------------------------
# random samplers (seeded by callers for reproducibility)


def random_game(rng: np.random.Generator, scale: float = 5.0) -> PayoffMatrices:
    return PayoffMatrices(
        rng.uniform(-scale, scale, (2, 2)), rng.uniform(-scale, scale, (2, 2))
    )


def random_coordination_diag(
    rng: np.random.Generator, require_by_gt_ay: bool | None = None
) -> DiagonalForm:
    """Strict coordination diagonal (all positive, a_X >= b_X), as a normalized form."""
    a_x = rng.uniform(1.0, 8.0)
    b_x = rng.uniform(0.2, a_x)
    while True:
        a_y = rng.uniform(0.2, 8.0)
        b_y = rng.uniform(0.2, 8.0)
        if require_by_gt_ay is None:
            break
        if require_by_gt_ay and b_y > a_y * 1.05:
            break
        if require_by_gt_ay is False and a_y >= b_y:
            break
    return DiagonalForm(a_x, b_x, a_y, b_y)


def diag_as_game(diag: DiagonalForm) -> PayoffMatrices:
    """The diagonal payoff matrices themselves, as a playable game."""
    return PayoffMatrices.from_lists(
        [[diag.a_x, 0.0], [0.0, diag.b_x]], [[diag.a_y, 0.0], [0.0, diag.b_y]]
    )


def random_mixed_preference_diag(rng: np.random.Generator) -> DiagonalForm:
    """Case b_X > 0, a_Y + b_Y < 0 (players prefer opposite outcomes)."""
    a_x = rng.uniform(1.0, 8.0)
    b_x = rng.uniform(0.2, a_x)
    while True:
        a_y = rng.uniform(-6.0, 6.0)
        b_y = rng.uniform(-6.0, 6.0)
        if a_y + b_y < -0.1:
            return DiagonalForm(a_x, b_x, a_y, b_y)


def random_dominant_diag(rng: np.random.Generator) -> DiagonalForm:
    """Case b_X < 0 with a_X + b_X > 0 (first action dominant for player 1)."""
    a_x = rng.uniform(1.0, 8.0)
    b_x = -rng.uniform(0.1, 0.9) * a_x
    a_y = rng.uniform(-6.0, 6.0)
    b_y = rng.uniform(-6.0, 6.0)
    return DiagonalForm(a_x, b_x, a_y, b_y)


# Mechanism-case construction games (original-label welfare chosen per case).
A1_GAME = ([[6, 0], [4, 1]], [[2, 5], [0, 6]])    # best NE (1,1), optimum (0,1)
A3_GAME = ([[5, 0], [3, 1]], [[2, 6], [0, 7]])    # best NE (0,0), optimum (0,1)
A4_GAME = ([[2, 6], [0, 7]], [[5, 0], [3, 1]])    # best NE (0,0), optimum (1,0)
B1_GAME = ([[7, 0], [5, 1]], [[1, 4], [0, 6]])    # a_Y < b_Y, best NE (1,1), optimum (0,1)
B2_GAME = ([[2, 4], [0, 5]], [[6, 0], [5, 2]])    # a_Y < b_Y, best NE (1,1), optimum (1,0)
B3_GAME = ([[6, 0], [4, 1]], [[1, 5], [0, 7]])    # a_Y < b_Y, best NE (0,0), optimum (0,1)
B4_GAME = ([[2, 5], [0, 6]], [[5, 0], [4, 2]])    # a_Y < b_Y, best NE (0,0), optimum (1,0)
C1_GAME = ([[10, 0], [0, 5]], [[4, 0], [0, 2]])   # a_Y >= b_Y, optimum at PNE (1,1)
D1_GAME = ([[10, 10], [0, 15]], [[2, 0], [0, 4]])  # a_Y < b_Y, optimum at PNE (0,0)
INFEASIBLE_GAME = ([[10, 10], [0, 15]], [[4, 0], [0, 2]])  # a_Y >= b_Y, optimum (0,0)


def game_of(pair) -> PayoffMatrices:
    return PayoffMatrices.from_lists(*pair)
