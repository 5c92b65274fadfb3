"""Gridded environments and harmonic potential solvers."""

from .descent import BLOCKED, MAX_STEPS, REACHED, STALLED, DescentPath, descend, descend_many
from .grid import (
    FREE,
    OBSTACLE,
    START,
    TARGET,
    GridEnvironment,
    GridEnvironmentError,
    box_environment,
    strip_environment,
)
from .potential import ANISOTROPIC, LAPLACE, WEIGHTED, PotentialField, QueryError, gradient_at, gradients_at
from .solvers import (
    ConvergenceError,
    SolverParams,
    solve,
    solve_anisotropic,
    solve_laplace,
    solve_weighted,
)

__all__ = [
    "ANISOTROPIC", "BLOCKED", "FREE", "LAPLACE", "MAX_STEPS", "OBSTACLE", "REACHED", "STALLED",
    "START", "TARGET", "WEIGHTED", "ConvergenceError", "DescentPath", "GridEnvironment",
    "GridEnvironmentError", "PotentialField", "QueryError", "SolverParams", "box_environment",
    "descend", "descend_many", "gradient_at", "gradients_at", "solve", "solve_anisotropic", "solve_laplace", "solve_weighted",
    "strip_environment",
]
