"""Staged space-time dual finite element solver for inviscid Burgers.

Two dual formulations are provided: the conservation form (dual field
``λ``) and the Hamilton-Jacobi form (dual fields ``λ, γ``, optionally with a
viscous term). Both march in time through overlapping space-time stages.
"""
from .burgers import BurgersBase, BurgersDualProblem, BurgersDualState, BurgersProblemData
from .circle_line import CircleLineProblem, solve_circle_line
from .exact import BenchmarkKind, exact_u, exact_Y, preset, viscous_u, viscous_Y
from .hj import HJBase, HJDualProblem, HJDualState, HJProblemData
from .marcher import StageConfig, Trajectory, march, run_stage
from .mesh import Mesh, build_mesh
from .newton import newton_solve

__all__ = [
    "BenchmarkKind", "BurgersBase", "BurgersDualProblem", "BurgersDualState", "BurgersProblemData",
    "CircleLineProblem", "HJBase", "HJDualProblem", "HJDualState", "HJProblemData", "Mesh", "StageConfig",
    "Trajectory", "build_mesh", "exact_Y", "exact_u", "march", "newton_solve", "preset", "run_stage",
    "solve_circle_line", "viscous_Y", "viscous_u",
]
__version__ = "0.1.0"
