"""Discontinuous Petrov-Galerkin solver for 2D linear elasticity in ultra-weak form."""
from .adaptivity import afem_loop, doerfler_mark
from .dpg import assemble, residual_estimate, solve, solve_problem
from .layout import build_layout
from .material import (LameParams, Problem, compliance_apply, get_problem, lame_from_E_nu,
                       problem_locking_square, problem_lshape, problem_smooth_square,
                       stiffness_apply)
from .mesh import Mesh, bisect, h_max, l_shape_mesh, uniform_refine, unit_square_mesh
from .postprocess import postprocess, rm_project
from .study import run_convergence, run_locking, run_lshape

__version__ = "0.1.0"

__all__ = [
    "LameParams", "Mesh", "Problem", "afem_loop", "assemble", "bisect", "build_layout",
    "compliance_apply", "doerfler_mark", "get_problem", "h_max", "l_shape_mesh",
    "lame_from_E_nu", "postprocess", "problem_locking_square", "problem_lshape",
    "problem_smooth_square", "residual_estimate", "rm_project", "run_convergence",
    "run_locking", "run_lshape", "solve", "solve_problem", "stiffness_apply",
    "uniform_refine", "unit_square_mesh",
]
