"""Scattered-node RBF-FD solver for small-strain elasto-plasticity in 2D."""

from .assembly import ApproachConfig, Discretization, Problem
from .constitutive import Hardening, MaterialModel, MaterialState, return_map
from .geometry import NodeCloud, generate_nodes
from .solver import LoadProgram, SolveReport, run_load_program, solve_linear

__all__ = [
    "ApproachConfig", "Discretization", "Problem", "Hardening", "MaterialModel", "MaterialState",
    "return_map", "NodeCloud", "generate_nodes", "LoadProgram", "SolveReport",
    "run_load_program", "solve_linear",
]
__version__ = "0.1.0"
