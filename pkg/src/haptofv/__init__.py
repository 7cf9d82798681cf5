"""Finite-volume IMEX simulation of a degenerate haptotaxis go-or-grow tumor model."""
from .grid import EdgeRef, Grid, build_grid, neighbors
from .model import ModelParams, State, TaxisVariant
from .integrate import TimeStepConfig, imex_step, rk4_reaction_step, run_simulation
from .initial import InitialConditionSpec, generate_initial_state
from .kernels import BACKEND

__all__ = [
    "BACKEND", "EdgeRef", "Grid", "InitialConditionSpec", "ModelParams", "State",
    "TaxisVariant", "TimeStepConfig", "build_grid", "generate_initial_state", "imex_step",
    "neighbors", "rk4_reaction_step", "run_simulation",
]
