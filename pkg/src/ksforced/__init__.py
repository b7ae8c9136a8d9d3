"""Solver and verification harness for the forced Keller-Segel system on rectangles."""

from .grid import Grid2D, ScalarField, integrate, lp_norm, w1p_norm, w1p_seminorm
from .kernels import BACKEND
from .solver import ForcingSpec, Modulation, SolverConfig, State, Trajectory, run, step

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ForcingSpec",
    "Grid2D",
    "Modulation",
    "ScalarField",
    "SolverConfig",
    "State",
    "Trajectory",
    "integrate",
    "lp_norm",
    "run",
    "step",
    "w1p_norm",
    "w1p_seminorm",
]
