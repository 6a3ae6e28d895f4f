"""Numerical laboratory for the logarithmic Schrodinger equation: split-step
solvers, exact Gaussian dynamics, dispersion rescaling, Gaussons, the
isothermal fluid counterpart, and a scenario runner."""

from .grid import Density, Field, Grid
from .gaussian import GaussianState, TauScaler, evolve_width, solve_tau
from .solver import NlsProblem, evolve

__all__ = ["Density", "Field", "Grid", "GaussianState", "TauScaler", "evolve_width",
           "solve_tau", "NlsProblem", "evolve"]
__version__ = "0.1.0"
