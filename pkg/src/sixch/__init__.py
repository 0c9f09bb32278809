"""Spectral simulation engine for a sixth-order conserved phase-field flow
with logarithmic potential, plus the diagnostics that check its structural
properties (mass conservation, energy dissipation, separation, continuous
dependence)."""

__version__ = "0.1.0"

from .grid import Grid, ScalarField
from .model import MuFormulation, dispersion_sigma, energy, mu, omega
from .potential import Nonlinearity, PotentialParams, TruncationLevel
from .stepper import SolverConfig, advance, step_imex, step_implicit

__all__ = [
    "Grid", "ScalarField", "MuFormulation", "dispersion_sigma", "energy", "mu",
    "omega", "Nonlinearity", "PotentialParams", "TruncationLevel", "SolverConfig",
    "advance", "step_imex", "step_implicit", "__version__",
]
