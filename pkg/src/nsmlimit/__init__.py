"""Pseudo-spectral solver and Littlewood-Paley diagnostics for the two-fluid
incompressible Navier-Stokes-Maxwell system and its small-eps limit with a
solenoidal Ohm's law."""

__version__ = "0.1.0"

from .spectral import Grid, ScalarField, VectorField, build_grid  # noqa: E402
from .systems import LimitState, Params, PlasmaState, SpeciesState  # noqa: E402

__all__ = [
    "Grid",
    "ScalarField",
    "VectorField",
    "build_grid",
    "Params",
    "PlasmaState",
    "SpeciesState",
    "LimitState",
    "__version__",
]
