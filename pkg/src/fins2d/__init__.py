"""Pseudo-spectral simulator and verification harness for 2D fractional
inhomogeneous Navier-Stokes flow with rough and patch-type densities."""

from .grid import Grid2D, ScalarField, VectorField2, DEFAULT_BOX
from .spectral import (
    FractionalParams,
    dealias,
    fractional_laplacian,
    heat_semigroup,
    kernel_profile,
    leray_project,
    maximal_regularity_operator,
)

__all__ = [
    "Grid2D",
    "ScalarField",
    "VectorField2",
    "DEFAULT_BOX",
    "FractionalParams",
    "dealias",
    "fractional_laplacian",
    "heat_semigroup",
    "kernel_profile",
    "leray_project",
    "maximal_regularity_operator",
]

__version__ = "0.1.0"
