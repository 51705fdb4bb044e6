"""Exact Neumann data mass of Dirichlet eigenfunctions on simplices.

Every L^2-normalised Dirichlet eigenfunction of the Laplacian on a simplex
``T`` in R^n carries semiclassical Neumann mass ``2 |G_j| / (n |T|)`` on face
``G_j``.  The package computes the prediction, checks it against closed-form
modes and P1 finite elements, and solves the associated inverse problems.
"""

from .errors import (
    DegenerateSimplex,
    DomainError,
    EpsilonTooLarge,
    IdenticallyZeroMode,
    InconsistentData,
    InvalidCoefficients,
    NoSuchTriangle,
    NumericalBreakdown,
    ResourceLimit,
    SimplexNeumannError,
)
from .geometry import (
    EllipticCoefficients,
    Face,
    Simplex,
    affine_maps,
    alcove_simplex,
    faces,
    predicted_neumann_mass,
    predicted_neumann_masses,
    standard_simplex,
    volume,
)

__version__ = "0.1.0"

__all__ = [
    "DegenerateSimplex",
    "DomainError",
    "EllipticCoefficients",
    "EpsilonTooLarge",
    "Face",
    "IdenticallyZeroMode",
    "InconsistentData",
    "InvalidCoefficients",
    "NoSuchTriangle",
    "NumericalBreakdown",
    "ResourceLimit",
    "Simplex",
    "SimplexNeumannError",
    "affine_maps",
    "alcove_simplex",
    "faces",
    "predicted_neumann_mass",
    "predicted_neumann_masses",
    "standard_simplex",
    "volume",
]
