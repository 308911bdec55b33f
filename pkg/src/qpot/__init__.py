"""qpot: a numerical laboratory for the quantum potential read as a heat field.

The package evolves wavefunctions (analytic free Gaussians and a
Crank-Nicolson solver), computes the quantum potential in its amplitude,
density, velocity and heat-field renderings, checks the reductions to the
classical heat equation and to the Helmholtz-type pseudo-wave equation of
diffusion-wave fields, reproduces the particle-in-a-box closed forms, and
integrates Bohmian trajectory ensembles with accumulation/depletion-zone
("stripe") detection.
"""

__version__ = "0.1.0"

from .constants import PhysicalConstants
from .fields import ComplexField, FieldStack, Grid, RealField

__all__ = [
    "PhysicalConstants",
    "Grid",
    "RealField",
    "ComplexField",
    "FieldStack",
    "__version__",
]
