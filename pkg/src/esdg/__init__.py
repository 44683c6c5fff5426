"""Entropy-stable modal DG solver for the 2D compressible Navier-Stokes
equations on straight-sided triangular meshes."""

from .physics import GasParams
from .refops import build_operators
from .discretization import SemiDiscretization
from .boundary import BoundarySpec

__all__ = ["GasParams", "build_operators", "SemiDiscretization", "BoundarySpec"]
__version__ = "0.1.0"
