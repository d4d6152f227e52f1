"""Entropic bridges, diffusions and Hessian-manifold geometry on grids.

Subpackages
-----------
geometry
    Convex potentials and the Hessian chart (metric, duality, geodesics).
measures
    Grid measures, potentials, Fisher information and 1D transport oracles.
dynamics
    Seeded Euler-Maruyama simulation of manifold and Mirror Langevin diffusions.
bridge
    Reference kernels, stabilized Sinkhorn and bridge-derived quantities.
harness
    Named experiments, rate fits and the ``bridgelab`` command line.
"""
from .errors import (
    BridgelabError,
    ConvergenceError,
    DomainError,
    Infinite,
    NumericError,
    ShapeError,
    UsageError,
)

__version__ = "0.1.0"

__all__ = [
    "BridgelabError", "ConvergenceError", "DomainError", "Infinite", "NumericError", "ShapeError",
    "UsageError", "__version__",
]
