"""Grid measures, potentials and information functionals."""
from .functionals import (
    fisher_information,
    ibp_identity_residual,
    lebesgue_entropy,
    reciprocal_characteristic,
    relative_entropy,
)
from .grid import Grid, GridMeasure, NodeSet, Potential, PotentialField, density_potential
from .transport1d import (
    McCann1D,
    SmoothCdf,
    brenier_fisher_integral_1d,
    integrated_fisher_mccann_1d,
    mccann_interpolation_1d,
    monotone_map,
    w2_1d,
)

__all__ = [
    "Grid", "GridMeasure", "McCann1D", "NodeSet", "SmoothCdf", "Potential", "PotentialField",
    "brenier_fisher_integral_1d", "density_potential", "fisher_information",
    "ibp_identity_residual", "integrated_fisher_mccann_1d", "lebesgue_entropy",
    "mccann_interpolation_1d", "monotone_map", "reciprocal_characteristic",
    "relative_entropy", "w2_1d",
]
