"""Reference kernels, Sinkhorn bridges and bridge-derived quantities."""
from .kernels import (
    HeatSemigroup,
    KernelMatrix,
    const_metric_kernel,
    gaussian_kernel,
    heat_kernel_1d,
    heat_semigroup,
    pushforward_kernel,
    varadhan_expansion,
)
from .quantities import (
    ConditionalField,
    GridDiffusion,
    barycentric_projection,
    conditional_generator,
    coupling_relative_entropy,
    diffusion_coupling_grid,
    entropic_cost,
    entropic_interpolation,
    schrodinger_score,
)
from .sinkhorn import SinkhornSolution, sinkhorn
from .spectral import SpectralGenerator, staggered_derivative

__all__ = [
    "ConditionalField", "GridDiffusion", "HeatSemigroup", "KernelMatrix", "SinkhornSolution",
    "SpectralGenerator", "barycentric_projection", "conditional_generator", "const_metric_kernel",
    "coupling_relative_entropy", "diffusion_coupling_grid", "entropic_cost",
    "entropic_interpolation", "gaussian_kernel", "heat_kernel_1d", "heat_semigroup",
    "pushforward_kernel", "schrodinger_score", "sinkhorn", "staggered_derivative",
    "varadhan_expansion",
]
