"""SDE simulation in a global chart: manifold diffusions, Mirror Langevin, pair ensembles."""
from .rng import BLOCK, BlockNormals, block_generator, block_uniforms
from .sde import (
    PathEnsemble,
    SdeSpec,
    diffusion_root,
    ks_statistic,
    manifold_drift,
    mirror_langevin_simulate,
    mld_drift,
    mld_drift_consistency,
    moment_scaling,
    path_relative_entropy_rate,
    pushforward_pair,
    sample_measure,
    simulate,
    stationary_measure,
    stationary_pair,
)

__all__ = [
    "BLOCK", "BlockNormals", "PathEnsemble", "SdeSpec", "block_generator", "block_uniforms",
    "diffusion_root", "ks_statistic", "manifold_drift", "mirror_langevin_simulate", "mld_drift",
    "mld_drift_consistency", "moment_scaling", "path_relative_entropy_rate", "pushforward_pair",
    "sample_measure", "simulate", "stationary_measure", "stationary_pair",
]
