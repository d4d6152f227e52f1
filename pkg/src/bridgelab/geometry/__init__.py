"""Hessian-manifold geometry: metric, duality, geodesics and divergences."""
from .chart import Geodesic, HessianChart
from .potentials import (
    SHIPPED,
    ConvexPotential,
    affine,
    aniso2d,
    check_potential,
    fd_hess,
    fd_third,
    flat,
    get_potential,
    quartic1d,
    register_potential,
)


def make_chart(spec, **kwargs) -> HessianChart:
    """Chart for a registered potential name or config mapping."""
    return HessianChart(get_potential(spec), **kwargs)


__all__ = [
    "ConvexPotential", "Geodesic", "HessianChart", "SHIPPED", "affine", "aniso2d",
    "check_potential", "fd_hess", "fd_third", "flat", "get_potential", "make_chart",
    "quartic1d", "register_potential",
]
