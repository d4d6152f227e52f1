"""Quantities derived from Schrodinger bridges and grid diffusion couplings."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import DomainError, Infinite, ShapeError
from ..geometry import HessianChart
from ..measures import Grid, GridMeasure, PotentialField
from .kernels import KernelMatrix, heat_semigroup
from .sinkhorn import SinkhornSolution
from .spectral import SpectralGenerator

# rows with less conditional mass are excluded from conditional averages
ROW_MASS_FLOOR = 1e-14


def entropic_cost(sol: SinkhornSolution, kernel: KernelMatrix | None = None,
                  mu_ref: GridMeasure | np.ndarray | None = None) -> float:
    """H(pi | reference coupling) by quadrature.

    The reference is the kernel's m(dx) r(x, dz), or mu(dx) r(x, dz) when
    ``mu_ref`` is given.
    """
    kernel = sol.kernel if kernel is None else kernel
    if mu_ref is None:
        log_ref = kernel.log_measure()
    else:
        m = np.asarray(getattr(mu_ref, "mass", mu_ref), float).reshape(-1)
        with np.errstate(divide="ignore"):
            log_ref = np.log(m)[:, None] + kernel.log_values + np.log(kernel.grid_z.weights)[None, :]
    pi = sol.coupling
    pos = pi > 0
    if np.any(~np.isfinite(log_ref[pos])):
        return Infinite("coupling charges pairs outside the reference support")
    return float(np.sum(pi[pos] * (np.log(pi[pos]) - log_ref[pos])))


def coupling_relative_entropy(p: np.ndarray, q: np.ndarray, symmetric: bool = False,
                              floor: float | None = None) -> float:
    """Sum of p log(p / q) over node pairs (plus the reverse term when ``symmetric``).

    ``floor`` is a relative resolution: both couplings are raised to at least
    ``floor`` times the larger maximum before comparison, so pairs that neither
    discretization resolves do not contribute round-off noise.
    """
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    if p.shape != q.shape:
        raise ShapeError(f"coupling shapes differ: {p.shape} vs {q.shape}")
    if floor is not None:
        f = floor * max(p.max(), q.max())
        p, q = np.maximum(p, f), np.maximum(q, f)
    if symmetric:
        return _kl(p, q) + _kl(q, p)
    return _kl(p, q)


def _kl(p: np.ndarray, q: np.ndarray) -> float:
    pos = p > 0
    if np.any(q[pos] <= 0):
        return Infinite("support of p escapes q")
    return float(np.sum(p[pos] * (np.log(p[pos]) - np.log(q[pos]))))


def _grid_of(sol: SinkhornSolution) -> Grid:
    pts = sol.kernel.grid_x.points
    axes = []
    for k in range(pts.shape[1]):
        axes.append(np.unique(pts[:, k]))
    grid = Grid(tuple(axes))
    if grid.size != pts.shape[0] or not np.array_equal(grid.points, pts):
        raise ShapeError("row nodes are not a rectangular grid")
    return grid


def _gradient(values: np.ndarray, grid: Grid) -> np.ndarray:
    v = values.reshape(grid.shape)
    return np.stack([np.gradient(v, h, axis=k, edge_order=2).ravel()
                     for k, h in enumerate(grid.spacing)], axis=-1)


def schrodinger_score(sol: SinkhornSolution, chart: HessianChart) -> np.ndarray:
    """grad_g log a at the row nodes, shape ``(n, d)``."""
    grid = _grid_of(sol)
    la = sol.log_a
    if not np.all(np.isfinite(la)):
        raise DomainError("score needs a potential that is finite on every node")
    grad = _gradient(la, grid)
    return np.einsum("nij,nj->ni", chart.cometric(grid.points), grad)


@dataclass(frozen=True)
class ConditionalField:
    """Node-indexed field with a mask of rows that carry enough mass."""

    values: np.ndarray
    valid: np.ndarray


def _conditional_mean(sol: SinkhornSolution, col_values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pi = sol.coupling
    rows = pi.sum(axis=1)
    valid = rows >= ROW_MASS_FLOOR
    safe = np.where(valid, rows, 1.0)
    mean = (pi @ col_values) / (safe if col_values.ndim == 1 else safe[:, None])
    return mean, valid


def barycentric_projection(sol: SinkhornSolution, chart: HessianChart | None = None) -> ConditionalField:
    """(E_pi[Z | X = x] - x) / eps at the row nodes."""
    z = sol.kernel.grid_z.points
    x = sol.kernel.grid_x.points
    mean, valid = _conditional_mean(sol, z)
    vals = (mean - x) / sol.epsilon
    vals[~valid] = np.nan
    return ConditionalField(vals, valid)


def conditional_generator(sol: SinkhornSolution, xi, chart: HessianChart | None = None) -> ConditionalField:
    """(E_pi[xi(Z) | X = x] - xi(x)) / eps at the row nodes.

    ``xi`` is a callable on points or an array of values on shared row/column nodes.
    """
    x = sol.kernel.grid_x.points
    z = sol.kernel.grid_z.points
    if callable(xi):
        xi_x = np.asarray(xi(x), float).reshape(-1)
        xi_z = np.asarray(xi(z), float).reshape(-1)
    else:
        if sol.kernel.shape[0] != sol.kernel.shape[1] or not np.array_equal(x, z):
            raise ShapeError("array-valued xi needs identical row and column nodes")
        xi_x = xi_z = np.asarray(xi, float).reshape(-1)
    mean, valid = _conditional_mean(sol, xi_z)
    vals = (mean - xi_x) / sol.epsilon
    vals[~valid] = np.nan
    return ConditionalField(vals, valid)


def entropic_interpolation(sol: SinkhornSolution, chart: HessianChart, t: float) -> GridMeasure:
    """mu_t proportional to (P_{eps t} a)(P_{eps (1 - t)} a) vol for a same-marginal bridge.

    The heat semigroup is the spectral one on the solution's grid.
    """
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t must lie in [0, 1], got {t}")
    if not sol.symmetric:
        raise DomainError("entropic interpolation needs a same-marginal symmetric solution")
    grid = _grid_of(sol)
    eps = sol.epsilon
    sg = heat_semigroup(chart, grid, eps)
    a = np.exp(sol.log_a - np.max(sol.log_a))
    left = sg.apply(eps * t, a)
    right = sg.apply(eps * (1.0 - t), a)
    dens = np.maximum(left, 0.0) * np.maximum(right, 0.0)
    return GridMeasure.from_density(grid, dens, "volume", chart)


class GridDiffusion:
    """Spectral grid version of the mu-reversible diffusion for a 1D potential field.

    The invariant Lebesgue density is exp(-U) sqrt(g) and the inverse metric
    at cell midpoints is 1/g.
    """

    def __init__(self, chart: HessianChart, field: PotentialField):
        if chart.dim != 1 or field.grid.dim != 1:
            raise ShapeError("grid diffusion couplings are one-dimensional")
        if field.base != "volume":
            raise DomainError("potential field must be expressed against the volume")
        x = field.grid.axes[0]
        g = chart.metric(x)[..., 0, 0]
        mid = 0.5 * (x[:-1] + x[1:])
        self.field = field
        self.log_rho = -field.U + 0.5 * np.log(g)
        self.gen = SpectralGenerator.build(x, self.log_rho, 1.0 / chart.metric(mid)[..., 0, 0])

    def coupling(self, epsilon: float) -> np.ndarray:
        return self.gen.coupling(epsilon)

    def transition(self, epsilon: float) -> np.ndarray:
        return self.gen.transition(epsilon)

    def stationary(self) -> GridMeasure:
        return GridMeasure(self.field.grid, self.gen.pw / self.gen.pw.sum())


@lru_cache(maxsize=8)
def _grid_diffusion(chart: HessianChart, field: PotentialField) -> GridDiffusion:
    return GridDiffusion(chart, field)


def diffusion_coupling_grid(chart: HessianChart, field: PotentialField, epsilon: float) -> np.ndarray:
    """Law of (X_0, X_eps) for the stationary grid diffusion, as node-pair masses."""
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    return _grid_diffusion(chart, field).coupling(epsilon)
