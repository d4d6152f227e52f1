"""Reference transition kernels on node sets.

All kernels store log densities against Lebesgue measure in the active
chart, so that the sum over z of exp(log_values[i, z]) * w_z is close to one.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import DomainError, NumericError, ShapeError
from ..geometry import HessianChart
from ..measures import Grid, NodeSet
from .spectral import SpectralGenerator, padded_axis

TAGS = ("euclidean_gaussian", "const_metric", "spectral_1d", "varadhan", "pushforward")

# heat kernel padding, in units of sqrt(eps) of Riemannian length
PAD_WIDTHS = 8.0


def _nodes(g) -> NodeSet:
    if isinstance(g, NodeSet):
        return g
    if isinstance(g, Grid):
        return g.nodeset()
    raise ShapeError(f"expected a Grid or NodeSet, got {type(g).__name__}")


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """Log transition densities r_eps(x, z) between two node sets.

    ``log_reference`` is the log Lebesgue density of the reference measure m at
    the row nodes (zero for Lebesgue, log sqrt(det g) for the volume), so that
    the reference coupling m(dx) r_eps(x, dz) has log masses :meth:`log_measure`.
    """

    grid_x: NodeSet
    grid_z: NodeSet
    log_values: np.ndarray
    epsilon: float
    reference_tag: str
    base: str = "lebesgue"
    log_reference: np.ndarray | None = None

    def __post_init__(self):
        gx, gz = _nodes(self.grid_x), _nodes(self.grid_z)
        object.__setattr__(self, "grid_x", gx)
        object.__setattr__(self, "grid_z", gz)
        lv = np.asarray(self.log_values, float)
        if lv.shape != (gx.size, gz.size):
            raise ShapeError(f"log_values shape {lv.shape} != ({gx.size}, {gz.size})")
        if self.reference_tag not in TAGS:
            raise DomainError(f"unknown kernel tag {self.reference_tag!r}")
        ref = np.zeros(gx.size) if self.log_reference is None else np.asarray(self.log_reference, float)
        object.__setattr__(self, "log_values", lv)
        object.__setattr__(self, "log_reference", ref.reshape(gx.size))

    @property
    def shape(self) -> tuple[int, int]:
        return self.log_values.shape

    def log_measure(self) -> np.ndarray:
        """Log masses of m(dx) r_eps(x, dz) on node pairs."""
        return (self.log_reference[:, None] + self.log_values
                + np.log(self.grid_x.weights)[:, None] + np.log(self.grid_z.weights)[None, :])

    def row_sums(self) -> np.ndarray:
        """Quadrature of r_eps(x, .) over the column nodes."""
        return np.exp(self.log_values) @ self.grid_z.weights

    def detailed_balance_error(self, log_vol: np.ndarray | None = None) -> float:
        """max |r(x,z) v(x) - r(z,x) v(z)| / max(r v) for square kernels."""
        if self.shape[0] != self.shape[1]:
            raise ShapeError("detailed balance needs a square kernel")
        lv = self.log_reference if log_vol is None else np.asarray(log_vol, float)
        m = np.exp(self.log_values + lv[:, None])
        return float(np.abs(m - m.T).max() / m.max())

    def describe(self) -> dict:
        return {"epsilon": self.epsilon, "tag": self.reference_tag, "base": self.base,
                "shape": list(self.shape)}


def gaussian_kernel(grid, epsilon: float, grid_z=None) -> KernelMatrix:
    """Euclidean heat kernel (2 pi eps)^{-d/2} exp(-|x - z|^2 / (2 eps))."""
    return const_metric_kernel(None, grid, epsilon, grid_z)


def const_metric_kernel(S, grid, epsilon: float, grid_z=None) -> KernelMatrix:
    """Gaussian kernel with precision S / eps, normalized against Lebesgue in z.

    ``S=None`` gives the Euclidean kernel.
    """
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    gx = _nodes(grid)
    gz = gx if grid_z is None else _nodes(grid_z)
    d = gx.dim
    if gz.dim != d:
        raise ShapeError("node sets differ in dimension")
    if S is None:
        S, tag = np.eye(d), "euclidean_gaussian"
    else:
        S, tag = np.atleast_2d(np.asarray(S, float)), "const_metric"
        if S.shape != (d, d) or not np.allclose(S, S.T, atol=1e-14):
            raise DomainError("S must be a symmetric d x d matrix")
        if np.linalg.eigvalsh(S)[0] <= 0:
            raise DomainError("S must be positive definite")
    diff = gz.points[None, :, :] - gx.points[:, None, :]
    quad = np.einsum("xzi,ij,xzj->xz", diff, S, diff)
    logdet = np.linalg.slogdet(S)[1]
    lv = -0.5 * d * np.log(2 * np.pi * epsilon) + 0.5 * logdet - quad / (2 * epsilon)
    return KernelMatrix(gx, gz, lv, float(epsilon), tag)


class HeatSemigroup:
    """Spectral heat semigroup of (1/2) Laplace-Beltrami for a 1D chart, restricted to a grid.

    The generator lives on the grid padded by at least ``PAD_WIDTHS * sqrt(max_eps)``
    of Riemannian length on each side (inside the chart window), so the
    truncation boundary stays out of reach of the returned block.
    """

    def __init__(self, chart: HessianChart, grid: Grid, max_eps: float):
        if chart.dim != 1 or grid.dim != 1:
            raise ShapeError("spectral heat kernels are one-dimensional")
        self.chart, self.grid, self.max_eps = chart, grid, float(max_eps)
        x = grid.axes[0]
        lo, hi = chart.window

        def sqrt_g(s):
            return np.sqrt(chart.metric(s)[..., 0, 0])

        full, self.left, self.right = padded_axis(x, sqrt_g, PAD_WIDTHS * np.sqrt(max_eps),
                                                  (lo[0], hi[0]))
        mid = 0.5 * (full[:-1] + full[1:])
        g_nodes = chart.metric(full)[..., 0, 0]
        self.gen = SpectralGenerator.build(full, 0.5 * np.log(g_nodes), 1.0 / chart.metric(mid)[..., 0, 0])
        self.block = slice(self.left, self.left + x.size)

    def density(self, t: float) -> np.ndarray:
        """Lebesgue transition densities between grid nodes at time ``t``."""
        if t > self.max_eps * (1 + 1e-12):
            raise DomainError(f"time {t} exceeds the padding budget {self.max_eps}")
        return self.gen.density(t)[self.block, self.block]

    def apply(self, t: float, f: np.ndarray) -> np.ndarray:
        """(P_t f)(x) for nodal f on the grid (zero outside it)."""
        if t == 0:
            return np.asarray(f, float).copy()
        return self.density(t) @ (np.asarray(f, float) * self.grid.weights)


@lru_cache(maxsize=16)
def _semigroup(chart: HessianChart, grid: Grid, max_eps: float) -> HeatSemigroup:
    return HeatSemigroup(chart, grid, max_eps)


def heat_semigroup(chart: HessianChart, grid: Grid, max_eps: float) -> HeatSemigroup:
    """Cached :class:`HeatSemigroup` for ``(chart, grid, max_eps)``."""
    return _semigroup(chart, grid, float(max_eps))


def heat_kernel_1d(chart: HessianChart, grid: Grid, epsilon: float) -> KernelMatrix:
    """Spectral heat kernel of the chart, as Lebesgue densities, with volume row reference."""
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    sg = heat_semigroup(chart, grid, epsilon)
    K = sg.density(epsilon)
    floor = np.finfo(float).tiny
    if np.any(~np.isfinite(K)):
        raise NumericError("heat kernel has non-finite entries")
    log_vol = 0.5 * np.log(chart.metric(grid.points)[..., 0, 0])
    return KernelMatrix(grid.nodeset(), grid.nodeset(), np.log(np.maximum(K, floor)), float(epsilon),
                        "spectral_1d", "lebesgue", log_vol)


def varadhan_expansion(chart: HessianChart, x, z, epsilon: float, convention: str = "lebesgue"):
    """Leading-order log heat kernel -d/2 log(2 pi eps) - d_g^2 / (2 eps) + log c0.

    With ``convention="lebesgue"`` the density is taken against dz, which adds
    log sqrt(det g(z)); ``"volume"`` returns the density against the Riemannian
    volume. In 1D c0 is identically one (the chart is isometric to an interval).
    """
    xp, zp = chart.as_points(x), chart.as_points(z)
    d = chart.dim
    dist = np.asarray(chart.geodesic_distance(xp, zp), float)
    out = -0.5 * d * np.log(2 * np.pi * epsilon) - dist**2 / (2 * epsilon)
    if d > 1 and not chart.is_flat:
        out = out + np.log(_van_vleck_many(chart, xp, zp))
    if convention == "lebesgue":
        out = out + 0.5 * np.log(np.linalg.det(chart.metric(zp)))
    elif convention != "volume":
        raise DomainError(f"unknown convention {convention!r}")
    return float(out) if np.ndim(out) == 0 else out


def _van_vleck_many(chart: HessianChart, x: np.ndarray, z: np.ndarray) -> np.ndarray:
    xs, zs = np.broadcast_arrays(x, z)
    flat = [chart.van_vleck(a, b) for a, b in zip(xs.reshape(-1, chart.dim), zs.reshape(-1, chart.dim))]
    return np.asarray(flat).reshape(xs.shape[:-1])


def pushforward_kernel(kernel: KernelMatrix, chart: HessianChart) -> KernelMatrix:
    """Push the column variable through grad phi: r_bar(x, y) = r(x, z) / det g(z) at y = grad phi(z)."""
    gz = kernel.grid_z
    y = chart.dual(gz.points)
    if not np.all(np.isfinite(y)):
        raise DomainError("image of the column nodes is not finite")
    det = np.linalg.det(chart.metric(gz.points)).reshape(gz.size)
    if np.any(det <= 0):
        raise DomainError("metric is not positive definite on the column nodes")
    image = NodeSet(y, gz.weights * det)
    lv = kernel.log_values - np.log(det)[None, :]
    return KernelMatrix(kernel.grid_x, image, lv, kernel.epsilon, "pushforward",
                        kernel.base, kernel.log_reference)
