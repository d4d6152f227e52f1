"""Rectangular grids, quadrature-weighted measures and potentials on them."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from ..errors import DomainError, ShapeError, UsageError
from ..geometry import HessianChart

BASES = ("lebesgue", "volume")


@dataclass(frozen=True)
class NodeSet:
    """Quadrature nodes (``points`` of shape ``(n, d)``) with positive weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (pts.shape[0],):
            raise ShapeError(f"weights shape {w.shape} does not match {pts.shape[0]} points")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True, eq=False)
class Grid:
    """Tensor grid with uniform spacing per axis and trapezoid weights.

    Points are flattened in row-major (C) order, so a 2D field of shape
    ``grid.shape`` ravels to match ``grid.points``.
    """

    axes: tuple[np.ndarray, ...]

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        for a in axes:
            if a.ndim != 1 or a.size < 3:
                raise ShapeError("each grid axis needs at least 3 nodes")
            steps = np.diff(a)
            if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
                raise DomainError("grid spacing must be uniform and increasing")
        object.__setattr__(self, "axes", axes)

    @classmethod
    def uniform(cls, lo, hi, n) -> "Grid":
        """Grid with ``n`` nodes per axis spanning ``[lo, hi]`` (scalars or per-axis sequences)."""
        lo, hi = np.atleast_1d(lo).astype(float), np.atleast_1d(hi).astype(float)
        n = np.broadcast_to(np.atleast_1d(n), lo.shape)
        return cls(tuple(np.linspace(a, b, int(k)) for a, b, k in zip(lo, hi, n)))

    def __eq__(self, other) -> bool:
        return isinstance(other, Grid) and len(self.axes) == len(other.axes) and all(
            a.shape == b.shape and np.array_equal(a, b) for a, b in zip(self.axes, other.axes))

    def __hash__(self) -> int:
        return hash(tuple((a[0], a[-1], a.size) for a in self.axes))

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.size for a in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(float(a[1] - a[0]) for a in self.axes)

    @property
    def lo(self) -> np.ndarray:
        return np.array([a[0] for a in self.axes])

    @property
    def hi(self) -> np.ndarray:
        return np.array([a[-1] for a in self.axes])

    @property
    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @property
    def weights(self) -> np.ndarray:
        w = np.ones(())
        for a in self.axes:
            wa = np.full(a.size, a[1] - a[0])
            wa[[0, -1]] *= 0.5
            w = np.multiply.outer(w, wa)
        return w.ravel()

    def nodeset(self) -> NodeSet:
        return NodeSet(self.points, self.weights)

    def boundary_mask(self, width: int = 1) -> np.ndarray:
        """True for nodes within ``width`` nodes of the grid boundary."""
        masks = []
        for k, a in enumerate(self.axes):
            idx = np.arange(a.size)
            m = (idx < width) | (idx >= a.size - width)
            shape = [1] * self.dim
            shape[k] = a.size
            masks.append(np.broadcast_to(m.reshape(shape), self.shape))
        return np.logical_or.reduce(masks).ravel()

    def describe(self) -> dict:
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist(), "shape": list(self.shape)}


def _volume_density(chart: HessianChart | None, grid: Grid) -> np.ndarray:
    if chart is None:
        raise UsageError("a chart is required for volume-based densities")
    if chart.dim != grid.dim:
        raise ShapeError(f"chart dim {chart.dim} does not match grid dim {grid.dim}")
    return np.asarray(chart.volume_density(grid.points), dtype=float).reshape(grid.size)


@dataclass(frozen=True, eq=False)
class GridMeasure:
    """Measure on a grid stored as mass per node.

    ``base`` records the reference against which :meth:`density` is expressed.
    Probability measures have ``normalized=True`` and total mass one; reference
    measures such as Lebesgue or the Riemannian volume use ``normalized=False``.
    """

    grid: Grid
    mass: np.ndarray
    base: str = "lebesgue"
    normalized: bool = True

    def __post_init__(self):
        m = np.asarray(self.mass, dtype=float).reshape(-1)
        if m.size != self.grid.size:
            raise ShapeError(f"mass has {m.size} entries, grid has {self.grid.size} nodes")
        if self.base not in BASES:
            raise UsageError(f"base must be one of {BASES}, got {self.base!r}")
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise DomainError("mass must be finite and nonnegative")
        if self.normalized and abs(m.sum() - 1.0) > 1e-12:
            raise DomainError(f"probability mass sums to {m.sum():.15f}, not 1")
        object.__setattr__(self, "mass", m)

    # constructors

    @classmethod
    def from_log_density(cls, grid: Grid, log_density, base: str = "lebesgue",
                         chart: HessianChart | None = None, normalize: bool = True) -> "GridMeasure":
        """Measure with density ``exp(log_density)`` against ``base`` (values or callable on points)."""
        logd = log_density(grid.points) if callable(log_density) else np.asarray(log_density, float)
        logd = np.asarray(logd, dtype=float).reshape(grid.size)
        logm = logd + np.log(grid.weights)
        if base == "volume":
            logm = logm + np.log(_volume_density(chart, grid))
        if normalize:
            logm = logm - logm.max()
            m = np.exp(logm)
            m /= m.sum()
        else:
            m = np.exp(logm)
        return cls(grid, m, base, normalize)

    @classmethod
    def from_density(cls, grid: Grid, density, base: str = "lebesgue",
                     chart: HessianChart | None = None, normalize: bool = True) -> "GridMeasure":
        dens = density(grid.points) if callable(density) else np.asarray(density, float)
        dens = np.asarray(dens, dtype=float).reshape(grid.size)
        if np.any(dens < 0):
            raise DomainError("density must be nonnegative")
        m = dens * grid.weights
        if base == "volume":
            m = m * _volume_density(chart, grid)
        if normalize:
            total = m.sum()
            if not np.isfinite(total) or total <= 0:
                raise DomainError("density is not normalizable on the grid")
            m = m / total
        return cls(grid, m, base, normalize)

    @classmethod
    def lebesgue(cls, grid: Grid) -> "GridMeasure":
        """Lebesgue measure restricted to the grid (unnormalized)."""
        return cls(grid, grid.weights.copy(), "lebesgue", False)

    @classmethod
    def volume(cls, chart: HessianChart, grid: Grid) -> "GridMeasure":
        """Riemannian volume restricted to the grid (unnormalized)."""
        return cls(grid, grid.weights * _volume_density(chart, grid), "volume", False)

    # views

    @property
    def points(self) -> np.ndarray:
        return self.grid.points

    def lebesgue_density(self) -> np.ndarray:
        return self.mass / self.grid.weights

    def density(self, chart: HessianChart | None = None) -> np.ndarray:
        """Density against ``base`` (a chart is needed when ``base == "volume"``)."""
        d = self.lebesgue_density()
        if self.base == "volume":
            d = d / _volume_density(chart, self.grid)
        return d

    def expect(self, values) -> float:
        v = values(self.points) if callable(values) else np.asarray(values, float)
        return float(self.mass @ np.asarray(v, float).reshape(self.grid.size))

    def normalize(self) -> "GridMeasure":
        return GridMeasure(self.grid, self.mass / self.mass.sum(), self.base, True)

    def boundary_decay(self, width: int = 3) -> float:
        """Largest Lebesgue density within ``width`` nodes of the boundary, relative to the maximum.

        The truncation budget for acceptance runs asks for at most 1e-12.
        """
        d = self.lebesgue_density()
        return float(d[self.grid.boundary_mask(width)].max() / d.max())


@dataclass(frozen=True)
class Potential:
    """Analytic scalar potential U with gradient and Hessian callables on ``(..., d)`` points."""

    value: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    hess: Callable[[np.ndarray], np.ndarray]
    dim: int = 1
    name: str = "potential"
    params: Mapping[str, object] = field(default_factory=dict)

    @classmethod
    def zero(cls, dim: int = 1) -> "Potential":
        return cls(lambda x: np.zeros(x.shape[:-1]), lambda x: np.zeros(x.shape),
                   lambda x: np.zeros(x.shape + (dim,)), dim, "zero")

    @classmethod
    def gaussian(cls, mean=0.0, cov=1.0, normalized: bool = True) -> "Potential":
        """-log of the N(mean, cov) Lebesgue density (including the normalizer when asked)."""
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        d = mean.size
        if cov.shape != (d, d):
            cov = np.eye(d) * cov.ravel()[0] if cov.size == 1 else cov
        prec = np.linalg.inv(cov)
        const = 0.5 * np.log(np.linalg.det(2 * np.pi * cov)) if normalized else 0.0

        def value(x):
            dx = x - mean
            return 0.5 * np.einsum("...i,ij,...j->...", dx, prec, dx) + const

        return cls(value, lambda x: (x - mean) @ prec.T,
                   lambda x: np.broadcast_to(prec, x.shape[:-1] + (d, d)).copy(),
                   d, "gaussian", {"mean": mean.tolist(), "cov": cov.tolist()})

    def __add__(self, other: "Potential") -> "Potential":
        return Potential(lambda x: self.value(x) + other.value(x),
                         lambda x: self.grad(x) + other.grad(x),
                         lambda x: self.hess(x) + other.hess(x),
                         self.dim, f"{self.name}+{other.name}")

    def scaled(self, c: float) -> "Potential":
        return Potential(lambda x: c * self.value(x), lambda x: c * self.grad(x),
                         lambda x: c * self.hess(x), self.dim, f"{c}*{self.name}")

    def against_volume(self, chart: HessianChart) -> "Potential":
        """Re-express e^{-U} dx as e^{-(U + log det g / 2)} dvol."""
        half = 0.5
        return Potential(
            lambda x: self.value(x) + half * np.log(np.linalg.det(chart.potential.hess(x))),
            lambda x: self.grad(x) + half * chart.log_det_metric_grad(x),
            lambda x: self.hess(x) + half * chart.log_det_metric_hess(x),
            self.dim, f"{self.name}@vol",
        )

    def laplace_beltrami(self, chart: HessianChart, x) -> np.ndarray:
        """Delta_g U = g^{ij}(d_ij U - Gamma^k_ij d_k U)."""
        xp = chart.as_points(x, check=False)
        ginv = chart.cometric(xp)
        return (np.einsum("...ij,...ij->...", ginv, self.hess(xp))
                - np.einsum("...k,...k->...", chart.contracted_christoffel(xp), self.grad(xp)))

    def reciprocal(self, chart: HessianChart, x) -> np.ndarray:
        """Reciprocal characteristic |grad_g U|_g^2 / 8 - Delta_g U / 4 at arbitrary points."""
        xp = chart.as_points(x, check=False)
        gu = self.grad(xp)
        sq = np.einsum("...i,...ij,...j->...", gu, chart.cometric(xp), gu)
        return sq / 8.0 - self.laplace_beltrami(chart, xp) / 4.0

    def on_grid(self, chart: HessianChart, grid: Grid) -> "PotentialField":
        pts = grid.points
        return PotentialField(grid, self.value(pts), self.grad(pts),
                              self.laplace_beltrami(chart, pts), name=self.name)


@dataclass(frozen=True, eq=False)
class PotentialField:
    """Node values of U (density proportional to e^{-U} against ``base``), grad U and Delta_g U."""

    grid: Grid
    U: np.ndarray
    gradU: np.ndarray
    lapU: np.ndarray
    base: str = "volume"
    name: str = "field"

    def __post_init__(self):
        n, d = self.grid.size, self.grid.dim
        U = np.asarray(self.U, float).reshape(n)
        G = np.asarray(self.gradU, float).reshape(n, d)
        L = np.asarray(self.lapU, float).reshape(n)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "gradU", G)
        object.__setattr__(self, "lapU", L)

    def measure(self, chart: HessianChart | None = None) -> GridMeasure:
        """Normalized e^{-U} against ``base`` on the grid."""
        return GridMeasure.from_log_density(self.grid, -self.U, self.base, chart)

    def gradient_fd_error(self) -> float:
        """Largest interior mismatch between ``gradU`` and central differences of ``U``."""
        U = self.U.reshape(self.grid.shape)
        err = 0.0
        for k, h in enumerate(self.grid.spacing):
            fd = np.gradient(U, h, axis=k)
            sl = [slice(1, -1)] * self.grid.dim
            err = max(err, float(np.abs(fd[tuple(sl)] - self.gradU[:, k].reshape(self.grid.shape)[tuple(sl)]).max()))
        return err


def density_potential(spec: str | Mapping[str, object], dim: int = 1) -> Potential:
    """-log Lebesgue density for a named measure config.

    ``{"name": "gaussian", "mean": m, "var": v}`` (or ``"cov"``), ``"zero"`` or
    ``"lebesgue"`` for the flat reference.
    """
    if isinstance(spec, str):
        spec = {"name": spec}
    spec = dict(spec)
    name = spec.pop("name", "gaussian")
    if name == "gaussian":
        cov = spec.pop("cov", spec.pop("var", 1.0))
        mean = spec.pop("mean", 0.0)
        if np.ndim(mean) == 0 and dim > 1:
            mean = np.full(dim, float(mean))
        if np.ndim(cov) == 0 and dim > 1:
            cov = np.eye(dim) * float(cov)
        return Potential.gaussian(mean, cov)
    if name in ("zero", "lebesgue", "uniform"):
        return Potential.zero(dim)
    raise UsageError(f"unknown measure {name!r}")
