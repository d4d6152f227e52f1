"""One-dimensional optimal transport on grids: monotone maps, McCann interpolation, W2.

Cumulative distribution functions come from the antiderivative of a cubic
spline of the Lebesgue density, built separately from the left (for the lower
half of the mass) and from the right (for the upper half), so tail quantiles do
not lose relative accuracy to cancellation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import CubicSpline

from ..errors import DomainError, NumericError, ShapeError
from ..geometry import HessianChart, flat
from .functionals import fisher_information
from .grid import Grid, GridMeasure


def _require_1d_positive(p: GridMeasure) -> None:
    if p.grid.dim != 1:
        raise ShapeError("one-dimensional measure required")
    if np.any(p.mass <= 0):
        raise DomainError("measure must be strictly positive on its window")


@dataclass(frozen=True, eq=False)
class SmoothCdf:
    """Smooth cdf and survival function of a 1D grid measure."""

    x: np.ndarray
    log_rho: CubicSpline
    left: CubicSpline
    right: CubicSpline
    total: float

    @classmethod
    def of(cls, p: GridMeasure) -> "SmoothCdf":
        _require_1d_positive(p)
        x = p.grid.axes[0]
        rho = p.lebesgue_density()
        left = CubicSpline(x, rho).antiderivative()
        right = CubicSpline(-x[::-1], rho[::-1]).antiderivative()
        total = float(left(x[-1]))
        return cls(x, CubicSpline(x, np.log(rho)), left, right, total)

    def cdf(self, y):
        return self.left(y) / self.total

    def sf(self, y):
        return self.right(-np.asarray(y)) / self.total

    def density(self, y):
        return np.exp(self.log_rho(y)) / self.total

    def node_values(self) -> tuple[np.ndarray, np.ndarray]:
        return self.cdf(self.x), self.sf(self.x)

    def quantile(self, lo_tail: np.ndarray, use_sf: np.ndarray, iters: int = 60) -> np.ndarray:
        """Solve cdf(y) = u where ``use_sf`` is False and sf(y) = u otherwise.

        Newton on the log of the tail mass, safeguarded by bisection.
        """
        u = np.asarray(lo_tail, float)
        x = self.x
        F, S = self.node_values()
        # bracket from node values
        y = np.empty_like(u)
        a = np.empty_like(u)
        b = np.empty_like(u)
        for mask, vals, sign in ((~use_sf, F, 1.0), (use_sf, S[::-1], -1.0)):
            if not np.any(mask):
                continue
            xs = x if sign > 0 else x[::-1]
            k = np.clip(np.searchsorted(vals, u[mask]), 1, x.size - 1)
            ya, yb = xs[k - 1], xs[k]
            a[mask], b[mask] = np.minimum(ya, yb), np.maximum(ya, yb)
            lv0 = np.log(np.maximum(vals[k - 1], 1e-300))
            lv1 = np.log(vals[k])
            lu = np.log(u[mask])
            frac = np.clip((lu - lv0) / np.where(lv1 > lv0, lv1 - lv0, 1.0), 0, 1)
            y[mask] = ya + frac * (yb - ya)
        lu = np.log(u)
        for _ in range(iters):
            tail = np.where(use_sf, self.sf(y), self.cdf(y))
            tail = np.maximum(tail, 1e-300)
            r = np.log(tail) - lu
            # cdf increases, sf decreases
            inc = np.where(use_sf, r < 0, r > 0)
            b = np.where(inc, np.minimum(b, y), b)
            a = np.where(inc, a, np.maximum(a, y))
            slope = self.density(y) / tail * np.where(use_sf, -1.0, 1.0)
            step = np.where(slope != 0, r / np.where(slope != 0, slope, 1.0), 0.0)
            y_new = y - step
            bad = (y_new <= a) | (y_new >= b) | ~np.isfinite(y_new)
            y_new = np.where(bad, 0.5 * (a + b), y_new)
            done = np.abs(y_new - y) <= 1e-14 * (1.0 + np.abs(y))
            y = y_new
            if np.all(done):
                break
        else:
            if np.max(np.abs(r)) > 1e-8:
                raise NumericError("quantile inversion did not converge")
        return y


def monotone_map(p: GridMeasure, q: GridMeasure) -> np.ndarray:
    """T = quantile_q o cdf_p at the nodes of ``p``."""
    cp, cq = SmoothCdf.of(p), SmoothCdf.of(q)
    F, S = cp.node_values()
    x = cp.x
    use_sf = F > 0.5
    u = np.where(use_sf, S, F)
    T = np.empty_like(x)
    inner = u > 0
    T[inner] = cq.quantile(u[inner], use_sf[inner])
    T[~inner & ~use_sf] = cq.x[0]
    T[~inner & use_sf] = cq.x[-1]
    if np.any(np.diff(T) <= 0):
        raise NumericError("numerical transport map is not strictly increasing")
    return T


class McCann1D:
    """Displacement interpolation between two positive 1D grid measures.

    The monotone map is computed once; :meth:`at` evaluates the interpolant on
    a uniform grid spanning the pushed window, with spacing no coarser than the
    finer of the two input grids.
    """

    def __init__(self, p: GridMeasure, q: GridMeasure):
        self.p, self.q = p, q
        self.T = monotone_map(p, q)
        self._cq = SmoothCdf.of(q)
        self.x = p.grid.axes[0]
        self.log_p = np.log(p.lebesgue_density())
        self.log_q_at_T = self._cq.log_rho(self.T) - np.log(self._cq.total)

    def at(self, t: float) -> GridMeasure:
        if not 0.0 <= t <= 1.0:
            raise DomainError(f"t must lie in [0, 1], got {t}")
        if t == 0.0:
            return self.p
        if t == 1.0:
            return self.q
        xt = (1 - t) * self.x + t * self.T
        # rho_t(T_t x) = rho_0(x) / ((1 - t) + t rho_0(x) / rho_1(T x))
        log_rt = self.log_p - np.log((1 - t) + t * np.exp(self.log_p - self.log_q_at_T))
        lo = (1 - t) * self.x[0] + t * self.q.grid.axes[0][0]
        hi = (1 - t) * self.x[-1] + t * self.q.grid.axes[0][-1]
        h = min(self.p.grid.spacing[0], self.q.grid.spacing[0])
        grid = Grid.uniform(lo, hi, max(self.x.size, int(np.ceil((hi - lo) / h - 1e-9)) + 1))
        y = np.clip(grid.axes[0], xt[0], xt[-1])
        return GridMeasure.from_log_density(grid, CubicSpline(xt, log_rt)(y))

    def log_density_at(self, t: float) -> tuple[Grid, np.ndarray]:
        """Grid and log Lebesgue density of the interpolant (unnormalized)."""
        m = self.at(t)
        return m.grid, np.log(m.lebesgue_density())


def mccann_interpolation_1d(p: GridMeasure, q: GridMeasure, t: float) -> GridMeasure:
    """Push ``p`` forward by (1 - t) Id + t T with T the monotone map onto ``q``."""
    return McCann1D(p, q).at(t)


def integrated_fisher_mccann_1d(p: GridMeasure, q: GridMeasure, steps: int = 20) -> float:
    """Trapezoid rule in t of the Lebesgue Fisher information along the McCann curve."""
    if steps < 1:
        raise DomainError("steps must be at least 1")
    curve = McCann1D(p, q)
    chart = HessianChart(flat(1, half_width=1e6))
    ts = np.linspace(0.0, 1.0, steps + 1)
    vals = np.array([fisher_information(chart, m, GridMeasure.lebesgue(m.grid))
                     for m in (curve.at(t) for t in ts)])
    return float(trapezoid(vals, ts))


def w2_1d(p: GridMeasure, q: GridMeasure) -> float:
    """Quadratic Wasserstein distance, integrating |x - T(x)|^2 against ``p``."""
    T = monotone_map(p, q)
    return float(np.sqrt(p.mass @ (p.grid.axes[0] - T) ** 2))


def brenier_fisher_integral_1d(chart: HessianChart, f_grad, p: GridMeasure, nodes: int = 32) -> float:
    """Integral over t of I(rho_t | Leb) when the target is (phi')# p and p = e^{-f}.

    With T = phi', rho_t is the law of (1 - t) x + t phi'(x) for x ~ p, so the
    t integral of its Fisher information reduces to an expectation under p.
    Used as an independent oracle for :func:`integrated_fisher_mccann_1d`.
    """
    x = p.grid.points
    g = chart.metric(x)[..., 0, 0]
    g3 = chart.potential.third(x)[..., 0, 0, 0]
    fp = np.asarray(f_grad(x)).reshape(-1)
    # rho_t(T_t x) = p(x) / D with D = 1 + t (g - 1), hence
    # d/dy log rho_t = -(f' + t g3 / D) / D; Gauss-Legendre in t
    ts, wts = np.polynomial.legendre.leggauss(nodes)
    ts, wts = 0.5 * (ts + 1), 0.5 * wts
    D = 1 + np.outer(ts, g - 1)
    val = ((fp + np.outer(ts, g3) / D) / D) ** 2
    return float(p.mass @ (wts @ val))
