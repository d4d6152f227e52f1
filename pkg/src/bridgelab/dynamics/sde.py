"""Euler-Maruyama simulation of manifold diffusions and Mirror Langevin in a global chart."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import DomainError, ShapeError, UsageError
from ..geometry import HessianChart
from ..measures import Grid, GridMeasure, Potential, SmoothCdf
from .rng import BlockNormals, block_uniforms

# default sampling grids for stationary initial laws
INIT_NODES_1D = 4097
INIT_NODES_2D = 257


@dataclass(frozen=True)
class SdeSpec:
    """Diffusion dX = -grad_g U / 2 dt + dB^M run for time ``epsilon``.

    ``potential`` is the analytic U, with stationary law proportional to
    exp(-U) vol. ``window`` defaults to the chart window.
    """

    chart: HessianChart
    potential: Potential
    epsilon: float
    step: float
    trajectories: int
    seed: int
    window: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError("horizon must be positive")
        if not 0 < self.step <= self.epsilon / 20 * (1 + 1e-12):
            raise DomainError(f"step {self.step} violates h <= eps/20 for eps={self.epsilon}")
        if self.trajectories < 1:
            raise DomainError("need at least one trajectory")
        if self.potential.dim != self.chart.dim:
            raise ShapeError("potential and chart dimensions differ")
        lo, hi = self.window if self.window is not None else self.chart.window
        lo = np.maximum(np.atleast_1d(np.asarray(lo, float)), self.chart.window[0])
        hi = np.minimum(np.atleast_1d(np.asarray(hi, float)), self.chart.window[1])
        object.__setattr__(self, "window", (lo, hi))

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.epsilon / self.step)))


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    """Initial and terminal states of N trajectories plus bookkeeping.

    ``integral`` holds per-trajectory time integrals of an optional integrand
    (trapezoid rule over the Euler grid).
    """

    initial: np.ndarray
    terminal: np.ndarray
    clipped: np.ndarray
    epsilon: float
    step: float
    seed: int
    scheme: str = "euler-maruyama"
    paths: np.ndarray | None = None
    integral: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.initial.shape != self.terminal.shape:
            raise ShapeError("initial and terminal states differ in shape")

    @property
    def n(self) -> int:
        return self.initial.shape[0]

    @property
    def clip_fraction(self) -> float:
        return float(np.mean(self.clipped))

    def describe(self) -> dict:
        return {"epsilon": self.epsilon, "step": self.step, "trajectories": self.n,
                "seed": self.seed, "scheme": self.scheme, "clip_fraction": self.clip_fraction,
                **self.meta}


# initial laws

def sample_measure(measure: GridMeasure, n: int, seed: int) -> np.ndarray:
    """Draw ``n`` points from a grid measure with per-trajectory uniforms.

    1D uses the inverse of the smooth cdf; 2D picks a cell by the axis-0
    marginal then the conditional along axis 1, and spreads uniformly inside it.
    """
    grid = measure.grid
    if grid.dim == 1:
        u = block_uniforms(seed, n, 1)[:, 0]
        cdf = SmoothCdf.of(measure)
        upper = u > 0.5
        x = cdf.quantile(np.where(upper, 1.0 - u, u), upper)
        return np.clip(x, grid.lo[0], grid.hi[0])[:, None]
    if grid.dim != 2:
        raise ShapeError("sampling supports 1D and 2D grids")
    u = block_uniforms(seed, n, 4)
    m = measure.mass.reshape(grid.shape)
    row = np.cumsum(m.sum(axis=1))
    i = np.minimum(np.searchsorted(row, u[:, 0] * row[-1]), grid.shape[0] - 1)
    cond = np.cumsum(m, axis=1)[i]
    j = np.array([np.searchsorted(c, v * c[-1]) for c, v in zip(cond, u[:, 1])])
    j = np.minimum(j, grid.shape[1] - 1)
    h = np.array(grid.spacing)
    pts = np.stack([grid.axes[0][i], grid.axes[1][j]], axis=-1) + (u[:, 2:] - 0.5) * h
    return np.clip(pts, grid.lo, grid.hi)


def stationary_measure(chart: HessianChart, potential: Potential, grid: Grid | None = None) -> GridMeasure:
    """exp(-U) vol on ``grid`` (a fine grid over the chart window when omitted)."""
    if grid is None:
        lo, hi = chart.window
        grid = Grid.uniform(lo, hi, INIT_NODES_1D if chart.dim == 1 else INIT_NODES_2D)
    return GridMeasure.from_log_density(grid, -potential.value(grid.points), "volume", chart)


# coefficients

def manifold_drift(chart: HessianChart, potential: Potential, x: np.ndarray) -> np.ndarray:
    """-g^{-1} grad U / 2 - g^{ij} Gamma^k_ij / 2 in coordinates."""
    ginv = chart.cometric(x)
    return -0.5 * np.einsum("...ij,...j->...i", ginv, potential.grad(x)) \
        - 0.5 * chart.contracted_christoffel(x)


def mld_drift(chart: HessianChart, f: Potential, x: np.ndarray) -> np.ndarray:
    """Primal Mirror Langevin drift -g^{-1} grad_x[h o grad phi] / 2 with h o grad phi = f + log det g."""
    ginv = chart.cometric(x)
    grad_h = f.grad(x) + chart.log_det_metric_grad(x)
    return -0.5 * np.einsum("...ij,...j->...i", ginv, grad_h)


def diffusion_root(chart: HessianChart, x: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root of g^{-1}, shape ``(..., d, d)``."""
    ginv = chart.cometric(x)
    if chart.dim == 1:
        return np.sqrt(ginv)
    w, V = np.linalg.eigh(ginv)
    return np.einsum("...ij,...j,...kj->...ik", V, np.sqrt(np.maximum(w, 0.0)), V)


def _euler(chart: HessianChart, drift: Callable[[np.ndarray], np.ndarray], x0: np.ndarray,
           epsilon: float, n_steps: int, seed: int, window, integrand=None,
           record_every: int | None = None):
    x = np.array(x0, dtype=float, copy=True)
    n, d = x.shape
    h = epsilon / n_steps
    sqh = np.sqrt(h)
    lo, hi = window
    noise = BlockNormals(seed, n, d)
    clipped = np.zeros(n, dtype=bool)
    const = chart.is_flat
    if const:
        sig_c = diffusion_root(chart, x[:1])[0]
    acc = None
    if integrand is not None:
        acc = 0.5 * integrand(x)
    paths = [x.copy()] if record_every else None
    for k in range(n_steps):
        b = drift(x)
        sig = sig_c if const else diffusion_root(chart, x)
        dB = noise.next() * sqh
        if const:
            x = x + b * h + dB @ sig.T
        else:
            x = x + b * h + np.einsum("nij,nj->ni", sig, dB)
        out = np.any((x < lo) | (x > hi), axis=-1)
        if np.any(out):
            clipped |= out
            x = np.clip(x, lo, hi)
        if integrand is not None:
            acc = acc + integrand(x) * (0.5 if k == n_steps - 1 else 1.0)
        if record_every and (k + 1) % record_every == 0:
            paths.append(x.copy())
    integral = acc * h if acc is not None else None
    return x, clipped, (np.stack(paths) if paths is not None else None), integral


def simulate(spec: SdeSpec, init, integrand=None, record_every: int | None = None,
             init_seed: int | None = None) -> PathEnsemble:
    """Euler-Maruyama for the manifold diffusion described by ``spec``.

    Parameters
    ----------
    init : GridMeasure or point
        Initial law; a point starts every trajectory there.
    integrand : callable, optional
        Function of states ``(N, d) -> (N,)`` integrated in time along each path.
    record_every : int, optional
        Keep every k-th state in ``paths``.
    init_seed : int, optional
        Seed for the initial draws (defaults to ``spec.seed``).
    """
    x0 = _initial_states(spec.chart, init, spec.trajectories,
                         spec.seed if init_seed is None else init_seed, spec.window)
    x, clipped, paths, integral = _euler(
        spec.chart, lambda y: manifold_drift(spec.chart, spec.potential, y), x0, spec.epsilon,
        spec.n_steps, spec.seed, spec.window, integrand, record_every)
    return PathEnsemble(x0, x, clipped, spec.epsilon, spec.epsilon / spec.n_steps, spec.seed,
                        paths=paths, integral=integral, meta={"chart": spec.chart.potential.name,
                                                              "potential": spec.potential.name})


def _initial_states(chart, init, n, seed, window) -> np.ndarray:
    if isinstance(init, GridMeasure):
        if init.grid.dim != chart.dim:
            raise ShapeError("initial measure and chart dimensions differ")
        x0 = sample_measure(init, n, seed)
    else:
        pt = chart.as_points(init)
        x0 = np.broadcast_to(pt.reshape(1, chart.dim), (n, chart.dim)).copy()
    lo, hi = window
    if np.any((x0 < lo) | (x0 > hi)):
        raise DomainError("initial law is not supported in the window")
    return x0


def mirror_langevin_simulate(chart: HessianChart, f: Potential, epsilon: float, step: float,
                             trajectories: int, seed: int, grid: Grid | None = None,
                             integrand=None) -> PathEnsemble:
    """Primal Mirror Langevin targeting exp(-f) dx, started from exp(-f) on ``grid``."""
    spec = SdeSpec(chart, f.against_volume(chart), epsilon, step, trajectories, seed)
    if grid is None:
        lo, hi = chart.window
        grid = Grid.uniform(lo, hi, INIT_NODES_1D if chart.dim == 1 else INIT_NODES_2D)
    init = GridMeasure.from_log_density(grid, -f.value(grid.points))
    x0 = _initial_states(chart, init, trajectories, seed, spec.window)
    x, clipped, _, integral = _euler(chart, lambda y: mld_drift(chart, f, y), x0, epsilon,
                                     spec.n_steps, seed, spec.window, integrand)
    return PathEnsemble(x0, x, clipped, epsilon, epsilon / spec.n_steps, seed, scheme="mld-primal",
                        integral=integral, meta={"chart": chart.potential.name, "potential": f.name})


def mld_drift_consistency(chart: HessianChart, f: Potential, x) -> np.ndarray | float:
    """|manifold drift - MLD drift| at ``x`` with U_mu = f + log det g / 2."""
    xp = chart.as_points(x)
    diff = manifold_drift(chart, f.against_volume(chart), xp) - mld_drift(chart, f, xp)
    r = np.linalg.norm(diff, axis=-1)
    return float(r) if r.ndim == 0 else r


def stationary_pair(chart: HessianChart, potential: Potential, epsilon: float, step: float,
                    trajectories: int, seed: int, grid: Grid | None = None,
                    integrand=None) -> PathEnsemble:
    """(X_0, X_eps) pairs of the diffusion started from its stationary law exp(-U) vol."""
    spec = SdeSpec(chart, potential, epsilon, step, trajectories, seed)
    return simulate(spec, stationary_measure(chart, potential, grid), integrand)


def pushforward_pair(ensemble: PathEnsemble, chart: HessianChart) -> PathEnsemble:
    """(X_0, grad phi(X_eps)) pairs."""
    y = chart.dual(ensemble.terminal)
    return PathEnsemble(ensemble.initial, y, ensemble.clipped, ensemble.epsilon, ensemble.step,
                        ensemble.seed, ensemble.scheme + "+dual", ensemble.paths, ensemble.integral,
                        dict(ensemble.meta))


def path_relative_entropy_rate(chart: HessianChart, U_mu: Potential, U_m: Potential, epsilon: float,
                               step: float, trajectories: int, seed: int,
                               grid: Grid | None = None) -> tuple[float, float]:
    """Monte Carlo estimate and standard error of -int_0^eps E_Q[(R_mu - R_m)(w_t)] dt.

    R_mu, R_m are reciprocal characteristics of U_mu and U_m; paths are
    mu-stationary.
    """
    def integrand(x):
        return U_mu.reciprocal(chart, x) - U_m.reciprocal(chart, x)

    ens = stationary_pair(chart, U_mu, epsilon, step, trajectories, seed, grid, integrand)
    vals = -ens.integral
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(vals.size))


def moment_scaling(chart: HessianChart, potential: Potential, p: int, epsilons, step_divisor: int,
                   trajectories: int, seed: int, grid: Grid | None = None,
                   init=None) -> list[tuple[float, float, float]]:
    """Per-eps Monte Carlo E[d^p(X_0, X_eps)] with standard errors.

    Starts from the stationary law unless ``init`` (a point or measure) is given.
    """
    if p <= 0 or p % 2:
        raise UsageError("p must be a positive even integer")
    out = []
    start = init if init is not None else stationary_measure(chart, potential, grid)
    for eps in epsilons:
        spec = SdeSpec(chart, potential, eps, eps / step_divisor, trajectories, seed)
        ens = simulate(spec, start)
        d = chart.geodesic_distance(ens.initial, ens.terminal)
        vals = np.asarray(d, float).reshape(-1) ** p
        out.append((float(eps), float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(vals.size))))
    return out


def ks_statistic(samples: np.ndarray, measure: GridMeasure) -> float:
    """Kolmogorov-Smirnov distance between 1D samples and a grid measure's smooth cdf."""
    s = np.sort(np.asarray(samples, float).reshape(-1))
    F = np.clip(SmoothCdf.of(measure).cdf(s), 0.0, 1.0)
    n = s.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))
