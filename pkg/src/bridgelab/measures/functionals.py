"""Relative entropy, Fisher information and reciprocal characteristics on grids."""
from __future__ import annotations

import numpy as np

from ..errors import DomainError, Infinite, ShapeError
from ..geometry import HessianChart
from .grid import GridMeasure, PotentialField


def _same_grid(p: GridMeasure, q: GridMeasure) -> None:
    if p.grid != q.grid:
        raise ShapeError("measures live on different grids")


def reciprocal_characteristic(chart: HessianChart, field: PotentialField, x=None) -> np.ndarray | float:
    """|grad_g U|_g^2 / 8 - Delta_g U / 4 at grid nodes.

    Parameters
    ----------
    x : int, array of int or None
        Node indices; all nodes when None.
    """
    idx = slice(None) if x is None else x
    pts = field.grid.points[idx]
    g = field.gradU[idx]
    sq = np.einsum("...i,...ij,...j->...", g, chart.cometric(pts), g)
    out = sq / 8.0 - field.lapU[idx] / 4.0
    return float(out) if np.ndim(out) == 0 else out


def relative_entropy(p: GridMeasure, q: GridMeasure) -> float:
    """Sum of p log(p/q) over nodes with p > 0.

    ``q`` may be unnormalized (Lebesgue or volume). Since both store mass per node
    with the same quadrature weights, the ratio of masses equals the ratio of
    densities.
    """
    _same_grid(p, q)
    pos = p.mass > 0
    if np.any(q.mass[pos] <= 0):
        return Infinite("p charges nodes where q vanishes")
    pm, qm = p.mass[pos], q.mass[pos]
    return float(np.sum(pm * (np.log(pm) - np.log(qm))))


def lebesgue_entropy(p: GridMeasure) -> float:
    """Ent(p) = integral of rho log rho dx, with rho the Lebesgue density."""
    pos = p.mass > 0
    return float(np.sum(p.mass[pos] * np.log(p.lebesgue_density()[pos])))


def _log_ratio(p: GridMeasure, q: GridMeasure) -> np.ndarray | None:
    if np.any((p.mass > 0) & (q.mass <= 0)):
        return None
    # p == 0 nodes carry no mass; a floored log keeps neighbouring differences finite
    tiny = np.finfo(float).tiny
    return np.log(np.maximum(p.mass, tiny)) - np.log(np.maximum(q.mass, tiny))


def fisher_information(chart: HessianChart, p: GridMeasure, q: GridMeasure,
                       log_ratio: np.ndarray | None = None) -> float:
    """Sum of p |grad_g log(p/q)|_g^2 with second-order central differences.

    Edges use one-sided second-order stencils. ``log_ratio`` may be passed
    directly when it is known more accurately than the mass ratio.
    """
    _same_grid(p, q)
    grid = p.grid
    lr = _log_ratio(p, q) if log_ratio is None else np.asarray(log_ratio, float).reshape(grid.size)
    if lr is None:
        return Infinite("p is not absolutely continuous with respect to q")
    lr = lr.reshape(grid.shape)
    grads = np.stack([np.gradient(lr, h, axis=k, edge_order=2).ravel()
                      for k, h in enumerate(grid.spacing)], axis=-1)
    ginv = chart.cometric(grid.points)
    sq = np.einsum("ni,nij,nj->n", grads, ginv, grads)
    return float(p.mass @ sq)


def ibp_identity_residual(chart: HessianChart, field1: PotentialField, field2: PotentialField) -> float:
    """E_{mu2}[R2 - R1] + I_g(mu2 | mu1) / 8 for mu_i proportional to exp(-U_i) vol.

    R_i are the reciprocal characteristics. The Fisher term uses the analytic
    gradients, so the residual measures only quadrature and truncation error.
    """
    if field1.grid != field2.grid:
        raise ShapeError("fields live on different grids")
    grid = field2.grid
    if not (np.all(np.isfinite(field2.U)) and np.all(np.isfinite(field1.U))):
        raise DomainError("potential is not finite on the window")
    logm = -field2.U + np.log(grid.weights) + np.log(chart.volume_density(grid.points)).reshape(grid.size)
    logm -= logm.max()
    mass = np.exp(logm)
    total = mass.sum()
    if not np.isfinite(total) or total <= 0:
        raise DomainError("exp(-U2) vol is not normalizable on the window")
    mass /= total
    dR = reciprocal_characteristic(chart, field2) - reciprocal_characteristic(chart, field1)
    dg = field2.gradU - field1.gradU
    fisher = np.einsum("ni,nij,nj->n", dg, chart.cometric(grid.points), dg)
    return float(mass @ dR + mass @ fisher / 8.0)
