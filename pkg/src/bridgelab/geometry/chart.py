"""Hessian-manifold calculus on a single global chart."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..errors import ConvergenceError, DomainError, NumericError
from .potentials import ConvexPotential


@dataclass(frozen=True)
class Geodesic:
    """Result of a geodesic boundary-value solve.

    ``method`` is ``"quadrature"`` (1D), ``"closed-form"`` (constant metric),
    ``"shooting"`` or ``"graph"`` (Dijkstra fallback, approximate).
    """

    length: float
    initial_velocity: np.ndarray
    method: str
    iterations: int = 0


class HessianChart:
    """The manifold (R^d, g = Hess phi) seen through primal coordinates.

    Parameters
    ----------
    potential : ConvexPotential
        The convex function generating the metric.
    newton_tol : float
        Tolerance of the Legendre-dual Newton solve, relative to ``max(1, |y|)``.
    geodesic_resolution : int
        Gauss-Legendre nodes for 1D distances, and nodes used to measure curve
        length or build the fallback graph in 2D.
    """

    def __init__(self, potential: ConvexPotential, newton_tol: float = 1e-12,
                 geodesic_resolution: int = 256, max_newton: int = 200):
        self.potential = potential
        self.newton_tol = float(newton_tol)
        self.geodesic_resolution = int(geodesic_resolution)
        self.max_newton = int(max_newton)

    def __repr__(self) -> str:
        return f"HessianChart({self.potential.name!r}, dim={self.dim})"

    @property
    def dim(self) -> int:
        return self.potential.dim

    @property
    def window(self) -> tuple[np.ndarray, np.ndarray]:
        return self.potential.window

    @property
    def is_flat(self) -> bool:
        return self.potential.constant_metric

    # point handling

    def as_points(self, x, check: bool = True) -> np.ndarray:
        """Coerce to shape ``(..., d)``; scalars are accepted in 1D."""
        x = np.asarray(x, dtype=float)
        if self.dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        if x.shape[-1] != self.dim:
            raise DomainError(f"expected points with last axis {self.dim}, got shape {x.shape}")
        if check and not np.all(self.potential.contains(x)):
            raise DomainError(f"point(s) outside the chart window {self.window[0]}..{self.window[1]}")
        return x

    # metric quantities

    def metric(self, x) -> np.ndarray:
        """g(x) = Hess phi(x), shape ``(..., d, d)``."""
        return self.potential.hess(self.as_points(x))

    def cometric(self, x) -> np.ndarray:
        """g(x)^{-1}, which equals the Hessian of the conjugate at grad phi(x)."""
        g = self.metric(x)
        if self.dim == 1:
            if np.any(g <= 0):
                raise NumericError("metric is not positive definite")
            return 1.0 / g
        try:
            return np.linalg.inv(g)
        except np.linalg.LinAlgError as exc:
            raise NumericError("singular metric") from exc

    def christoffel(self, x) -> np.ndarray:
        """Gamma^k_ij with axes ``(..., k, i, j)``; symmetric in (i, j) by construction."""
        xp = self.as_points(x)
        ginv = self.cometric(xp)
        T = self.potential.third(xp)
        gam = 0.5 * np.einsum("...kl,...lij->...kij", ginv, T)
        return 0.5 * (gam + np.swapaxes(gam, -1, -2))

    def contracted_christoffel(self, x) -> np.ndarray:
        """g^{ij} Gamma^k_ij, the Ito correction of manifold Brownian motion."""
        xp = self.as_points(x)
        ginv = self.cometric(xp)
        return np.einsum("...ij,...kij->...k", ginv, self.christoffel(xp))

    def log_det_metric_grad(self, x) -> np.ndarray:
        """d_k log det g = tr(g^{-1} d_k g)."""
        xp = self.as_points(x)
        return np.einsum("...ij,...ijk->...k", self.cometric(xp), self.potential.third(xp))

    def log_det_metric_hess(self, x) -> np.ndarray:
        """d_k d_l log det g = tr(g^{-1} d_kl g) - tr(g^{-1} d_k g g^{-1} d_l g)."""
        xp = self.as_points(x)
        if self.potential.fourth is None:
            raise NumericError(f"potential {self.potential.name!r} has no fourth derivative")
        ginv = self.cometric(xp)
        T = self.potential.third(xp)
        F = self.potential.fourth(xp)
        a = np.einsum("...ij,...ijkl->...kl", ginv, F)
        b = np.einsum("...ij,...jak,...ab,...bil->...kl", ginv, T, ginv, T)
        return a - b

    def volume_density(self, x) -> np.ndarray | float:
        """sqrt(det g(x)), the Lebesgue density of the Riemannian volume."""
        g = self.metric(x)
        out = np.sqrt(np.linalg.det(g))
        return float(out) if out.ndim == 0 else out

    # duality

    def dual(self, x) -> np.ndarray:
        """x* = grad phi(x)."""
        return self.potential.grad(self.as_points(x))

    def legendre_dual(self, y) -> np.ndarray:
        """Solve grad phi(x) = y by damped Newton started from the window center.

        Raises
        ------
        ConvergenceError
            If the residual does not reach ``newton_tol * max(1, |y|)`` within
            ``max_newton`` iterations.
        """
        y = np.asarray(y, dtype=float)
        scalar = self.dim == 1 and (y.ndim == 0 or y.shape[-1] != 1)
        if scalar:
            y = y[..., None]
        pot = self.potential
        batch = y.shape[:-1]
        yf = y.reshape(-1, self.dim)
        x = np.broadcast_to(pot.center, yf.shape).copy()
        tol = self.newton_tol * np.maximum(1.0, np.linalg.norm(yf, axis=-1))
        lo, hi = pot.window

        def psi(z, yy):
            return pot.value(z) - np.sum(z * yy, axis=-1)

        res = np.linalg.norm(pot.grad(x) - yf, axis=-1)
        it = 0
        while np.any(res > tol):
            if it >= self.max_newton:
                raise ConvergenceError("Legendre dual Newton solve did not converge", res.max(), it)
            act = res > tol
            xa, ya = x[act], yf[act]
            r = pot.grad(xa) - ya
            step = -np.linalg.solve(pot.hess(xa), r[..., None])[..., 0]
            t = np.ones(len(xa))
            f0 = psi(xa, ya)
            slope = np.sum(r * step, axis=-1)
            for _ in range(60):
                cand = xa + t[:, None] * step
                inside = np.all((cand >= lo) & (cand <= hi), axis=-1)
                ok = inside & (psi(np.clip(cand, lo, hi), ya) <= f0 + 1e-4 * t * slope + 1e-15 * np.abs(f0))
                if np.all(ok):
                    break
                t = np.where(ok, t, 0.5 * t)
            x[act] = np.clip(xa + t[:, None] * step, lo, hi)
            res = np.linalg.norm(pot.grad(x) - yf, axis=-1)
            it += 1
        # one undamped polishing step recovers full precision after the tolerance is met
        polished = x - np.linalg.solve(pot.hess(x), (pot.grad(x) - yf)[..., None])[..., 0]
        better = pot.contains(polished) & (np.linalg.norm(pot.grad(polished) - yf, axis=-1) <= res)
        x[better] = polished[better]
        out = x.reshape(batch + (self.dim,))
        return out[..., 0] if scalar else out

    # divergences

    def bregman(self, x, z):
        """D[z|x] = phi(z) - phi(x) - grad phi(x).(z - x)."""
        xp, zp = self.as_points(x), self.as_points(z)
        pot = self.potential
        out = pot.value(zp) - pot.value(xp) - np.sum(pot.grad(xp) * (zp - xp), axis=-1)
        return float(out) if np.ndim(out) == 0 else out

    def symmetrized_bregman(self, x, z):
        """(grad phi(z) - grad phi(x)).(z - x)."""
        xp, zp = self.as_points(x), self.as_points(z)
        pot = self.potential
        out = np.sum((pot.grad(zp) - pot.grad(xp)) * (zp - xp), axis=-1)
        return float(out) if np.ndim(out) == 0 else out

    # geodesics

    @cached_property
    def _gauss_legendre(self) -> tuple[np.ndarray, np.ndarray]:
        return np.polynomial.legendre.leggauss(self.geodesic_resolution)

    def _distance_1d(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        # x, z of shape (..., 1); returns (...)
        t, w = self._gauss_legendre
        x0, z0 = np.broadcast_arrays(x[..., 0], z[..., 0])
        x0, z0 = x0.ravel(), z0.ravel()
        out = np.empty(x0.shape)
        chunk = max(1, 2**22 // len(t))
        for s in range(0, len(x0), chunk):
            a, b = x0[s:s + chunk, None], z0[s:s + chunk, None]
            nodes = 0.5 * (a + b) + 0.5 * (b - a) * t
            root_g = np.sqrt(self.potential.hess(nodes[..., None])[..., 0, 0])
            out[s:s + chunk] = 0.5 * np.abs(b[:, 0] - a[:, 0]) * (root_g @ w)
        return out.reshape(np.broadcast_shapes(x.shape[:-1], z.shape[:-1]))

    def _constant_metric_distance(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        S = self.potential.hess(self.potential.center[None])[0]
        dz = z - x
        return np.sqrt(np.einsum("...i,ij,...j->...", dz, S, dz))

    def geodesic_distance(self, x, z, fallback: bool = False):
        """Riemannian distance d_g(x, z).

        1D uses Gauss-Legendre quadrature of sqrt(g) at ``geodesic_resolution``
        nodes (vectorized over broadcast inputs). In 2D the boundary-value
        problem is solved by shooting; with ``fallback=True`` a failed shot is
        replaced by a grid-graph distance (see :meth:`geodesic`).
        """
        xp, zp = self.as_points(x), self.as_points(z)
        if self.is_flat:
            out = self._constant_metric_distance(xp, zp)
        elif self.dim == 1:
            out = self._distance_1d(xp, zp)
        else:
            xs, zs = np.broadcast_arrays(xp, zp)
            flat_x, flat_z = xs.reshape(-1, self.dim), zs.reshape(-1, self.dim)
            out = np.array([self.geodesic(a, b, fallback=fallback).length
                            for a, b in zip(flat_x, flat_z)]).reshape(xs.shape[:-1])
        return float(out) if np.ndim(out) == 0 else out

    def riemannian_log(self, x, z, fallback: bool = False) -> np.ndarray:
        """log_x z, the initial velocity of the unit-time geodesic from x to z."""
        xp, zp = self.as_points(x), self.as_points(z)
        if self.is_flat:
            return zp - xp
        if self.dim == 1:
            d = self._distance_1d(xp, zp)
            g = self.potential.hess(xp)[..., 0, 0]
            return (np.sign(zp[..., 0] - xp[..., 0]) * d / np.sqrt(g))[..., None]
        return self.geodesic(xp, zp, fallback=fallback).initial_velocity

    def _geodesic_rhs(self, _t, state):
        d = self.dim
        x, v = state[:d], state[d:]
        ginv = np.linalg.inv(self.potential.hess(x))
        gam = 0.5 * np.einsum("kl,lij->kij", ginv, self.potential.third(x))
        return np.concatenate([v, -np.einsum("kij,i,j->k", gam, v, v)])

    def _integrate(self, x: np.ndarray, v: np.ndarray, dense: bool = False):
        from scipy.integrate import solve_ivp

        sol = solve_ivp(self._geodesic_rhs, (0.0, 1.0), np.concatenate([x, v]),
                        method="DOP853", rtol=1e-12, atol=1e-13, dense_output=dense)
        if not sol.success:
            raise ConvergenceError(f"geodesic ODE failed: {sol.message}")
        return sol

    def exp_map(self, x, v) -> np.ndarray:
        """exp_x(v) by integrating the geodesic equation over unit time."""
        xp = self.as_points(x)
        v = np.asarray(v, dtype=float).reshape(self.dim)
        if self.is_flat:
            return xp + v
        end = self._integrate(xp.reshape(self.dim), v).y[: self.dim, -1]
        if not self.potential.contains(end):
            raise DomainError("exponential map left the chart window")
        return end

    def geodesic(self, x, z, fallback: bool = False, tol: float = 1e-11,
                 max_iter: int = 50) -> Geodesic:
        """Solve the geodesic boundary-value problem between two points.

        Single shooting with Newton on the endpoint mismatch, started from the
        Euclidean chord; the Jacobian is a central finite difference of the
        flow. With ``fallback=True`` a non-converged shot is replaced by
        Dijkstra on an 8-neighbour graph, returned with ``method="graph"``.
        """
        xp = self.as_points(x).reshape(self.dim)
        zp = self.as_points(z).reshape(self.dim)
        if self.is_flat:
            return Geodesic(float(self._constant_metric_distance(xp, zp)), zp - xp, "closed-form")
        if np.array_equal(xp, zp):
            return Geodesic(0.0, np.zeros(self.dim), "shooting")
        if self.dim == 1:
            return Geodesic(float(self._distance_1d(xp, zp)), self.riemannian_log(xp, zp), "quadrature")
        try:
            v, it = self._shoot(xp, zp, tol, max_iter)
        except (ConvergenceError, DomainError, np.linalg.LinAlgError):
            if not fallback:
                raise
            return self._graph_geodesic(xp, zp)
        return Geodesic(self._curve_length(xp, v), v, "shooting", it)

    def _shoot(self, x: np.ndarray, z: np.ndarray, tol: float, max_iter: int):
        d = self.dim
        v = z - x
        scale = max(1.0, float(np.abs(z).max()))
        for it in range(max_iter):
            end = self._integrate(x, v).y[:d, -1]
            r = end - z
            if np.linalg.norm(r) <= tol * scale:
                return v, it
            J = np.empty((d, d))
            h = 1e-6 * max(1.0, np.linalg.norm(v))
            for j in range(d):
                e = np.zeros(d)
                e[j] = h
                J[:, j] = (self._integrate(x, v + e).y[:d, -1] - self._integrate(x, v - e).y[:d, -1]) / (2 * h)
            step = np.linalg.solve(J, r)
            # damp overly long steps to stay near the chord
            lim = 0.5 * max(np.linalg.norm(v), 1e-3)
            nstep = np.linalg.norm(step)
            v = v - (step if nstep <= lim else step * lim / nstep)
        raise ConvergenceError("geodesic shooting did not converge", float(np.linalg.norm(r)), max_iter)

    def _curve_length(self, x: np.ndarray, v: np.ndarray) -> float:
        sol = self._integrate(x, v, dense=True)
        t, w = self._gauss_legendre
        s = 0.5 * (t + 1.0)
        states = sol.sol(s)
        pos, vel = states[: self.dim].T, states[self.dim:].T
        speed = np.sqrt(np.einsum("ni,nij,nj->n", vel, self.potential.hess(pos), vel))
        return float(0.5 * speed @ w)

    def _graph_geodesic(self, x: np.ndarray, z: np.ndarray) -> Geodesic:
        from scipy.sparse import coo_matrix
        from scipy.sparse.csgraph import dijkstra

        lo, hi = self.window
        pad = 0.5 * np.linalg.norm(z - x) + 0.25
        a = np.maximum(np.minimum(x, z) - pad, lo)
        b = np.minimum(np.maximum(x, z) + pad, hi)
        n = max(33, self.geodesic_resolution // 2 + 1)
        axes = [np.linspace(a[i], b[i], n) for i in range(2)]
        X, Y = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
        idx = np.arange(n * n).reshape(n, n)
        rows, cols, wts = [], [], []
        for di, dj in [(1, 0), (0, 1), (1, 1), (1, -1)]:
            ilo, ihi = max(0, -di), n - max(0, di)
            jlo, jhi = max(0, -dj), n - max(0, dj)
            p = idx[ilo:ihi, jlo:jhi].ravel()
            q = idx[ilo + di:ihi + di, jlo + dj:jhi + dj].ravel()
            delta = pts[q] - pts[p]
            g = self.potential.hess(0.5 * (pts[p] + pts[q]))
            wt = np.sqrt(np.einsum("ni,nij,nj->n", delta, g, delta))
            rows += [p, q]
            cols += [q, p]
            wts += [wt, wt]
        # attach the exact endpoints to every node within two grid cells
        extra = np.stack([x, z])
        cell = np.max((b - a) / (n - 1))
        for k, e in enumerate(extra):
            near = np.nonzero(np.max(np.abs(pts - e), axis=1) <= 2.0 * cell)[0]
            delta = pts[near] - e
            g = self.potential.hess(0.5 * (pts[near] + e))
            wt = np.sqrt(np.einsum("ni,nij,nj->n", delta, g, delta))
            rows += [np.full(len(near), n * n + k), near]
            cols += [near, np.full(len(near), n * n + k)]
            wts += [wt, wt]
        size = n * n + 2
        graph = coo_matrix((np.concatenate(wts), (np.concatenate(rows), np.concatenate(cols))),
                           shape=(size, size)).tocsr()
        dist = dijkstra(graph, indices=n * n)[n * n + 1]
        # the graph gives no velocity; report the chord rescaled to the graph length
        chord = z - x
        gx = self.potential.hess(x)
        norm = np.sqrt(chord @ gx @ chord)
        v = chord * (dist / norm) if norm > 0 else chord
        return Geodesic(float(dist), v, "graph")

    def van_vleck(self, x, z) -> float:
        """c0(x, z) = J(exp_x)(log_x z)^{-1/2} with J the Riemannian Jacobian determinant.

        J = det(d exp_x / dv) * sqrt(det g(z)) / sqrt(det g(x)) in coordinates.
        One-dimensional and constant-metric charts are flat, so c0 = 1 there.
        """
        xp = self.as_points(x).reshape(self.dim)
        zp = self.as_points(z).reshape(self.dim)
        if self.is_flat or self.dim == 1:
            return 1.0
        v = self.geodesic(xp, zp).initial_velocity
        d = self.dim
        h = 1e-5 * max(1.0, np.linalg.norm(v))
        A = np.empty((d, d))
        for j in range(d):
            e = np.zeros(d)
            e[j] = h
            A[:, j] = (self._integrate(xp, v + e).y[:d, -1] - self._integrate(xp, v - e).y[:d, -1]) / (2 * h)
        jac = np.linalg.det(A) * np.sqrt(np.linalg.det(self.potential.hess(zp)) / np.linalg.det(self.potential.hess(xp)))
        if jac <= 0:
            raise NumericError("exponential map Jacobian is not positive (conjugate point?)")
        return float(jac ** -0.5)
