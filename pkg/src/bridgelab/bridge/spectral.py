"""Spectral one-dimensional diffusion semigroups on uniform grids.

A reversible 1D diffusion with invariant Lebesgue density rho and inverse
metric a = 1/g has generator L f = (rho a f')' / (2 rho). After the ground
state substitution f = u / sqrt(rho) it becomes the symmetric operator
u -> (a u')' / 2 - V u with V = ((a sqrt(rho)')' / 2) / sqrt(rho).

Derivatives use the staggered Fourier matrix of the even periodic extension of
the grid (reflection at both ends), so the kinetic part has no spurious
null mode at the Nyquist frequency. V is computed from the same discrete
kinetic operator, which makes sqrt(rho) an exact discrete ground state and
the discrete semigroup exactly stationary for rho.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericError, ShapeError


def staggered_derivative(M: int, h: float) -> np.ndarray:
    """Periodic Fourier derivative from nodes to midpoints, for even ``M``."""
    if M % 2:
        raise ShapeError("staggered derivative needs an even period")
    m = np.arange(M)
    off = (m[:, None] - m[None, :]) % M
    return -((-1.0) ** off) * np.pi / (M**2 * h * np.sin(np.pi * (off + 0.5) / M) ** 2)


def _trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[[0, -1]] *= 0.5
    return w


@dataclass(frozen=True, eq=False)
class SpectralGenerator:
    """Eigendecomposition of a reversible 1D diffusion generator on a uniform grid.

    Attributes
    ----------
    x, w : node coordinates and trapezoid weights.
    pw : unnormalized stationary masses rho * w (scaled so max rho = 1).
    lam, vecs : eigenpairs of the symmetrized generator (all lam <= 0 up to round-off).
    """

    x: np.ndarray
    w: np.ndarray
    pw: np.ndarray
    lam: np.ndarray
    vecs: np.ndarray

    @classmethod
    def build(cls, x: np.ndarray, log_rho: np.ndarray, a_mid: np.ndarray) -> "SpectralGenerator":
        """Generator for invariant density exp(log_rho) and midpoint inverse metric ``a_mid``."""
        x = np.asarray(x, float)
        n = x.size
        h = x[1] - x[0]
        if not np.allclose(np.diff(x), h, rtol=1e-9, atol=0):
            raise ShapeError("spectral generator needs a uniform grid")
        if np.shape(a_mid) != (n - 1,) or np.shape(log_rho) != (n,):
            raise ShapeError("log_rho must be nodal and a_mid must be given at midpoints")
        M = 2 * n - 2
        # even extension of nodal values, then derivative at the M midpoints
        E = np.zeros((M, n))
        E[np.arange(n), np.arange(n)] = 1.0
        E[n + np.arange(n - 2), n - 2 - np.arange(n - 2)] = 1.0
        B = staggered_derivative(M, h) @ E
        a_ext = np.concatenate([a_mid, a_mid[::-1]])
        # each interior midpoint appears twice in the period: factor h/2 for the
        # quadrature and 1/2 for the generator
        kin = -(h / 4.0) * (B.T @ (a_ext[:, None] * B))
        w = _trapezoid_weights(n, h)
        lr = np.asarray(log_rho, float) - np.max(log_rho)
        psi = np.exp(0.5 * lr)
        V = (kin @ psi) / (w * psi)
        s = 1.0 / np.sqrt(w)
        S = s[:, None] * (kin - np.diag(w * V)) * s[None, :]
        try:
            lam, vecs = np.linalg.eigh(0.5 * (S + S.T))
        except np.linalg.LinAlgError as exc:
            raise NumericError("eigendecomposition of the generator failed") from exc
        return cls(x, w, np.exp(lr) * w, lam, vecs)

    @property
    def size(self) -> int:
        return self.x.size

    def _q(self, t: float) -> np.ndarray:
        return (self.vecs * np.exp(t * self.lam)) @ self.vecs.T

    def coupling(self, t: float) -> np.ndarray:
        """Stationary two-time law on node pairs (masses, clipped at zero)."""
        s = np.sqrt(self.pw)
        return np.maximum(s[:, None] * self._q(t) * s[None, :] / self.pw.sum(), 0.0)

    def transition(self, t: float) -> np.ndarray:
        """Transition probabilities P[i, j] from node i to node j (rows sum to one)."""
        s = np.sqrt(self.pw)
        return self._q(t) * (1.0 / s)[:, None] * s[None, :]

    def density(self, t: float) -> np.ndarray:
        """Transition densities against Lebesgue, P[i, j] / w[j]."""
        return self.transition(t) / self.w[None, :]


def padded_axis(x: np.ndarray, sqrt_g, reach: float, limits: tuple[float, float]) -> tuple[np.ndarray, int, int]:
    """Extend a uniform axis on both sides until the added Riemannian length is at least ``reach``.

    Returns the padded axis and the number of nodes added on the left and right.
    Padding stops at ``limits`` (the chart window).
    """
    h = x[1] - x[0]
    pads = []
    for sign, start, lim in ((-1.0, x[0], limits[0]), (1.0, x[-1], limits[1])):
        k, length, cur = 0, 0.0, start
        while length < reach:
            nxt = cur + sign * h
            if (sign < 0 and nxt < lim) or (sign > 0 and nxt > lim):
                break
            length += h * float(sqrt_g(0.5 * (cur + nxt)))
            cur = nxt
            k += 1
        pads.append(k)
    left, right = pads
    full = x[0] + h * np.arange(-left, x.size + right)
    return full, left, right
