"""Stabilized Sinkhorn scaling for entropic couplings on node sets.

The iteration runs on a rescaled kernel exp(log R + alpha_i + beta_j) with
ordinary scaling vectors, and absorbs the scalings into the log potentials
(alpha, beta) whenever they drift far from one. This keeps every operation a
dense matrix-vector product while remaining safe at small eps.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ..errors import ConvergenceError, NumericError, ShapeError
from .kernels import KernelMatrix

# absorb scalings once |log u| or |log v| exceeds this
ABSORB_LOG = 30.0
# reference couplings symmetric to this relative accuracy use the symmetric update
SYMMETRY_TOL = 1e-10
# log-domain fallbacks allowed before giving up
MAX_RESCUES = 1000


def _masses(m) -> np.ndarray:
    arr = np.asarray(getattr(m, "mass", m), dtype=float).reshape(-1)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ShapeError("marginals must be finite and nonnegative")
    return arr


@dataclass(frozen=True, eq=False)
class SinkhornSolution:
    """Schrodinger potentials and the entropic coupling.

    The coupling masses are exp(log_a_i + log_measure_ij + log_b_j), where
    ``log_measure`` is the kernel's reference coupling m(dx) r(x, dz) with
    quadrature weights. Nodes outside a marginal's support carry log potential
    -inf.
    """

    log_a: np.ndarray
    log_b: np.ndarray
    coupling: np.ndarray
    epsilon: float
    iterations: int
    final_residual: float
    kernel: KernelMatrix
    mu: np.ndarray
    nu: np.ndarray
    symmetric: bool = False

    @property
    def log_coupling(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.coupling)

    def marginal_errors(self) -> tuple[float, float]:
        return (float(np.abs(self.coupling.sum(1) - self.mu).sum()),
                float(np.abs(self.coupling.sum(0) - self.nu).sum()))

    def warm_start(self, epsilon: float) -> tuple[np.ndarray, np.ndarray]:
        """Potentials rescaled by eps_old / eps_new as a starting point for a smaller eps."""
        r = self.epsilon / epsilon
        return r * self.log_a, r * self.log_b


def _is_symmetric(kernel: KernelMatrix, mu: np.ndarray, nu: np.ndarray) -> bool:
    if kernel.shape[0] != kernel.shape[1] or mu.shape != nu.shape:
        return False
    if not np.array_equal(kernel.grid_x.points, kernel.grid_z.points):
        return False
    if np.max(np.abs(mu - nu)) > 1e-15:
        return False
    R = np.exp(kernel.log_measure())
    return bool(np.abs(R - R.T).max() <= SYMMETRY_TOL * R.max())


def sinkhorn(mu, nu, kernel: KernelMatrix, tol: float = 1e-10, max_iter: int = 100_000,
             symmetric: bool | None = None, init: tuple[np.ndarray, np.ndarray] | None = None
             ) -> SinkhornSolution:
    """Entropic projection of the kernel's reference coupling onto couplings of (mu, nu).

    Parameters
    ----------
    mu, nu : GridMeasure or array of masses
        Marginals on the row and column nodes.
    tol : float
        Stop when both marginal L1 errors are at most ``tol``.
    symmetric : bool, optional
        Use the averaged symmetric update (log_a = log_b); detected
        automatically when omitted.
    init : (log_a, log_b), optional
        Warm-start potentials, e.g. from :meth:`SinkhornSolution.warm_start`.

    Raises
    ------
    ConvergenceError
        When ``max_iter`` sweeps do not reach ``tol``.
    NumericError
        When non-finite values appear.
    """
    a_m, b_m = _masses(mu), _masses(nu)
    n, m = kernel.shape
    if a_m.size != n or b_m.size != m:
        raise ShapeError(f"marginals of sizes {a_m.size}, {b_m.size} do not fit a {n}x{m} kernel")
    if symmetric is None:
        symmetric = _is_symmetric(kernel, a_m, b_m)
    rows, cols = a_m > 0, b_m > 0
    logR = kernel.log_measure()[np.ix_(rows, cols)]
    mu_s, nu_s = a_m[rows], b_m[cols]
    if init is not None:
        alpha = np.asarray(init[0], float)[rows].copy()
        beta = np.asarray(init[1], float)[cols].copy()
        if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(beta))):
            alpha, beta = np.zeros(rows.sum()), np.zeros(cols.sum())
    else:
        alpha, beta = np.zeros(rows.sum()), np.zeros(cols.sum())
    if symmetric:
        beta = alpha

    log_mu, log_nu = np.log(mu_s), np.log(nu_s)

    def log_sweep(alpha, beta):
        # one log-sum-exp sweep; leaves every column (and nearly every row) of
        # the rescaled kernel with mass equal to its marginal
        a_new = log_mu - logsumexp(logR + beta[None, :], axis=1)
        if symmetric:
            a_new = 0.5 * (alpha + a_new)
            return a_new, a_new
        return a_new, log_nu - logsumexp(logR + a_new[:, None], axis=0)

    def rebuild(alpha, beta):
        K = np.exp(logR + alpha[:, None] + beta[None, :])
        if not np.all(np.isfinite(K)):
            raise NumericError("stabilized kernel overflowed")
        return K

    alpha, beta = log_sweep(alpha, beta)
    K = rebuild(alpha, beta)
    u, v = np.ones(alpha.size), np.ones(beta.size)
    err = np.inf
    it = 0
    rescues = 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        while it < max_iter:
            it += 1
            if symmetric:
                u_new = np.sqrt(u * mu_s / (K @ u))
                v_new = u_new
                row = u_new * (K @ u_new)
            else:
                u_new = mu_s / (K @ v)
                v_new = nu_s / (K.T @ u_new)
                row = u_new * (K @ v_new)
            if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(v_new))
                    and np.all(u_new > 0) and np.all(v_new > 0)):
                # a row or column of the rescaled kernel underflowed: fall back to log domain
                rescues += 1
                if rescues > MAX_RESCUES:
                    raise NumericError("Sinkhorn scalings keep leaving the floating-point range")
                alpha, beta = log_sweep(alpha + np.log(u), beta + np.log(v))
                K = rebuild(alpha, beta)
                u, v = np.ones(alpha.size), np.ones(beta.size)
                continue
            u, v = u_new, v_new
            err = float(np.abs(row - mu_s).sum())
            if err <= tol:
                break
            lu, lv = np.log(u), np.log(v)
            if max(np.abs(lu).max(), np.abs(lv).max()) > ABSORB_LOG:
                alpha = alpha + lu
                beta = alpha if symmetric else beta + lv
                K = rebuild(alpha, beta)
                u, v = np.ones(alpha.size), np.ones(beta.size)
        else:
            raise ConvergenceError("Sinkhorn did not reach tolerance", err, it)
    alpha = alpha + np.log(u)
    beta = alpha if symmetric else beta + np.log(v)
    log_pi = logR + alpha[:, None] + beta[None, :]
    pi_s = np.exp(log_pi)
    if not symmetric:
        # canonical additive gauge: E_mu[log a] = 0
        shift = float(mu_s @ alpha / mu_s.sum())
        alpha, beta = alpha - shift, beta + shift
    log_a = np.full(n, -np.inf)
    log_b = np.full(m, -np.inf)
    log_a[rows], log_b[cols] = alpha, beta
    pi = np.zeros((n, m))
    pi[np.ix_(rows, cols)] = pi_s
    if symmetric:
        pi = 0.5 * (pi + pi.T)
    res = max(float(np.abs(pi.sum(1) - a_m).sum()), float(np.abs(pi.sum(0) - b_m).sum()))
    return SinkhornSolution(log_a, log_b, pi, kernel.epsilon, it, res, kernel, a_m, b_m, bool(symmetric))
