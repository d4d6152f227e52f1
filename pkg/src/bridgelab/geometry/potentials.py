"""Convex potentials with analytic derivatives and the named registry.

Every callable takes points of shape ``(..., d)`` and returns arrays of shape
``(...)``, ``(..., d)``, ``(..., d, d)``, ``(..., d, d, d)`` and
``(..., d, d, d, d)`` for the value and the first four derivatives.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from ..errors import DomainError, UsageError

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ConvexPotential:
    """Smooth strictly convex function on a box, with derivatives up to order four.

    Parameters
    ----------
    name : str
        Registry name, echoed in reports.
    dim : int
        Dimension of the chart (1 or 2).
    value, grad, hess, third : callable
        Analytic phi and its first three derivatives.
    window : (lo, hi)
        Axis-aligned box on which evaluations are valid.
    bounds : (alpha, beta)
        Claimed spectral bounds ``alpha*I <= hess <= beta*I`` on the window.
    fourth : callable, optional
        Fourth derivative; needed for Laplacians of log-det terms.
    constant_metric : bool
        True when ``hess`` does not depend on x (flat or affine charts).
    """

    name: str
    dim: int
    value: ArrayFn
    grad: ArrayFn
    hess: ArrayFn
    third: ArrayFn
    window: tuple[np.ndarray, np.ndarray]
    bounds: tuple[float, float]
    fourth: ArrayFn | None = None
    constant_metric: bool = False
    params: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        lo, hi = (np.atleast_1d(np.asarray(b, dtype=float)) for b in self.window)
        if lo.shape != (self.dim,) or hi.shape != (self.dim,) or np.any(lo >= hi):
            raise DomainError(f"invalid window {self.window!r} for dim {self.dim}")
        object.__setattr__(self, "window", (lo, hi))

    def contains(self, x: np.ndarray, atol: float = 0.0) -> np.ndarray:
        """Boolean mask of points (shape ``(..., d)``) inside the window."""
        lo, hi = self.window
        return np.all((x >= lo - atol) & (x <= hi + atol), axis=-1)

    @property
    def center(self) -> np.ndarray:
        lo, hi = self.window
        return 0.5 * (lo + hi)


def _eye_like(x: np.ndarray, scale: np.ndarray | float = 1.0) -> np.ndarray:
    d = x.shape[-1]
    return np.broadcast_to(np.eye(d) * scale, x.shape[:-1] + (d, d)).copy()


def flat(dim: int = 1, half_width: float = 20.0) -> ConvexPotential:
    """phi(x) = |x|^2 / 2, the Euclidean chart."""
    d = dim
    return ConvexPotential(
        name="flat",
        dim=d,
        value=lambda x: 0.5 * np.sum(x * x, axis=-1),
        grad=lambda x: np.array(x, dtype=float, copy=True),
        hess=lambda x: _eye_like(x),
        third=lambda x: np.zeros(x.shape[:-1] + (d, d, d)),
        fourth=lambda x: np.zeros(x.shape[:-1] + (d, d, d, d)),
        window=(np.full(d, -half_width), np.full(d, half_width)),
        bounds=(1.0, 1.0),
        constant_metric=True,
    )


def quartic1d(half_width: float = 12.0) -> ConvexPotential:
    """phi(x) = x^2/2 + x^4/12, so that g(x) = 1 + x^2."""
    return ConvexPotential(
        name="quartic1d",
        dim=1,
        value=lambda x: (0.5 * x * x + x**4 / 12.0)[..., 0],
        grad=lambda x: x + x**3 / 3.0,
        hess=lambda x: (1.0 + x * x)[..., None],
        third=lambda x: (2.0 * x)[..., None, None],
        fourth=lambda x: np.full(x.shape + (1, 1, 1), 2.0),
        window=(np.array([-half_width]), np.array([half_width])),
        bounds=(1.0, 1.0 + half_width**2),
    )


def _logcosh(u: np.ndarray) -> np.ndarray:
    return np.logaddexp(u, -u) - np.log(2.0)


def aniso2d(half_width: float = 6.0) -> ConvexPotential:
    """phi(x, y) = x^2/2 + y^2 + log cosh(x + y) / 2.

    The Hessian is diag(1, 2) plus a rank-one bump of size sech^2(x+y)/2, so the
    metric is curved while all derivatives of order three and four stay bounded.
    """
    ones2 = np.ones((2, 2))
    ones3 = np.ones((2, 2, 2))
    ones4 = np.ones((2, 2, 2, 2))

    def u_of(x):
        return x[..., 0] + x[..., 1]

    def value(x):
        return 0.5 * x[..., 0] ** 2 + x[..., 1] ** 2 + 0.5 * _logcosh(u_of(x))

    def grad(x):
        t = 0.5 * np.tanh(u_of(x))
        return np.stack([x[..., 0] + t, 2.0 * x[..., 1] + t], axis=-1)

    def hess(x):
        s = 0.5 / np.cosh(u_of(x)) ** 2
        return np.diag([1.0, 2.0]) + s[..., None, None] * ones2

    def third(x):
        u = u_of(x)
        s = -np.tanh(u) / np.cosh(u) ** 2
        return s[..., None, None, None] * ones3

    def fourth(x):
        u = u_of(x)
        sech2 = 1.0 / np.cosh(u) ** 2
        s = 2.0 * sech2 * np.tanh(u) ** 2 - sech2**2
        return s[..., None, None, None, None] * ones4

    return ConvexPotential(
        name="aniso2d",
        dim=2,
        value=value,
        grad=grad,
        hess=hess,
        third=third,
        fourth=fourth,
        window=(np.full(2, -half_width), np.full(2, half_width)),
        bounds=(1.0, 3.0),
    )


def affine(S, m, half_width: float = 20.0) -> ConvexPotential:
    """phi(x) = x^T S x / 2 + m.x, whose gradient map x -> Sx + m is affine."""
    S = np.atleast_2d(np.asarray(S, dtype=float))
    m = np.atleast_1d(np.asarray(m, dtype=float))
    d = S.shape[0]
    if S.shape != (d, d) or m.shape != (d,):
        raise DomainError(f"affine potential needs square S and matching m, got {S.shape}, {m.shape}")
    if not np.allclose(S, S.T, atol=1e-14):
        raise DomainError("S must be symmetric")
    eig = np.linalg.eigvalsh(S)
    if eig[0] <= 0:
        raise DomainError("S must be positive definite")
    return ConvexPotential(
        name="affine",
        dim=d,
        value=lambda x: 0.5 * np.einsum("...i,ij,...j->...", x, S, x) + x @ m,
        grad=lambda x: x @ S.T + m,
        hess=lambda x: np.broadcast_to(S, x.shape[:-1] + (d, d)).copy(),
        third=lambda x: np.zeros(x.shape[:-1] + (d, d, d)),
        fourth=lambda x: np.zeros(x.shape[:-1] + (d, d, d, d)),
        window=(np.full(d, -half_width), np.full(d, half_width)),
        bounds=(float(eig[0]), float(eig[-1])),
        constant_metric=True,
        params={"S": S.tolist(), "m": m.tolist()},
    )


def _parse_affine(text: str) -> ConvexPotential:
    # "affine:<S entries>,<m entries>", entries space separated.
    # One S entry: 1D. Two: diagonal 2D. Four: full 2x2 (row major).
    try:
        s_txt, m_txt = text.split(",")
        s_vals = [float(v) for v in s_txt.split()]
        m_vals = [float(v) for v in m_txt.split()]
    except ValueError as exc:
        raise UsageError(f"cannot parse affine potential {text!r}; expected 'affine:S,m'") from exc
    if len(s_vals) == 1:
        S = np.array([[s_vals[0]]])
    elif len(s_vals) == 2:
        S = np.diag(s_vals)
    elif len(s_vals) == 4:
        S = np.array(s_vals).reshape(2, 2)
    else:
        raise UsageError(f"affine S must have 1, 2 or 4 entries, got {len(s_vals)}")
    return affine(S, m_vals)


_REGISTRY: dict[str, Callable[..., ConvexPotential]] = {
    "flat": flat,
    "quartic1d": quartic1d,
    "aniso2d": aniso2d,
    "affine": affine,
}

SHIPPED = ("flat", "quartic1d", "aniso2d", "affine:2,1")


def get_potential(spec: str | Mapping[str, object]) -> ConvexPotential:
    """Build a registered potential from a name or a config mapping.

    Accepted forms: ``"flat"``, ``"flat2d"``, ``"quartic1d"``, ``"aniso2d"``,
    ``"affine:2,1"``, ``"affine:2 4,0 0"`` or a mapping such as
    ``{"name": "affine", "S": [[2]], "m": [1]}``.
    """
    if isinstance(spec, str):
        if spec.startswith("affine:"):
            return _parse_affine(spec[len("affine:"):])
        if spec == "flat2d":
            return flat(2)
        if spec not in _REGISTRY or spec == "affine":
            raise UsageError(f"unknown potential {spec!r}; known: {sorted(_REGISTRY)}")
        return _REGISTRY[spec]()
    kwargs = dict(spec)
    name = kwargs.pop("name", None)
    if name not in _REGISTRY:
        raise UsageError(f"unknown potential {name!r}; known: {sorted(_REGISTRY)}")
    return _REGISTRY[name](**kwargs)


def register_potential(name: str, factory: Callable[..., ConvexPotential]) -> None:
    """Add a potential factory to the registry used by configs."""
    _REGISTRY[name] = factory


# finite-difference cross-checks (never the primary path)

def fd_hess(pot: ConvexPotential, x: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central differences of ``grad``; returns ``(d, d)``."""
    x = np.asarray(x, dtype=float)
    d = pot.dim
    out = np.empty((d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = step * max(1.0, abs(x[j]))
        out[:, j] = (pot.grad(x + e) - pot.grad(x - e)) / (2 * e[j])
    return 0.5 * (out + out.T)


def fd_third(pot: ConvexPotential, x: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central differences of ``hess``; returns ``(d, d, d)`` indexed [i, j, k] = d_k g_ij."""
    x = np.asarray(x, dtype=float)
    d = pot.dim
    out = np.empty((d, d, d))
    for k in range(d):
        e = np.zeros(d)
        e[k] = step * max(1.0, abs(x[k]))
        out[:, :, k] = (pot.hess(x + e) - pot.hess(x - e)) / (2 * e[k])
    return out


def check_potential(pot: ConvexPotential, n_samples: int = 200, seed: int = 0,
                    fd_step: float = 1e-4) -> dict[str, float]:
    """Measure how well a potential meets its declared invariants on random window points.

    Returns the worst Hessian asymmetry, the spectral bound violation (positive
    means violated), third-derivative asymmetry and the finite-difference
    mismatch between ``hess`` and ``third``.
    """
    rng = np.random.default_rng(seed)
    lo, hi = pot.window
    x = lo + (hi - lo) * rng.random((n_samples, pot.dim))
    H = pot.hess(x)
    T = pot.third(x)
    eig = np.linalg.eigvalsh(0.5 * (H + np.swapaxes(H, -1, -2)))
    alpha, beta = pot.bounds
    third_asym = max(
        np.abs(T - np.transpose(T, perm)).max()
        for perm in [(0, 2, 1, 3), (0, 1, 3, 2), (0, 3, 2, 1)]
    )
    fd_err = max(
        np.abs(fd_third(pot, xi, fd_step) - pot.third(xi)).max() / max(1.0, np.abs(pot.third(xi)).max())
        for xi in x[: min(20, n_samples)]
    )
    return {
        "hess_asymmetry": float(np.abs(H - np.swapaxes(H, -1, -2)).max()),
        "bound_violation": float(max(alpha - eig.min(), eig.max() - beta)),
        "third_asymmetry": float(third_asym),
        "third_fd_error": float(fd_err),
    }
