"""Exception types and the tagged infinity used across the package."""
from __future__ import annotations

import math


class BridgelabError(Exception):
    """Base class for all package errors."""


class DomainError(BridgelabError, ValueError):
    """An input lies outside the set on which an operation is defined."""


class NumericError(BridgelabError, ArithmeticError):
    """A numerical routine produced an unusable result (NaN, singular matrix, ...)."""


class ConvergenceError(BridgelabError, RuntimeError):
    """An iterative solver stopped before reaching its tolerance.

    Attributes
    ----------
    residual : float
        Last residual seen by the solver.
    iterations : int
        Number of iterations performed.
    """

    def __init__(self, message: str, residual: float = math.nan, iterations: int = 0):
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")
        self.residual = float(residual)
        self.iterations = int(iterations)


class ShapeError(BridgelabError, ValueError):
    """Arrays or grids that must match do not."""


class UsageError(BridgelabError, ValueError):
    """Invalid configuration or command-line usage."""


class Infinite(float):
    """Positive infinity carrying the reason it was produced.

    Behaves as ``math.inf`` in arithmetic and comparisons, so callers can use
    ``math.isinf``; the ``reason`` attribute distinguishes a deliberate
    divergence (for example, a support mismatch in a relative entropy) from an
    accidental overflow.
    """

    reason: str

    def __new__(cls, reason: str = "") -> "Infinite":
        obj = super().__new__(cls, math.inf)
        obj.reason = reason
        return obj

    def __repr__(self) -> str:
        return f"Infinite({self.reason!r})"

    def __reduce__(self):
        return (Infinite, (self.reason,))
