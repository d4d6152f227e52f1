"""Counter-based random streams keyed by (seed, purpose, trajectory block).

Trajectory ``i`` belongs to block ``i // BLOCK``. Each block owns a Philox
generator and always draws a full block of variates, so the numbers seen by a
given trajectory do not depend on the ensemble size.
"""
from __future__ import annotations

import numpy as np

BLOCK = 1024

# stream purposes
INITIAL = 0
INCREMENTS = 1


def block_generator(seed: int, purpose: int, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(purpose), int(block)))
    return np.random.Generator(np.random.Philox(ss))


class BlockNormals:
    """Standard normal increments of shape ``(n, dim)`` per step, drawn in chunks of steps."""

    def __init__(self, seed: int, n: int, dim: int, purpose: int = INCREMENTS, chunk: int = 64):
        self.n, self.dim, self.chunk = int(n), int(dim), int(chunk)
        self.blocks = [block_generator(seed, purpose, b) for b in range(-(-self.n // BLOCK))]
        self._buf = np.empty((0, self.n, self.dim))
        self._pos = 0

    def _refill(self) -> None:
        draws = [g.standard_normal((self.chunk, BLOCK, self.dim)) for g in self.blocks]
        self._buf = np.concatenate(draws, axis=1)[:, : self.n]
        self._pos = 0

    def next(self) -> np.ndarray:
        if self._pos >= self._buf.shape[0]:
            self._refill()
        out = self._buf[self._pos]
        self._pos += 1
        return out


def block_uniforms(seed: int, n: int, dim: int = 1, purpose: int = INITIAL) -> np.ndarray:
    """Uniforms in (0, 1) of shape ``(n, dim)``; trajectory i's values depend only on (seed, i)."""
    nb = -(-int(n) // BLOCK)
    u = np.concatenate([block_generator(seed, purpose, b).random((BLOCK, dim)) for b in range(nb)])
    return np.clip(u[:n], 1e-300, 1 - 1e-16)
