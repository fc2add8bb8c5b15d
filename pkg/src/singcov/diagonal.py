from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

__all__ = ["DiagonalEstimate"]


@dataclass(frozen=True)
class DiagonalEstimate:
    """``diag(lam_1..lam_N, mu, ..., mu)`` for a rank-N diagonal matrix of size ``dim``.

    ``positions`` lists which of the ``dim`` diagonal slots are the positive
    block; the remaining slots all carry ``mu``.  ``stderr`` is set only for
    Monte Carlo results and covers all ``dim`` slots.
    """

    lam: NDArray[np.float64]
    mu: float | None
    dim: int
    positions: NDArray[np.intp]
    method_used: str
    stderr: NDArray[np.float64] | None = None

    def __post_init__(self):
        if self.mu is None and self.lam.size != self.dim:
            raise ValueError("mu may be absent only when the matrix has full rank")

    @property
    def rank(self) -> int:
        return self.lam.size

    def diagonal(self) -> NDArray[np.float64]:
        out = np.empty(self.dim)
        if self.mu is not None:
            out[:] = self.mu
        out[self.positions] = self.lam
        return out
