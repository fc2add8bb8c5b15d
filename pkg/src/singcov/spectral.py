"""Matrix validation, Hermitian eigendecomposition, covariance generators and error metrics.

Matrices are plain numpy arrays.  ``as_complex_matrix`` and ``as_hermitian``
validate and copy their input into read-only complex arrays; everything else
in the package goes through them at its public boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InputError, StructureError

__all__ = [
    "Spectrum",
    "as_complex_matrix",
    "as_hermitian",
    "sample_covariance",
    "eig_hermitian",
    "eigenvalue_clusters",
    "zero_tolerance",
    "toeplitz_exp",
    "frobenius_paper",
    "frobenius_standard",
    "random_unitary",
    "complex_gaussian",
]

HERMITIAN_RTOL = 1e-12
CLUSTER_RTOL = 1e-6


def _frozen(a: NDArray) -> NDArray:
    a.setflags(write=False)
    return a


def as_complex_matrix(a: ArrayLike) -> NDArray[np.complex128]:
    """Validate a 2-D finite array and return a read-only complex copy."""
    arr = np.array(a, dtype=np.complex128)
    if arr.ndim != 2:
        raise StructureError(f"expected a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise StructureError("matrix has non-finite entries")
    return _frozen(arr)


def as_hermitian(a: ArrayLike) -> NDArray[np.complex128]:
    """Validate Hermitian structure (``max|A - A*| <= 1e-12 max|A|``) and return a symmetrized copy."""
    arr = np.array(as_complex_matrix(a))
    n, m = arr.shape
    if n != m or n < 1:
        raise StructureError(f"Hermitian matrix must be square and non-empty, got {arr.shape}")
    scale = float(np.max(np.abs(arr)))
    if np.max(np.abs(arr - arr.conj().T)) > HERMITIAN_RTOL * scale:
        raise StructureError("matrix is not Hermitian")
    arr = 0.5 * (arr + arr.conj().T)
    return _frozen(arr)


def complex_gaussian(rng: np.random.Generator, shape) -> NDArray[np.complex128]:
    """Circularly-symmetric standard complex Gaussian samples (unit variance)."""
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) * np.sqrt(0.5)


def random_unitary(n: int, rng: np.random.Generator) -> NDArray[np.complex128]:
    """Haar-distributed n x n unitary (QR with phase correction)."""
    q, r = np.linalg.qr(complex_gaussian(rng, (n, n)))
    ph = np.diagonal(r)
    return q * (ph / np.abs(ph))[None, :]


def sample_covariance(x: ArrayLike) -> NDArray[np.complex128]:
    """Return ``(1/N) X X*`` for an ``M x N`` data matrix whose columns are observations."""
    arr = as_complex_matrix(x)
    if arr.size == 0:
        raise InputError("data matrix is empty")
    n = arr.shape[1]
    k = arr @ arr.conj().T / n
    return _frozen(0.5 * (k + k.conj().T))


def zero_tolerance(eigvals: NDArray[np.float64]) -> float:
    """Rank cut ``dim * eps * max|eigval|``."""
    if eigvals.size == 0:
        return 0.0
    return eigvals.size * np.finfo(np.float64).eps * float(np.max(np.abs(eigvals)))


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition ``K = U diag(eigvals) U*`` with eigenvalues in descending order."""

    eigvecs: NDArray[np.complex128]
    eigvals: NDArray[np.float64]
    rank: int

    @property
    def dim(self) -> int:
        return self.eigvals.size

    @property
    def tol_zero(self) -> float:
        return zero_tolerance(self.eigvals)

    def clean_eigvals(self) -> NDArray[np.float64]:
        """Eigenvalues with everything at or below the rank cut set to exactly zero."""
        d = self.eigvals.copy()
        d[self.rank:] = 0.0
        return d

    def reconstruct(self, diagonal: ArrayLike | None = None) -> NDArray[np.complex128]:
        diag = self.eigvals if diagonal is None else np.asarray(diagonal)
        out = (self.eigvecs * diag[None, :]) @ self.eigvecs.conj().T
        return 0.5 * (out + out.conj().T)

    def clusters(self, rtol: float = CLUSTER_RTOL) -> list[list[int]]:
        return eigenvalue_clusters(self.eigvals[: self.rank], rtol)


def eig_hermitian(k: ArrayLike) -> Spectrum:
    """Eigendecomposition of a Hermitian matrix, descending, with numerical rank."""
    a = as_hermitian(k)
    w, v = np.linalg.eigh(a)
    w = w[::-1].copy()
    v = v[:, ::-1].copy()
    tol = zero_tolerance(w)
    rank = int(np.sum(w > tol))
    return Spectrum(eigvecs=_frozen(v), eigvals=_frozen(w), rank=rank)


def eigenvalue_clusters(eigvals: ArrayLike, rtol: float = CLUSTER_RTOL) -> list[list[int]]:
    """Group indices of a descending positive sequence whose relative gaps are below ``rtol``.

    Only groups with at least two members are returned.
    """
    d = np.asarray(eigvals, dtype=np.float64)
    groups: list[list[int]] = []
    current = [0] if d.size else []
    for i in range(1, d.size):
        scale = max(abs(d[i - 1]), abs(d[i]))
        if scale > 0 and abs(d[i - 1] - d[i]) < rtol * scale:
            current.append(i)
        else:
            if len(current) > 1:
                groups.append(current)
            current = [i]
    if len(current) > 1:
        groups.append(current)
    return groups


def toeplitz_exp(m: int, beta: float) -> NDArray[np.float64]:
    """Toeplitz covariance with entries ``exp(-|i-j|/beta)``."""
    if m < 1:
        raise InputError("dimension must be at least 1")
    if not beta > 0:
        raise InputError(f"beta must be positive, got {beta}")
    idx = np.arange(m)
    return _frozen(np.exp(-np.abs(idx[:, None] - idx[None, :]) / beta))


def frobenius_paper(a: ArrayLike) -> float:
    """Squared Frobenius norm divided by dim**2, without a square root."""
    arr = np.asarray(a)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise StructureError("frobenius_paper expects a square matrix")
    n = arr.shape[0]
    return float(np.sum(np.abs(arr) ** 2) / n**2)


def frobenius_standard(a: ArrayLike) -> float:
    """``sqrt(Tr(A* A))``."""
    return float(np.linalg.norm(np.asarray(a), "fro"))
