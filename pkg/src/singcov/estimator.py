"""Public estimators ``invcov_L(K)`` and ``cov_L(K)`` on full Hermitian matrices."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .asymptotic import solve_asymptotic
from .diagonal import DiagonalEstimate
from .errors import DegenerateError, InputError, RankError
from .exact.engine import MAX_N, cov_closed_form, invcov_diag_exact
from .haar import RngStream, mc_invcov_diagonal
from .spectral import CLUSTER_RTOL, Spectrum, eig_hermitian

__all__ = [
    "EstimatorConfig",
    "DiagonalEstimate",
    "invcov",
    "invcov_estimate",
    "diagonal_estimate",
    "cov",
    "sigma_estimate_via_invcov",
]

Method = Literal["auto", "exact", "asymptotic", "monte-carlo"]
METHODS = ("auto", "exact", "asymptotic", "monte-carlo")
MIN_SAMPLES = 100


@dataclass(frozen=True)
class EstimatorConfig:
    """Settings shared by all estimators.

    ``method='auto'`` uses the exact engine up to rank 64 and the asymptotic
    engine above it.
    """

    L: int
    method: Method = "auto"
    samples: int = 100_000
    seed: int = 0
    degeneracy_tol: float = CLUSTER_RTOL
    cov_rescale: bool = True
    threads: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if int(self.L) < 1:
            raise InputError(f"L must be at least 1, got {self.L}")
        if self.method not in METHODS:
            raise InputError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.method == "monte-carlo" and self.samples < MIN_SAMPLES:
            raise InputError(f"monte-carlo needs at least {MIN_SAMPLES} samples")
        if not 0 < self.degeneracy_tol < 1:
            raise InputError("degeneracy_tol must lie in (0, 1)")

    def with_L(self, L: int) -> EstimatorConfig:
        return EstimatorConfig(
            L=L,
            method=self.method,
            samples=self.samples,
            seed=self.seed,
            degeneracy_tol=self.degeneracy_tol,
            cov_rescale=self.cov_rescale,
            threads=self.threads,
        )


def _psd_spectrum(K: ArrayLike) -> Spectrum:
    spec = eig_hermitian(K)
    if spec.eigvals[-1] < -spec.tol_zero:
        raise InputError(f"K must be positive semidefinite (smallest eigenvalue {spec.eigvals[-1]:.3g})")
    if spec.rank == 0:
        raise RankError("K is zero")
    return spec


def diagonal_estimate(spec: Spectrum, cfg: EstimatorConfig) -> DiagonalEstimate:
    """Diagonal of invcov in the eigenbasis of an already decomposed PSD matrix."""
    L = cfg.L
    m, n = spec.dim, spec.rank
    d = spec.clean_eigvals()
    positions = np.arange(n)
    if L > n:
        raise RankError(f"L={L} exceeds rank(K)={n}")
    if L == n and m == n:
        return DiagonalEstimate(lam=1.0 / d, mu=None, dim=m, positions=positions, method_used="exact")
    if L == n:
        raise DegenerateError(
            f"L={L} equals rank(K)={n} < M={m}: the zero-block value is infinite; choose L < {n}"
        )
    method = cfg.method
    if method == "auto":
        method = "exact" if n <= MAX_N else "asymptotic"
    if method == "exact":
        return invcov_diag_exact(d, L, rtol=cfg.degeneracy_tol, fallback_samples=cfg.samples, seed=cfg.seed)
    if method == "asymptotic":
        res = solve_asymptotic(d[:n], L)
        return DiagonalEstimate(
            lam=res.lam, mu=res.mu if m > n else None, dim=m, positions=positions, method_used="asymptotic"
        )
    est = mc_invcov_diagonal(d, L, cfg.samples, RngStream(cfg.seed), threads=cfg.threads)
    return DiagonalEstimate(
        lam=est.mean[:n].copy(),
        mu=float(est.mean[n]) if m > n else None,
        dim=m,
        positions=positions,
        method_used="monte-carlo",
        stderr=est.stderr.copy(),
    )


def invcov_estimate(K: ArrayLike, cfg: EstimatorConfig) -> tuple[Spectrum, DiagonalEstimate]:
    """Eigendecomposition of ``K`` and the diagonal of ``invcov_L`` in that eigenbasis."""
    spec = _psd_spectrum(K)
    return spec, diagonal_estimate(spec, cfg)


def invcov(K: ArrayLike, cfg: EstimatorConfig) -> NDArray[np.complex128]:
    """``E[Phi* (Phi K Phi*)^{-1} Phi]`` over L x M Haar matrices, as ``U invcov_L(D) U*``."""
    spec, est = invcov_estimate(K, cfg)
    return spec.reconstruct(est.diagonal())


def cov(K: ArrayLike, cfg: EstimatorConfig) -> NDArray[np.complex128]:
    """Closed-form ``cov_L(K)``, rescaled by ``M/L`` when ``cfg.cov_rescale`` is set."""
    return cov_closed_form(K, cfg.L, cfg.cov_rescale)


def sigma_estimate_via_invcov(K: ArrayLike, cfg: EstimatorConfig) -> NDArray[np.complex128]:
    """Inverse of ``invcov(K)``, an estimate of the covariance itself."""
    spec, est = invcov_estimate(K, cfg)
    diag = est.diagonal()
    if np.any(diag <= 0):
        raise DegenerateError("invcov estimate is not positive definite; cannot invert")
    return spec.reconstruct(1.0 / diag)
