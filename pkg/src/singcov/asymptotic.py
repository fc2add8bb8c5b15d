"""Large-N approximations for mu and lambda from the eta and Shannon transforms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DegenerateError, EvaluationError, InputError

__all__ = [
    "AsymptoticResult",
    "eta_transform",
    "shannon_transform",
    "mu_asymptotic",
    "dmu_dd",
    "lambda_asymptotic",
    "solve_asymptotic",
]

RESIDUAL_TOL = 1e-12
NEWTON_STEPS = 50


@dataclass(frozen=True)
class AsymptoticResult:
    mu: float
    lam: NDArray[np.float64]
    beta: float
    residual: float


def _spectrum(d: ArrayLike) -> NDArray[np.float64]:
    arr = np.asarray(d, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InputError("spectrum must be a non-empty vector")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise InputError("spectrum entries must be finite and positive")
    return arr


def eta_transform(d: ArrayLike, gamma: float) -> float:
    """``(1/N) sum 1/(1 + gamma d_k)``."""
    if not gamma > 0:
        raise InputError("gamma must be positive")
    arr = np.asarray(d, dtype=np.float64)
    return float(np.mean(1.0 / (1.0 + gamma * arr)))


def shannon_transform(d: ArrayLike, gamma: float) -> float:
    """``(1/N) sum log(1 + gamma d_k)``."""
    if not gamma > 0:
        raise InputError("gamma must be positive")
    arr = np.asarray(d, dtype=np.float64)
    return float(np.mean(np.log1p(gamma * arr)))


def _g(mu: float, d: NDArray, target: float) -> float:
    return float(np.sum(1.0 / (1.0 + mu * d)) - target)


def mu_asymptotic(d: ArrayLike, L: int) -> float:
    """Positive root of ``sum_k 1/(1 + mu d_k) = N - L``."""
    arr = _spectrum(d)
    n = arr.size
    if L >= n:
        raise DegenerateError(f"mu is infinite when L >= N (L={L}, N={n}); choose L < N")
    if L < 1:
        raise InputError("L must be at least 1")
    target = float(n - L)
    lo, hi = 0.0, 1.0 / float(arr.min())
    while _g(hi, arr, target) > 0:
        lo, hi = hi, hi * 2.0
        if not np.isfinite(hi):
            raise EvaluationError("could not bracket mu")
    # g is decreasing and convex, so bisection to a tight bracket then Newton is safe
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _g(mid, arr, target) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-10 * hi:
            break
    mu = 0.5 * (lo + hi)
    for _ in range(NEWTON_STEPS):
        q = 1.0 / (1.0 + mu * arr)
        g = float(q.sum() - target)
        dg = -float(np.sum(arr * q * q))
        step = g / dg
        nxt = mu - step
        if not lo <= nxt <= hi:
            nxt = 0.5 * (lo + hi)
        if _g(nxt, arr, target) > 0:
            lo = nxt
        else:
            hi = nxt
        if abs(nxt - mu) <= 4 * np.finfo(float).eps * mu:
            mu = nxt
            break
        mu = nxt
    return mu


def dmu_dd(d: ArrayLike, mu: float, k: int | None = None):
    """Implicit derivative of mu with respect to ``d_k`` (all k when ``k`` is None)."""
    arr = _spectrum(d)
    if not mu > 0:
        raise InputError("mu must be positive")
    denom = float(np.sum(arr / (1.0 + mu * arr) ** 2))
    grad = -mu / ((1.0 + mu * arr) ** 2 * denom)
    return grad if k is None else float(grad[k])


def lambda_asymptotic(d: ArrayLike, L: int) -> NDArray[np.float64]:
    """``lambda_k ~ dmu_k sum_i d_i/(1+mu d_i) + mu/(1+mu d_k) - (L/mu) dmu_k``."""
    return solve_asymptotic(d, L).lam


def solve_asymptotic(d: ArrayLike, L: int) -> AsymptoticResult:
    arr = _spectrum(d)
    mu = mu_asymptotic(arr, L)
    dmu = dmu_dd(arr, mu)
    s = float(np.sum(arr / (1.0 + mu * arr)))
    lam = dmu * s + mu / (1.0 + mu * arr) - (L / mu) * dmu
    residual = abs(_g(mu, arr, float(arr.size - L))) / arr.size
    return AsymptoticResult(mu=mu, lam=lam, beta=arr.size / L, residual=residual)
