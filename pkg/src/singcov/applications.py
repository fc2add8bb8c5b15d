"""Consumers of invcov: a trained linear estimator, a quadratic classifier and reduced-dimension Capon power."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DegenerateError, EnsembleError, InputError, RankError
from .estimator import EstimatorConfig, invcov
from .haar import McEstimate, RngStream, mc_expectation, sample_haar_batch
from .spectral import as_complex_matrix, as_hermitian, complex_gaussian, eig_hermitian

__all__ = [
    "SteeringContext",
    "householder_complement",
    "capon_conventional",
    "capon_full",
    "capon_power",
    "capon_power_mc",
    "LinearEstimator",
    "linear_train",
    "linear_apply",
    "mse_penalty",
    "linear_predicted_mse",
    "linear_mse_mc",
    "QuadraticClassifier",
    "classifier_train",
    "classify",
    "roc_sweep",
    "calibrate_gamma",
]


def _vector(a: ArrayLike, name: str = "vector") -> NDArray[np.complex128]:
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.ravel()
    if arr.ndim != 1 or arr.size == 0:
        raise InputError(f"{name} must be a non-empty vector")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} has non-finite entries")
    return arr


# -- Capon ------------------------------------------------------------------


@dataclass(frozen=True)
class SteeringContext:
    """Unit steering vector ``a`` and an orthonormal basis ``A_perp`` (rows) of its complement."""

    a: NDArray[np.complex128]
    A_perp: NDArray[np.complex128]

    @property
    def Q(self) -> NDArray[np.complex128]:
        return np.vstack([self.a.conj()[None, :], self.A_perp])


def householder_complement(a: ArrayLike) -> SteeringContext:
    """Rows 2..M of the Householder reflector mapping ``a`` onto a multiple of ``e_1``."""
    v = _vector(a, "steering vector")
    norm = np.linalg.norm(v)
    if norm == 0:
        raise InputError("steering vector is zero")
    if abs(norm - 1.0) > 1e-12:
        warnings.warn(f"steering vector has norm {norm:.6g}; normalizing", RuntimeWarning, stacklevel=2)
    v = v / norm
    m = v.size
    if m == 1:
        return SteeringContext(a=v, A_perp=np.zeros((0, 1), dtype=np.complex128))
    phase = v[0] / abs(v[0]) if v[0] != 0 else 1.0
    alpha = -phase
    w = v.copy()
    w[0] -= alpha
    h = np.eye(m, dtype=np.complex128) - 2.0 * np.outer(w, w.conj()) / np.vdot(w, w).real
    return SteeringContext(a=v, A_perp=h[1:])


def capon_conventional(K: ArrayLike, a: ArrayLike) -> float:
    """``a* K a``."""
    k = as_hermitian(K)
    v = _vector(a)
    return float(np.vdot(v, k @ v).real)


def capon_full(K: ArrayLike, a: ArrayLike) -> float:
    """``1 / (a* K^{-1} a)``; needs ``K`` of full rank."""
    k = as_hermitian(K)
    v = _vector(a)
    spec = eig_hermitian(k)
    if spec.rank < spec.dim:
        raise RankError(f"K has rank {spec.rank} < {spec.dim}; the full Capon estimate needs an invertible K")
    return float(1.0 / np.vdot(v, np.linalg.solve(k, v)).real)


def capon_power(K: ArrayLike, a: ArrayLike, L: int, cfg: EstimatorConfig | None = None) -> float:
    """Ensemble-averaged reduced Capon power.

    ``a*Ka - a*K A_perp* invcov_{L-1}(A_perp K A_perp*) A_perp K a``; the
    estimator settings other than ``L`` come from ``cfg``.
    """
    k = as_hermitian(K)
    ctx = householder_complement(a)
    if L < 2:
        raise InputError("reduced Capon needs L >= 2")
    if L > k.shape[0]:
        raise InputError(f"L={L} exceeds M={k.shape[0]}")
    v = ctx.a
    inner = ctx.A_perp @ k @ ctx.A_perp.conj().T
    inner = 0.5 * (inner + inner.conj().T)
    rank = eig_hermitian(inner).rank
    if L - 1 > rank:
        raise RankError(f"L-1={L - 1} exceeds rank(A_perp K A_perp*)={rank}")
    base = cfg if cfg is not None else EstimatorConfig(L=L - 1)
    b = ctx.A_perp @ (k @ v)
    if not np.any(b):
        return float(np.vdot(v, k @ v).real)
    icov = invcov(inner, base.with_L(L - 1))
    return float((np.vdot(v, k @ v) - np.vdot(b, icov @ b)).real)


def capon_power_mc(K: ArrayLike, a: ArrayLike, L: int, S: int, rng: RngStream) -> McEstimate:
    """Direct Monte Carlo of ``E[1 / (a* Phi* (Phi K Phi*)^{-1} Phi a)]`` over the constrained ensemble.

    ``Phi = [a*; Theta A_perp]`` with ``Theta`` an (L-1) x (M-1) Haar matrix.
    """
    k = as_hermitian(K)
    ctx = householder_complement(a)
    m = k.shape[0]
    if not 2 <= L <= m:
        raise InputError(f"need 2 <= L <= M, got L={L}, M={m}")
    rank = eig_hermitian(k).rank
    if L > rank:
        raise EnsembleError(f"L={L} exceeds rank(K)={rank}: every Phi K Phi* is singular")

    def draw(gen, count, offset):
        theta = sample_haar_batch(L - 1, m - 1, count, gen)
        phi = np.concatenate([np.broadcast_to(ctx.a.conj(), (count, 1, m)), theta @ ctx.A_perp], axis=1)
        reduced = phi @ k @ np.conj(np.swapaxes(phi, -1, -2))
        pa = phi @ ctx.a
        sol = np.linalg.solve(reduced, pa[..., None])[..., 0]
        return 1.0 / np.einsum("bi,bi->b", pa.conj(), sol).real

    return mc_expectation(draw, S, rng)


# -- linear estimator -------------------------------------------------------


@dataclass(frozen=True)
class LinearEstimator:
    weight: NDArray[np.complex128]
    L_used: int


def linear_train(X: ArrayLike, Y: ArrayLike, L: int, cfg: EstimatorConfig | None = None) -> LinearEstimator:
    """Weight ``X Y* invcov_L(Y Y*)`` from paired training columns."""
    x = as_complex_matrix(X)
    y = as_complex_matrix(Y)
    if x.shape[1] != y.shape[1]:
        raise InputError(f"X and Y need the same number of columns, got {x.shape[1]} and {y.shape[1]}")
    n = y.shape[1]
    if n < 1:
        raise InputError("need at least one training column")
    if L > n:
        raise RankError(f"L={L} exceeds the number of training columns N={n}")
    base = cfg if cfg is not None else EstimatorConfig(L=L)
    gram = y @ y.conj().T
    weight = x @ y.conj().T @ invcov(gram, base.with_L(L))
    return LinearEstimator(weight=weight, L_used=L)


def linear_apply(est: LinearEstimator, y: ArrayLike) -> NDArray[np.complex128]:
    arr = np.asarray(y, dtype=np.complex128)
    if arr.shape[0] != est.weight.shape[1]:
        raise InputError(f"observation has length {arr.shape[0]}, expected {est.weight.shape[1]}")
    return est.weight @ arr


def mse_penalty(N: int, L: int) -> float:
    """Large-sample penalty ``1 + L/(N-L)`` for estimating statistics from N samples in L dimensions."""
    if L >= N:
        raise DegenerateError(f"penalty is infinite for L >= N (L={L}, N={N})")
    if L < 1:
        raise InputError("L must be at least 1")
    return 1.0 + L / (N - L)


def _split_joint(K_joint: ArrayLike, m_x: int):
    k = as_hermitian(K_joint)
    if not 1 <= m_x < k.shape[0]:
        raise InputError("m_x must leave at least one y coordinate")
    return k, k[:m_x, :m_x], k[:m_x, m_x:], k[m_x:, m_x:]


def linear_predicted_mse(K_joint: ArrayLike, m_x: int, N: int, phi: ArrayLike) -> NDArray[np.complex128]:
    """Reduced-observation MMSE times the penalty ``1 + L/(N-L)``, for one fixed ``phi``."""
    _, kx, kxy, ky = _split_joint(K_joint, m_x)
    p = np.asarray(phi, dtype=np.complex128)
    L = p.shape[0]
    reduced = kx - kxy @ p.conj().T @ np.linalg.solve(p @ ky @ p.conj().T, p @ kxy.conj().T)
    return reduced * mse_penalty(N, L)


def linear_mse_mc(
    K_joint: ArrayLike,
    m_x: int,
    N: int,
    L: int,
    trials: int,
    rng: RngStream,
    *,
    phi: ArrayLike | None = None,
    cfg: EstimatorConfig | None = None,
    tests_per_trial: int = 20,
) -> McEstimate:
    """Simulated error covariance of a trained linear estimator.

    Each trial draws N joint training columns and ``tests_per_trial`` fresh
    ``(x, y)`` pairs.  With ``phi`` the single-matrix estimator
    ``X Y* phi* (phi Y Y* phi*)^{-1} phi`` is used; otherwise the
    ensemble-averaged one built from invcov.
    """
    k, kx, kxy, ky = _split_joint(K_joint, m_x)
    try:
        chol = np.linalg.cholesky(k)
    except np.linalg.LinAlgError:
        raise InputError("joint covariance must be positive definite") from None
    base = cfg if cfg is not None else EstimatorConfig(L=L)
    fixed = None if phi is None else np.asarray(phi, dtype=np.complex128)

    def draw(gen, count, offset):
        out = np.empty((count, m_x, m_x), dtype=np.complex128)
        for t in range(count):
            z = chol @ complex_gaussian(gen, (k.shape[0], N + tests_per_trial))
            x_tr, y_tr = z[:m_x, :N], z[m_x:, :N]
            x_te, y_te = z[:m_x, N:], z[m_x:, N:]
            if fixed is None:
                w = linear_train(x_tr, y_tr, L, base).weight
            else:
                py = fixed @ y_tr
                w = x_tr @ py.conj().T @ np.linalg.solve(py @ py.conj().T, fixed)
            err = w @ y_te - x_te
            out[t] = err @ err.conj().T / tests_per_trial
        return out

    return mc_expectation(draw, trials, rng)


# -- classifier -------------------------------------------------------------


@dataclass(frozen=True)
class QuadraticClassifier:
    """Decide H1 when ``-x* Q x > gamma`` with ``Q = invcov_L(X1 X1*) - invcov_L(X0 X0*)``."""

    Q: NDArray[np.complex128]
    gamma: float = 0.0

    def with_gamma(self, gamma: float) -> QuadraticClassifier:
        return QuadraticClassifier(Q=self.Q, gamma=float(gamma))

    def statistic(self, x: ArrayLike) -> NDArray[np.float64]:
        """Statistic for one vector or for each column of a matrix."""
        arr = np.asarray(x, dtype=np.complex128)
        if arr.shape[0] != self.Q.shape[0]:
            raise InputError(f"observation has length {arr.shape[0]}, expected {self.Q.shape[0]}")
        if arr.ndim == 1:
            return -np.vdot(arr, self.Q @ arr).real
        return -np.einsum("ij,ij->j", arr.conj(), self.Q @ arr).real


def classifier_train(
    X0: ArrayLike, X1: ArrayLike, L: int, cfg: EstimatorConfig | None = None, gamma: float = 0.0
) -> QuadraticClassifier:
    x0 = as_complex_matrix(X0)
    x1 = as_complex_matrix(X1)
    if x0.shape[0] != x1.shape[0]:
        raise InputError(f"training sets have dimensions {x0.shape[0]} and {x1.shape[0]}")
    if L > min(x0.shape[1], x1.shape[1]):
        raise RankError(f"L={L} exceeds the training size {min(x0.shape[1], x1.shape[1])}")
    base = cfg if cfg is not None else EstimatorConfig(L=L)
    q = invcov(x1 @ x1.conj().T, base.with_L(L)) - invcov(x0 @ x0.conj().T, base.with_L(L))
    return QuadraticClassifier(Q=0.5 * (q + q.conj().T), gamma=float(gamma))


def classify(clf: QuadraticClassifier, x: ArrayLike) -> tuple[NDArray[np.int_], NDArray[np.float64]]:
    """Return ``(decisions, statistics)``; decision 1 means H1."""
    stat = np.atleast_1d(clf.statistic(x))
    return (stat > clf.gamma).astype(int), stat


def roc_sweep(clf: QuadraticClassifier, X0: ArrayLike, X1: ArrayLike, gammas: ArrayLike | None = None):
    """Rows ``(gamma, true-positive rate, false-positive rate, accuracy)`` over thresholds.

    Columns of ``X0``/``X1`` are labelled samples; by default every observed
    statistic is tried as a threshold.
    """
    s0 = np.atleast_1d(clf.statistic(as_complex_matrix(X0)))
    s1 = np.atleast_1d(clf.statistic(as_complex_matrix(X1)))
    if gammas is None:
        both = np.sort(np.concatenate([s0, s1]))
        gammas = np.concatenate([[both[0] - 1.0], 0.5 * (both[1:] + both[:-1]), [both[-1] + 1.0]])
    rows = []
    for g in np.asarray(gammas, dtype=np.float64):
        tpr = float(np.mean(s1 > g))
        fpr = float(np.mean(s0 > g))
        acc = (tpr * s1.size + (1 - fpr) * s0.size) / (s0.size + s1.size)
        rows.append((float(g), tpr, fpr, acc))
    return rows


def calibrate_gamma(clf: QuadraticClassifier, X0: ArrayLike, X1: ArrayLike) -> QuadraticClassifier:
    """Classifier with the threshold that maximizes accuracy on the labelled columns."""
    rows = roc_sweep(clf, X0, X1)
    best = max(rows, key=lambda r: r[3])
    return clf.with_gamma(best[0])
