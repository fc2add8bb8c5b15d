"""Closed-form Stiefel-manifold averages via Vandermonde row replacement.

For positive, distinct ``d_1..d_N`` and ``L <= N``,

    int Tr f(Phi* D Phi) dPhi = sum_{k<L} (N-k-1)!/(L-k-1)! * det(G_k) / det(V)

where ``V`` is the Vandermonde matrix (row ``r`` holds ``d_i^(N-1-r)``) and
``G_k`` is ``V`` with row ``k`` replaced by ``I^(N-L)(x^(L-k-1) f)`` evaluated
at the nodes.  Every determinant ratio is a linear functional of the replaced
row, evaluated in the multiprecision kernel; its node gradient gives the
diagonal of ``invcov``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Union

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial
from numpy.typing import ArrayLike, NDArray

from .._kernels import NodeTable
from ..diagonal import DiagonalEstimate
from ..errors import DegenerateError, EvaluationError, InputError, SizeError
from ..spectral import CLUSTER_RTOL, as_hermitian, eigenvalue_clusters, zero_tolerance
from .logpoly import LogPoly

__all__ = [
    "HookTerm",
    "MAX_N",
    "MAX_POWER",
    "hook_terms",
    "stiefel_trace_f",
    "mu_exact",
    "lambda_exact",
    "invcov_diag_exact",
    "cov_closed_form",
    "cov_eigenvalues",
    "schur_hook",
    "as_logpoly",
]

MAX_N = 64
MAX_POWER = 64
GUARD_BITS = 64
MAX_PRECISION = 1 << 15
PERTURBATION_STEPS = (1e-7, 1e-8)
PERTURBATION_AGREEMENT = 1e-4

FunctionSpec = Union[LogPoly, str, tuple, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class HookTerm:
    """One summand: ``coefficient * det(G_k)/det(V)`` with row ``k`` replaced by ``replaced_row``."""

    k: int
    coefficient: Fraction
    replaced_row: LogPoly


def hook_terms(n: int, l: int, f: LogPoly) -> list[HookTerm]:
    if not 1 <= l <= n:
        raise InputError(f"need 1 <= L <= N, got L={l}, N={n}")
    out = []
    for k in range(l):
        coef = Fraction(math.factorial(n - k - 1), math.factorial(l - k - 1))
        out.append(HookTerm(k, coef, f.shift(l - k - 1).integrate(n - l)))
    return out


def _kernel_terms(n: int, hooks: list[HookTerm]) -> tuple[Fraction, list[tuple]]:
    """Split hook terms into an exact constant and terms that need the kernel.

    A plain monomial of degree ``0..N-1`` in row ``k`` reproduces a Vandermonde
    row: the ratio is 1 if it is row ``k`` itself and 0 otherwise.
    """
    constant = Fraction(0)
    terms = []
    for h in hooks:
        for (p, l), a in h.replaced_row.items():
            c = h.coefficient * a
            if l == 0 and 0 <= p <= n - 1:
                if p == n - 1 - h.k:
                    constant += c
                continue
            terms.append((h.k, p, l, c.numerator, c.denominator))
    return constant, terms


@lru_cache(maxsize=32)
def _table(nodes: tuple[float, ...], precision: int):
    return NodeTable(np.array(nodes), precision)


def _combine(nodes: NDArray[np.float64], terms: list[tuple], gradient: bool):
    """Run the kernel with enough working precision for the observed cancellation."""
    key = tuple(float(x) for x in nodes)
    n = len(key)
    outputs = 1 + (n if gradient else 0)
    prec = 128 + 2 * n
    confirmed = False
    while prec <= MAX_PRECISION:
        value, grad, cond_bits, zero_like = _table(key, prec).combine(terms, gradient)
        need = cond_bits + GUARD_BITS
        if need > prec:
            prec = int(math.ceil(need)) + 32
            continue
        if zero_like == outputs:
            # nothing resolved: the cancellation is deeper than the current precision
            prec *= 2
            continue
        if zero_like and not confirmed:
            # a result that cancels to nothing may be noise; recheck it with more bits
            confirmed = True
            prec += 128
            continue
        if not math.isfinite(value) or (grad is not None and not np.all(np.isfinite(grad))):
            raise EvaluationError("result overflows float64")
        return value, grad
    raise EvaluationError(f"cancellation exceeds {MAX_PRECISION} bits of working precision")


def _validate_nodes(d: ArrayLike) -> NDArray[np.float64]:
    arr = np.asarray(d, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise InputError("spectrum must be a non-empty vector")
    if not np.all(np.isfinite(arr)):
        raise InputError("spectrum has non-finite entries")
    if np.any(arr <= 0):
        raise InputError("spectrum entries must be positive")
    if arr.size > MAX_N:
        raise SizeError(f"exact engine supports N <= {MAX_N}, got N={arr.size}; use the asymptotic engine")
    return arr


def _perturbed(d: NDArray[np.float64], groups: list[list[int]], eps: float) -> NDArray[np.float64]:
    out = d.copy()
    for g in groups:
        m = len(g)
        for j, idx in enumerate(g):
            out[idx] = d[idx] * (1.0 + (j - (m - 1) / 2) * eps)
    return out


def _resolve_degeneracy(fn, d: NDArray[np.float64], rtol: float, gradient: bool):
    """Evaluate ``fn(nodes, gradient) -> (value, grad)`` on a spectrum that may contain clusters.

    Cluster members are spread symmetrically by a relative ``eps``; the results
    for two step sizes must agree before the smaller-step result is accepted.
    Gradients are always requested here: ``sum |grad_i| d_i`` is the size of a
    value change under relative perturbation, the right yardstick when the
    value itself is close to zero.  Gradients are averaged within each cluster
    so coincident nodes receive identical values.
    """
    order = np.argsort(-d, kind="stable")
    ds = d[order]
    groups = eigenvalue_clusters(ds, rtol)
    if not groups:
        return fn(d, gradient)
    results = []
    for eps in PERTURBATION_STEPS:
        nodes = _perturbed(ds, groups, eps)
        value, grad = fn(nodes, True)
        if grad is not None:
            grad = grad.copy()
            for g in groups:
                grad[g] = grad[g].mean()
        results.append((value, grad, nodes))
    (v1, g1, n1), (v2, g2, n2) = results
    scale = max(abs(v1), abs(v2), 1e-300)
    if g1 is not None:
        scale = max(scale, float(np.sum(np.abs(g1) * n1)), float(np.sum(np.abs(g2) * n2)))
    agree = abs(v1 - v2) <= PERTURBATION_AGREEMENT * scale
    if gradient:
        gscale = max(np.max(np.abs(g1)), np.max(np.abs(g2)), 1e-300)
        agree = agree and np.max(np.abs(g1 - g2)) <= PERTURBATION_AGREEMENT * gscale
    if not agree:
        raise DegenerateError(
            "clustered eigenvalues: perturbed evaluations disagree; use the Monte Carlo engine"
        )
    value, grad, _ = results[-1]
    if not gradient:
        return value, None
    unsorted = np.empty_like(grad)
    unsorted[order] = grad
    return value, unsorted


def _chebyshev_logpoly(f: Callable, a: float, b: float) -> LogPoly:
    if b <= a:
        a, b = a * (1 - 1e-6), b * (1 + 1e-6)

    def fv(x):
        try:
            y = np.asarray(f(x), dtype=np.float64)
        except (TypeError, ValueError):
            y = np.array([float(f(t)) for t in x])
        if y.shape != np.shape(x):
            y = np.broadcast_to(y, np.shape(x))
        if not np.all(np.isfinite(y)):
            raise EvaluationError("function is not finite on the spectral interval")
        return y

    for deg in (4, 8, 16, 32, MAX_POWER):
        cheb = Chebyshev.interpolate(fv, deg, domain=[a, b])
        coef = np.abs(cheb.coef)
        if coef[-1] <= 1e-12 * max(coef.max(), 1e-300):
            break
    else:
        warnings.warn(
            f"Chebyshev interpolant did not converge at degree {MAX_POWER}; result is approximate",
            RuntimeWarning,
            stacklevel=3,
        )
    poly = cheb.convert(kind=Polynomial, domain=[-1, 1], window=[-1, 1])
    return LogPoly({(m, 0): float(c) for m, c in enumerate(poly.coef)})


def as_logpoly(f: FunctionSpec, d: NDArray[np.float64] | None = None) -> LogPoly:
    """Resolve ``'inverse'``, ``'log'``, ``('power', n)``, a LogPoly, or a callable."""
    if isinstance(f, LogPoly):
        return f
    if isinstance(f, str):
        if f == "inverse":
            return LogPoly.monomial(-1)
        if f == "log":
            return LogPoly.log()
        raise InputError(f"unknown function name {f!r}")
    if isinstance(f, tuple) and len(f) == 2 and f[0] == "power":
        n = int(f[1])
        if not 0 <= n <= MAX_POWER:
            raise InputError(f"power moments are supported for 0 <= n <= {MAX_POWER}")
        return LogPoly.monomial(n)
    if callable(f):
        if d is None:
            raise InputError("a callable needs the spectrum to choose its interpolation interval")
        return _chebyshev_logpoly(f, float(np.min(d)), float(np.max(d)))
    raise InputError(f"unsupported function specification {f!r}")


def _trace_f(d: NDArray[np.float64], l: int, f: LogPoly, gradient: bool, rtol: float):
    n = d.size
    constant, terms = _kernel_terms(n, hook_terms(n, l, f))

    def run(nodes, want_grad):
        if not terms:
            return float(constant), (np.zeros(n) if want_grad else None)
        value, grad = _combine(nodes, terms, want_grad)
        return value + float(constant), grad

    return _resolve_degeneracy(run, d, rtol, gradient)


def stiefel_trace_f(
    d: ArrayLike,
    L: int,
    f: FunctionSpec,
    *,
    return_gradient: bool = False,
    rtol: float = CLUSTER_RTOL,
):
    """Exact ``int Tr f(Phi* D Phi) dPhi`` over N x L matrices with orthonormal columns.

    ``f`` is a :class:`LogPoly`, ``'inverse'``, ``'log'``, ``('power', n)`` or a
    callable (approximated by a Chebyshev interpolant on ``[min d, max d]``).
    With ``return_gradient`` the node gradient is returned as well.
    """
    arr = _validate_nodes(d)
    n = arr.size
    if not 1 <= L <= n:
        raise InputError(f"need 1 <= L <= N, got L={L}, N={n}")
    if callable(f) and not isinstance(f, LogPoly) and n == 1:
        value = float(np.asarray(f(arr))[0])
        return (value, None) if return_gradient else value
    value, grad = _trace_f(arr, L, as_logpoly(f, arr), return_gradient, rtol)
    return (value, grad) if return_gradient else value


def mu_exact(d: ArrayLike, L: int, *, rtol: float = CLUSTER_RTOL) -> float:
    """Common value of the zero block: ``det(G)/det(V)`` with row ``L`` set to ``d^(N-L-1) log d``."""
    arr = _validate_nodes(d)
    n = arr.size
    if L == n:
        raise DegenerateError(f"mu is infinite when L = N = {n}; choose L < N")
    if not 1 <= L < n:
        raise InputError(f"need 1 <= L < N, got L={L}, N={n}")
    terms = [(L - 1, n - L - 1, 1, 1, 1)]

    def run(nodes, want_grad):
        return _combine(nodes, terms, want_grad)

    value, _ = _resolve_degeneracy(run, arr, rtol, False)
    return value


def lambda_exact(d: ArrayLike, L: int, *, rtol: float = CLUSTER_RTOL) -> NDArray[np.float64]:
    """Diagonal of ``Lambda_L(D_N)``: the node gradient of ``int Tr log(Phi* D Phi)``."""
    arr = _validate_nodes(d)
    n = arr.size
    if not 1 <= L <= n:
        raise InputError(f"need 1 <= L <= N, got L={L}, N={n}")
    if L == n:
        return 1.0 / arr
    _, grad = _trace_f(arr, L, LogPoly.log(), True, rtol)
    return grad


def invcov_diag_exact(
    d: ArrayLike,
    L: int,
    *,
    rtol: float = CLUSTER_RTOL,
    fallback_samples: int = 100_000,
    seed: int = 0,
) -> DiagonalEstimate:
    """``invcov_L(diag(d))`` for a nonnegative spectrum: positive slots get lambda, zero slots mu.

    If clustered eigenvalues defeat the perturbation check the Monte Carlo
    engine is used instead and a warning is issued.
    """
    full = np.asarray(d, dtype=np.float64)
    if full.ndim != 1 or full.size == 0 or not np.all(np.isfinite(full)):
        raise InputError("spectrum must be a finite non-empty vector")
    if np.any(full < -zero_tolerance(full)):
        raise InputError("spectrum must be nonnegative")
    m = full.size
    positions = np.flatnonzero(full > zero_tolerance(full))
    n = positions.size
    if n == 0:
        raise InputError("spectrum has no positive entries")
    if L > n:
        raise InputError(f"L={L} exceeds the rank N={n}")
    if L < 1:
        raise InputError("L must be at least 1")
    if L == n and m > n:
        raise DegenerateError(f"mu is infinite when L equals the rank N={n} < M={m}; choose L < N")
    pos = full[positions]
    try:
        lam = lambda_exact(pos, L, rtol=rtol)
        mu = mu_exact(pos, L, rtol=rtol) if m > n else None
    except DegenerateError as exc:
        warnings.warn(f"{exc}; falling back to Monte Carlo", RuntimeWarning, stacklevel=2)
        from ..haar import RngStream, mc_invcov_diagonal

        dd = np.zeros(m)
        dd[positions] = pos
        est = mc_invcov_diagonal(dd, L, fallback_samples, RngStream(seed, 0))
        zero_slots = np.setdiff1d(np.arange(m), positions)
        mu = float(est.mean[zero_slots[0]]) if zero_slots.size else None
        return DiagonalEstimate(
            lam=est.mean[positions].copy(),
            mu=mu,
            dim=m,
            positions=positions,
            method_used="monte-carlo",
            stderr=est.stderr.copy(),
        )
    return DiagonalEstimate(lam=lam, mu=mu, dim=m, positions=positions, method_used="exact")


def cov_eigenvalues(d: ArrayLike, L: int, rescale: bool = False) -> NDArray[np.float64]:
    """Per-eigenvalue form of the closed-form cov estimate."""
    arr = np.asarray(d, dtype=np.float64)
    m = arr.size
    if not 1 <= L <= m:
        raise InputError(f"need 1 <= L <= M, got L={L}, M={m}")
    if m == 1:
        return arr.copy()
    t = L / ((m * m - 1) * m) * ((m * L - 1) * arr + (m - L) * arr.sum())
    return t * (m / L) if rescale else t


def cov_closed_form(K: ArrayLike, L: int, rescale: bool = False) -> NDArray[np.complex128]:
    """``L/((M^2-1)M) [(ML-1) K + (M-L) Tr(K) I]``, times ``M/L`` when ``rescale`` is set."""
    k = as_hermitian(K)
    m = k.shape[0]
    if not 1 <= L <= m:
        raise InputError(f"need 1 <= L <= M, got L={L}, M={m}")
    if m == 1:
        return np.array(k)
    tr = np.trace(k).real
    out = L / ((m * m - 1) * m) * ((m * L - 1) * k + (m - L) * tr * np.eye(m))
    return out * (m / L) if rescale else out


def schur_hook(d: ArrayLike, n: int, k: int, *, rtol: float = CLUSTER_RTOL) -> float:
    """Hook Schur polynomial ``s_(n-k, 1^k)`` at the nodes ``d``."""
    arr = _validate_nodes(d)
    size = arr.size
    if not 1 <= n <= MAX_POWER:
        raise InputError(f"need 1 <= n <= {MAX_POWER}")
    if not 0 <= k <= min(n - 1, size - 1):
        raise InputError(f"need 0 <= k <= min(n-1, N-1), got k={k}")
    hook = HookTerm(k, Fraction((-1) ** k), LogPoly.monomial(size + n - k - 1))
    constant, terms = _kernel_terms(size, [hook])

    def run(nodes, want_grad):
        return _combine(nodes, terms, want_grad)

    value, _ = _resolve_degeneracy(run, arr, rtol, False)
    return value + float(constant)
