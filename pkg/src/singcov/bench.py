"""Simulation studies: eigenvalue recovery and Frobenius error against Ledoit-Wolf over an L sweep.

Data columns are circularly-symmetric complex Gaussian with covariance Sigma
(Cholesky coloring).  Trial ``t`` draws from ``RngStream(seed).child(t)``.

CSV schema for sweeps: ``L,trial,error,estimator`` with estimator one of
``invcov``, ``lw``, ``raw``.  Per-trial rows carry the trial index; summary
rows (means over trials) use ``trial=-1``; baselines that do not depend on
L leave the ``L`` field empty.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InputError
from .estimator import EstimatorConfig, diagonal_estimate
from .haar import RngStream
from .matio import atomic_write
from .spectral import (
    Spectrum,
    as_complex_matrix,
    complex_gaussian,
    eig_hermitian,
    frobenius_paper,
    frobenius_standard,
    sample_covariance,
    toeplitz_exp,
)

__all__ = [
    "ledoit_wolf",
    "ExperimentSpec",
    "SweepResult",
    "EigCompareResult",
    "make_sigma",
    "draw_data",
    "sigma_from_invcov",
    "run_lw_compare",
    "run_eig_compare",
    "emit_plot_data",
    "emit_eig_data",
    "parse_sweep",
]


def ledoit_wolf(X: ArrayLike) -> NDArray[np.complex128]:
    """Ledoit-Wolf shrinkage of ``K = X X*/N`` toward ``(Tr K / M) I`` (zero-mean columns)."""
    x = as_complex_matrix(X)
    m, n = x.shape
    if n < 2:
        raise InputError("Ledoit-Wolf needs at least 2 observations")
    if not np.any(x):
        raise InputError("all-zero data has no shrinkage target")
    k = x @ x.conj().T / n
    nu = np.trace(k).real / m
    target = nu * np.eye(m)
    delta2 = np.sum(np.abs(k - target) ** 2) / m
    if delta2 == 0:
        return k
    # sum_k ||x_k x_k* - K||_F^2 = sum_k |x_k|^4 - N ||K||_F^2
    norms2 = np.sum(np.abs(x) ** 2, axis=0)
    beta2 = (np.sum(norms2**2) - n * np.sum(np.abs(k) ** 2)) / (m * n * n)
    rho = min(max(beta2, 0.0), delta2) / delta2
    out = rho * target + (1.0 - rho) * k
    return 0.5 * (out + out.conj().T)


@dataclass(frozen=True)
class ExperimentSpec:
    """One simulation setup.

    ``sigma`` is ``("toeplitz", beta)`` or ``("scaled-identity", alpha)``.
    ``invcov_rescale='trace'`` rescales each Sigma estimate to ``Tr K``; it is
    an experiment knob, not part of the estimator.
    """

    M: int
    N: int
    sigma: tuple[str, float] = ("toeplitz", 10.0)
    L_sweep: tuple[int, ...] = ()
    trials: int = 20
    seed: int = 7
    metric: Literal["paper-frobenius", "standard-frobenius"] = "paper-frobenius"
    invcov_rescale: Literal["none", "trace"] = "none"
    method: Literal["auto", "exact", "asymptotic", "monte-carlo"] = "auto"
    samples: int = 100_000

    def __post_init__(self):
        if self.M < 1 or self.N < 1:
            raise InputError("M and N must be positive")
        if self.trials < 1:
            raise InputError("trials must be at least 1")
        kind = self.sigma[0]
        if kind not in ("toeplitz", "scaled-identity"):
            raise InputError(f"unknown sigma kind {kind!r}")
        if not float(self.sigma[1]) > 0:
            raise InputError("sigma parameter must be positive")
        bad = [L for L in self.L_sweep if not 1 <= L <= min(self.N, self.M)]
        if bad:
            raise InputError(f"L_sweep entries must lie in 1..min(N, M), got {bad}")
        if self.metric not in ("paper-frobenius", "standard-frobenius"):
            raise InputError(f"unknown metric {self.metric!r}")
        if self.invcov_rescale not in ("none", "trace"):
            raise InputError(f"unknown invcov_rescale {self.invcov_rescale!r}")
        object.__setattr__(self, "L_sweep", tuple(int(L) for L in self.L_sweep))

    def metric_fn(self):
        return frobenius_paper if self.metric == "paper-frobenius" else frobenius_standard


def make_sigma(spec: ExperimentSpec) -> NDArray[np.float64]:
    kind, value = spec.sigma
    if kind == "toeplitz":
        return np.array(toeplitz_exp(spec.M, float(value)))
    return float(value) * np.eye(spec.M)


def draw_data(sigma: NDArray, n: int, gen: np.random.Generator) -> NDArray[np.complex128]:
    chol = np.linalg.cholesky(sigma)
    return chol @ complex_gaussian(gen, (sigma.shape[0], n))


def sigma_from_invcov(spec_k: Spectrum, L: int, cfg: EstimatorConfig, rescale: str = "none"):
    """Eigenvalues of ``invcov_L(K)^{-1}`` in the eigenbasis of K.

    At ``L = rank`` the zero-block value is infinite; its reciprocal is taken
    as 0, which is the limit of the inverse and reproduces K's spectrum.
    Returns ``(eigenvalues, degenerate_flag)``.
    """
    n, m = spec_k.rank, spec_k.dim
    if L == n and m > n:
        out = spec_k.clean_eigvals()
        degenerate = True
    else:
        est = diagonal_estimate(spec_k, cfg.with_L(L))
        out = 1.0 / est.diagonal()
        degenerate = False
    if rescale == "trace":
        out = out * (spec_k.eigvals[:n].sum() / out.sum())
    return out, degenerate


@dataclass
class SweepResult:
    """Per-L errors of the invcov-based Sigma estimate, with LW and raw baselines."""

    spec: ExperimentSpec
    L: tuple[int, ...]
    errors: NDArray[np.float64]  # shape (len(L), trials)
    lw_errors: NDArray[np.float64]  # shape (trials,)
    raw_errors: NDArray[np.float64]  # shape (trials,)
    degenerate_L: tuple[int, ...] = field(default=())

    @property
    def mean_error(self) -> NDArray[np.float64]:
        return self.errors.mean(axis=1) if self.errors.size else np.zeros(0)

    @property
    def std_error(self) -> NDArray[np.float64]:
        if self.errors.shape[1] < 2:
            return np.zeros(len(self.L))
        return self.errors.std(axis=1, ddof=1)

    @property
    def lw_error(self) -> float:
        return float(self.lw_errors.mean())

    @property
    def raw_error(self) -> float:
        return float(self.raw_errors.mean())

    def argmin_L(self) -> int:
        return int(self.L[int(np.argmin(self.mean_error))])


def _trial_generator(spec: ExperimentSpec, t: int) -> np.random.Generator:
    return RngStream(spec.seed).child(t).generator()


def _config(spec: ExperimentSpec) -> EstimatorConfig:
    return EstimatorConfig(L=1, method=spec.method, samples=spec.samples, seed=spec.seed)


def run_lw_compare(spec: ExperimentSpec) -> SweepResult:
    """Mean metric(Sigma - invcov_L(K)^{-1}) per L against metric(Sigma - K_LW)."""
    sigma = make_sigma(spec)
    metric = spec.metric_fn()
    cfg = _config(spec)
    errors = np.zeros((len(spec.L_sweep), spec.trials))
    lw = np.zeros(spec.trials)
    raw = np.zeros(spec.trials)
    degenerate: set[int] = set()
    for t in range(spec.trials):
        x = draw_data(sigma, spec.N, _trial_generator(spec, t))
        k = sample_covariance(x)
        lw[t] = metric(sigma - ledoit_wolf(x))
        raw[t] = metric(sigma - k)
        spec_k = eig_hermitian(k)
        for i, L in enumerate(spec.L_sweep):
            vals, flag = sigma_from_invcov(spec_k, L, cfg, spec.invcov_rescale)
            if flag:
                degenerate.add(L)
            errors[i, t] = metric(sigma - spec_k.reconstruct(vals))
    return SweepResult(
        spec=spec,
        L=spec.L_sweep,
        errors=errors,
        lw_errors=lw,
        raw_errors=raw,
        degenerate_L=tuple(sorted(degenerate)),
    )


@dataclass
class EigCompareResult:
    """Sorted eigenvalues of Sigma, of each trial's K, and of invcov_L(K)^{-1} per L and trial."""

    spec: ExperimentSpec
    truth: NDArray[np.float64]
    raw: NDArray[np.float64]  # (trials, M)
    invcov_inverse: dict[int, NDArray[np.float64]]  # L -> (trials, M)
    raw_zero_counts: NDArray[np.int_]
    invcov_zero_counts: dict[int, NDArray[np.int_]]

    def max_deviation(self, L: int | None = None) -> float:
        """Trial-averaged ``max_i |est_i - truth_i|`` of sorted curves (raw K when ``L`` is None)."""
        est = self.raw if L is None else self.invcov_inverse[L]
        return float(np.mean(np.max(np.abs(est - self.truth[None, :]), axis=1)))


def run_eig_compare(spec: ExperimentSpec) -> EigCompareResult:
    sigma = make_sigma(spec)
    truth = np.sort(np.linalg.eigvalsh(sigma))[::-1]
    cfg = _config(spec)
    raw = np.zeros((spec.trials, spec.M))
    raw_zero = np.zeros(spec.trials, dtype=int)
    inv = {L: np.zeros((spec.trials, spec.M)) for L in spec.L_sweep}
    inv_zero = {L: np.zeros(spec.trials, dtype=int) for L in spec.L_sweep}
    for t in range(spec.trials):
        x = draw_data(sigma, spec.N, _trial_generator(spec, t))
        spec_k = eig_hermitian(sample_covariance(x))
        raw[t] = spec_k.clean_eigvals()
        raw_zero[t] = spec_k.dim - spec_k.rank
        for L in spec.L_sweep:
            vals, _ = sigma_from_invcov(spec_k, L, cfg, spec.invcov_rescale)
            vals = np.sort(vals)[::-1]
            inv[L][t] = vals
            inv_zero[L][t] = int(np.sum(vals <= spec.M * np.finfo(float).eps * vals.max()))
    return EigCompareResult(
        spec=spec, truth=truth, raw=raw, invcov_inverse=inv, raw_zero_counts=raw_zero, invcov_zero_counts=inv_zero
    )


def _csv_text(rows: list[tuple]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for r in rows:
        writer.writerow(r)
    return buf.getvalue()


def emit_plot_data(result: SweepResult, path, *, include_raw: bool = False) -> None:
    """Write the sweep as CSV (see module docstring for the schema)."""
    rows: list[tuple] = [("L", "trial", "error", "estimator")]
    if not result.L:
        warnings.warn("empty L sweep: writing header only", RuntimeWarning, stacklevel=2)
    else:
        for i, L in enumerate(result.L):
            for t, e in enumerate(result.errors[i]):
                rows.append((L, t, repr(float(e)), "invcov"))
        for i, L in enumerate(result.L):
            rows.append((L, -1, repr(float(result.mean_error[i])), "invcov"))
        rows.append(("", -1, repr(result.lw_error), "lw"))
        if include_raw:
            rows.append(("", -1, repr(result.raw_error), "raw"))
    atomic_write(path, _csv_text(rows))


def emit_eig_data(result: EigCompareResult, path) -> None:
    """CSV ``L,trial,index,eigenvalue,estimator`` with estimator in {truth, raw, invcov}."""
    rows: list[tuple] = [("L", "trial", "index", "eigenvalue", "estimator")]
    for i, v in enumerate(result.truth):
        rows.append(("", -1, i, repr(float(v)), "truth"))
    for t in range(result.raw.shape[0]):
        for i, v in enumerate(result.raw[t]):
            rows.append(("", t, i, repr(float(v)), "raw"))
    for L, table in result.invcov_inverse.items():
        for t in range(table.shape[0]):
            for i, v in enumerate(table[t]):
                rows.append((L, t, i, repr(float(v)), "invcov"))
    atomic_write(path, _csv_text(rows))


def parse_sweep(text: str) -> tuple[int, ...]:
    """``"5:30:1"`` (inclusive start:stop:step) or ``"10,25,40"``."""
    text = text.strip()
    if not text:
        return ()
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) == 2:
                parts.append(1)
            start, stop, step = parts
            if step <= 0:
                raise ValueError("step must be positive")
            return tuple(range(start, stop + 1, step))
        return tuple(int(p) for p in text.split(","))
    except ValueError as exc:
        raise InputError(f"bad L sweep {text!r}: {exc}") from exc
