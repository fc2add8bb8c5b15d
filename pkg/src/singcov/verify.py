"""Invariant suites run by ``singcov verify``."""

from __future__ import annotations

import math
import time
from typing import Callable

import numpy as np

from .estimator import EstimatorConfig, cov, invcov
from .exact.engine import invcov_diag_exact, lambda_exact, mu_exact, stiefel_trace_f
from .haar import RngStream, mc_invcov, permutation_invcov_enumerate, permutation_invcov_exact
from .spectral import random_unitary

__all__ = ["SUITES", "run_verify"]


def _spectra(rng, count, n_range):
    for _ in range(count):
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        yield np.sort(rng.uniform(0.1, 10.0, n))[::-1]


def suite_small_dimension(quick: bool):
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(20 if quick else 100):
        d1, d2 = np.sort(rng.uniform(0.05, 20.0, 2))[::-1]
        l1 = (d2 * math.log(d2) - d2 * math.log(d1) + d1 - d2) / (d1 - d2) ** 2
        l2 = (d1 * math.log(d1) - d1 * math.log(d2) + d2 - d1) / (d1 - d2) ** 2
        mu = (math.log(d1) - math.log(d2)) / (d1 - d2)
        got = invcov_diag_exact([d1, d2, 0.0, 0.0], 1).diagonal()
        want = np.array([l1, l2, mu, mu])
        worst = max(worst, float(np.max(np.abs(got - want) / np.abs(want))))
    return worst <= 1e-10, f"max relative error {worst:.2e}"


def suite_functional_equation(quick: bool):
    rng = np.random.default_rng(2)
    worst = 0.0
    for d in _spectra(rng, 10 if quick else 50, (2, 8)):
        n = d.size
        for L in range(1, n):
            lhs = d * lambda_exact(d, L) + (1 / d) * lambda_exact(1 / d, n - L)
            worst = max(worst, float(np.max(np.abs(lhs - 1))))
    return worst <= 1e-9, f"max residual {worst:.2e}"


def suite_trace_identity(quick: bool):
    rng = np.random.default_rng(2)
    worst = 0.0
    for d in _spectra(rng, 10 if quick else 50, (2, 8)):
        for L in range(1, d.size + 1):
            worst = max(worst, abs(float(np.sum(d * lambda_exact(d, L))) - L))
    return worst <= 1e-10, f"max |Tr(D Lambda) - L| {worst:.2e}"


def suite_homogeneity(quick: bool):
    rng = np.random.default_rng(3)
    worst = 0.0
    for d in _spectra(rng, 5 if quick else 20, (2, 8)):
        L = max(1, d.size // 2)
        lam, mu = lambda_exact(d, L), mu_exact(d, L) if L < d.size else None
        for c in (1e-3, 1e3):
            worst = max(worst, float(np.max(np.abs(lambda_exact(c * d, L) * c / lam - 1))))
            if mu is not None:
                worst = max(worst, abs(mu_exact(c * d, L) * c / mu - 1))
    k = _random_psd(np.random.default_rng(4), 6, 4)
    cfg = EstimatorConfig(L=2)
    a = invcov(k, cfg)
    worst_matrix = float(np.max(np.abs(invcov(7 * k, cfg) * 7 - a)) / np.max(np.abs(a)))
    c = cov(k, cfg)
    worst_matrix = max(worst_matrix, float(np.max(np.abs(cov(3 * k, cfg) / 3 - c)) / np.max(np.abs(c))))
    return worst <= 1e-12 and worst_matrix <= 1e-12, f"spectral {worst:.2e}, matrix {worst_matrix:.2e}"


def suite_derivative(quick: bool):
    rng = np.random.default_rng(5)
    worst = 0.0
    eps = np.finfo(float).eps
    for d in _spectra(rng, 3 if quick else 10, (2, 6)):
        L = max(1, d.size - 1)
        lam = lambda_exact(d, L)
        for k in range(d.size):
            h = max(d[k], 1.0) * eps ** (1 / 3)
            up, down = d.copy(), d.copy()
            up[k] += h
            down[k] -= h
            fd = (stiefel_trace_f(up, L, "log") - stiefel_trace_f(down, L, "log")) / (2 * h)
            worst = max(worst, abs(fd - lam[k]) / abs(lam[k]))
    return worst <= 1e-6, f"max relative FD gap {worst:.2e}"


def _random_psd(rng, m, n):
    x = (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))) / math.sqrt(2)
    return x @ x.conj().T / n


def suite_eigenstructure(quick: bool):
    rng = np.random.default_rng(6)
    msgs = []
    ok = True
    for _ in range(3 if quick else 10):
        k = _random_psd(rng, 7, 4)
        w, u = np.linalg.eigh(k)
        out = invcov(k, EstimatorConfig(L=2))
        # eigenvectors of K with distinct eigenvalues stay eigenvectors
        resid = 0.0
        for j in range(3, 7):
            v = u[:, j]
            lam = np.vdot(v, out @ v)
            resid = max(resid, float(np.linalg.norm(out @ v - lam * v)))
        zero_block = u[:, :3]
        proj = zero_block.conj().T @ out @ zero_block
        mu_spread = float(np.max(np.abs(proj - proj[0, 0] * np.eye(3))))
        ok &= resid <= 1e-8 and mu_spread <= 1e-8
        msgs.append(max(resid, mu_spread))
    d = np.array([3.0, 2.0, 1.0, 0.0, 0.0])
    diag_out = invcov(np.diag(d), EstimatorConfig(L=2))
    off = float(np.max(np.abs(diag_out - np.diag(np.diagonal(diag_out)))))
    est = invcov_diag_exact(d, 2).diagonal()
    equal_mu = est[3] == est[4]
    ok &= off <= 1e-10 and equal_mu
    return ok, f"eigvec/mu residual {max(msgs):.2e}, off-diagonal {off:.2e}, equal mu {equal_mu}"


def suite_permutation(quick: bool):
    rng = np.random.default_rng(7)
    worst = 0.0
    for n in range(1, 7 if not quick else 5):
        d = rng.uniform(0.1, 5.0, n)
        for L in range(1, n + 1):
            a = permutation_invcov_enumerate(d, L)
            b = permutation_invcov_exact(d, L)
            worst = max(worst, float(np.max(np.abs(a - b))))
    return worst <= 1e-14, f"max abs gap {worst:.2e}"


def suite_mc_vs_exact(quick: bool):
    d = np.array([4.0, 3.0, 2.0, 1.0, 0.0, 0.0])
    S = 20_000 if quick else 100_000
    est = mc_invcov(d, 2, S, RngStream(11), reduce="diag")
    exact = invcov_diag_exact(d, 2).diagonal()
    z = float(np.max(est.zscore(exact)))
    return z <= 5, f"max z-score {z:.2f} at S={S}"


def suite_cov_identity(quick: bool):
    k = _random_psd(np.random.default_rng(8), 5, 3)
    cfg = EstimatorConfig(L=5, cov_rescale=False)
    err = float(np.max(np.abs(cov(k, cfg) - k)))
    rescaled = cov(k, EstimatorConfig(L=2, cov_rescale=True))
    tr = abs(np.trace(rescaled).real - np.trace(k).real)
    u = random_unitary(5, np.random.default_rng(9))
    w = np.linalg.eigvalsh(cov(u @ k @ u.conj().T, cfg.with_L(2))) - np.linalg.eigvalsh(cov(k, cfg.with_L(2)))
    return err <= 1e-14 and tr <= 1e-12 and np.max(np.abs(w)) <= 1e-12, f"cov_M(K)-K {err:.1e}, trace gap {tr:.1e}"


SUITES: list[tuple[str, Callable[[bool], tuple[bool, str]]]] = [
    ("small-dimension example", suite_small_dimension),
    ("functional equation", suite_functional_equation),
    ("trace identity", suite_trace_identity),
    ("homogeneity", suite_homogeneity),
    ("lambda derivative vs finite differences", suite_derivative),
    ("eigenvectors, diagonality, equal mu block", suite_eigenstructure),
    ("permutation enumeration", suite_permutation),
    ("Monte Carlo vs exact", suite_mc_vs_exact),
    ("cov closed form", suite_cov_identity),
]


def run_verify(quick: bool = False, emit: Callable[[str], None] = print) -> bool:
    all_ok = True
    for name, fn in SUITES:
        start = time.perf_counter()
        try:
            ok, detail = fn(quick)
        except Exception as exc:  # a crashing suite is a failing suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= bool(ok)
        emit(f"{'PASS' if ok else 'FAIL'}  {name}: {detail} ({time.perf_counter() - start:.2f}s)")
    return all_ok
