import math

import numpy as np
import pytest

from singcov.asymptotic import (
    dmu_dd,
    eta_transform,
    lambda_asymptotic,
    mu_asymptotic,
    shannon_transform,
    solve_asymptotic,
)
from singcov.errors import DegenerateError, InputError
from singcov.spectral import toeplitz_exp


@pytest.mark.parametrize("n,L", [(4, 1), (10, 5), (30, 29)])
def test_mu_equal_spectrum(n, L):
    alpha = 2.5
    assert mu_asymptotic(np.full(n, alpha), L) == pytest.approx(L / (alpha * (n - L)), rel=1e-12)


def test_mu_two_by_two():
    mu = mu_asymptotic([2.0, 1.0], 1)
    assert mu == pytest.approx(1 / math.sqrt(2), rel=1e-13)
    # finite-N gap to the exact value log 2
    assert abs(mu / math.log(2) - 1) == pytest.approx(0.0201, abs=1e-3)


def test_mu_solves_fixed_point():
    d = np.linalg.eigvalsh(toeplitz_exp(40, 5.0))
    mu = mu_asymptotic(d, 12)
    assert np.sum(1 / (1 + mu * d)) == pytest.approx(40 - 12, rel=1e-12)


def test_mu_rejects_bad_L():
    with pytest.raises(DegenerateError):
        mu_asymptotic([1.0, 2.0], 2)
    with pytest.raises(InputError):
        mu_asymptotic([1.0, 2.0], 0)


def test_dmu_equal_spectrum():
    alpha, n, L = 1.5, 6, 2
    d = np.full(n, alpha)
    mu = mu_asymptotic(d, L)
    np.testing.assert_allclose(dmu_dd(d, mu), -L / (alpha**2 * n * (n - L)), rtol=1e-9)


def test_dmu_negative_and_matches_fd():
    rng = np.random.default_rng(3)
    for _ in range(5):
        d = rng.uniform(0.1, 10, 7)
        L = 3
        mu = mu_asymptotic(d, L)
        g = dmu_dd(d, mu)
        assert np.all(g < 0)
        for k in range(d.size):
            h = 1e-6 * d[k]
            up, down = d.copy(), d.copy()
            up[k] += h
            down[k] -= h
            fd = (mu_asymptotic(up, L) - mu_asymptotic(down, L)) / (2 * h)
            assert g[k] == pytest.approx(fd, rel=1e-5)
        assert dmu_dd(d, mu, k=2) == g[2]


def test_lambda_equal_spectrum():
    np.testing.assert_allclose(lambda_asymptotic(np.full(8, 0.5), 3), 3 / (0.5 * 8), rtol=1e-12)


def test_lambda_trace_identity():
    d = np.linalg.eigvalsh(toeplitz_exp(64, 10.0))
    lam = lambda_asymptotic(d, 32)
    assert abs(np.sum(d * lam) / 32 - 1) <= 0.02


def test_solve_bundles_results():
    d = np.array([3.0, 2.0, 1.0, 0.5])
    res = solve_asymptotic(d, 2)
    assert res.mu == mu_asymptotic(d, 2)
    np.testing.assert_array_equal(res.lam, lambda_asymptotic(d, 2))
    assert res.residual <= 1e-12


def test_eta_limits():
    d = np.array([3.0, 1.0, 0.2])
    assert eta_transform(d, 1e-12) == pytest.approx(1.0)
    assert eta_transform(np.full(4, 2.0), 0.7) == pytest.approx(1 / (1 + 0.7 * 2.0))


def test_shannon_large_gamma():
    d = np.array([3.0, 1.0, 0.2, 5.5])
    g = 1e8
    assert abs(shannon_transform(d, g) - math.log(g) - np.mean(np.log(d))) <= 1e-6
