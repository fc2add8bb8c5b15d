import math

import numpy as np
import pytest

from singcov.errors import EnsembleError, EvaluationError, InputError, SizeError
from singcov.exact import stiefel_trace_f
from singcov.haar import (
    RngStream,
    mc_cov,
    mc_expectation,
    mc_fcov,
    mc_invcov,
    mc_invcov_diagonal,
    mc_wishart_inv_trace,
    permutation_invcov_enumerate,
    permutation_invcov_exact,
    sample_haar,
    sample_haar_batch,
)

S = 20_000


def _small_dimension(d1, d2):
    l1 = (d2 * math.log(d2) - d2 * math.log(d1) + d1 - d2) / (d1 - d2) ** 2
    l2 = (d1 * math.log(d1) - d1 * math.log(d2) + d2 - d1) / (d1 - d2) ** 2
    mu = (math.log(d1) - math.log(d2)) / (d1 - d2)
    return np.array([l1, l2, mu, mu])


def test_haar_rows_orthonormal():
    phi = sample_haar(3, 7, RngStream(1).generator())
    assert np.max(np.abs(phi @ phi.conj().T - np.eye(3))) <= 1e-12


def test_haar_moments():
    gen = RngStream(2).generator()
    phi = sample_haar_batch(2, 5, 10_000, gen)
    mean = phi.mean(axis=0)
    se = phi.std(axis=0) / math.sqrt(phi.shape[0])
    assert np.all(np.abs(mean) <= 4 * se)
    gram = np.einsum("bli,blj->bij", phi.conj(), phi)
    gmean = gram.mean(axis=0)
    gse = np.sqrt(np.mean(np.abs(gram - gmean) ** 2, axis=0) / gram.shape[0])
    assert np.all(np.abs(gmean - (2 / 5) * np.eye(5)) <= 4 * gse + 1e-15)


def test_mc_invcov_identity():
    est = mc_invcov(np.eye(2), 1, S, RngStream(3))
    assert np.all(est.zscore(0.5 * np.eye(2)) <= 4)


def test_mc_invcov_small_dimension():
    est = mc_invcov([2.0, 1.0, 0.0, 0.0], 1, 50_000, RngStream(4))
    assert np.all(est.zscore(np.diag(_small_dimension(2.0, 1.0))) <= 5)


def test_mc_invcov_off_diagonal_vanishes():
    est = mc_invcov([3.0, 1.5, 0.5, 0.0], 2, S, RngStream(5))
    off = ~np.eye(4, dtype=bool)
    assert np.all(est.zscore(np.zeros((4, 4)))[off] <= 4)


def test_mc_invcov_rank_check():
    with pytest.raises(EnsembleError):
        mc_invcov([1.0, 0.0, 0.0], 2, 100, RngStream(0))


def test_mc_cov_identity():
    est = mc_cov(np.eye(4), 2, S, RngStream(6))
    assert np.all(est.zscore(0.5 * np.eye(4)) <= 4)


def test_mc_cov_diagonal_example():
    est = mc_cov(np.diag([2.0, 1.0]), 1, S, RngStream(7))
    assert np.all(est.zscore(np.diag([5 / 6, 2 / 3])) <= 4)


def test_mc_cov_square_is_identity_map():
    rng = np.random.default_rng(8)
    x = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    k = x @ x.conj().T
    est = mc_cov(k, 3, 2000, RngStream(8))
    np.testing.assert_allclose(est.mean, k, atol=1e-12)


def test_mc_fcov_reproduces_cov_and_invcov():
    d = [3.0, 2.0, 1.0]
    a = mc_fcov(d, lambda x: x, 2, S, RngStream(9))
    b = mc_cov(np.diag(d), 2, S, RngStream(10))
    assert np.all(np.abs(a.mean - b.mean) <= 4 * np.hypot(a.stderr, b.stderr) + 1e-15)
    c = mc_fcov(d, lambda x: 1 / x, 2, S, RngStream(11))
    e = mc_invcov(d, 2, S, RngStream(12))
    assert np.all(np.abs(c.mean - e.mean) <= 4 * np.hypot(c.stderr, e.stderr) + 1e-15)


def test_mc_fcov_log_trace_matches_exact():
    est = mc_fcov([2.0, 1.0], np.log, 1, S, RngStream(13), reduce="trace")
    assert est.zscore(stiefel_trace_f([2.0, 1.0], 1, "log")) <= 5


def test_mc_fcov_rejects_nonfinite():
    with pytest.raises(EvaluationError):
        mc_fcov([1.0, 2.0], lambda x: np.full_like(x, np.nan), 1, 1000, RngStream(0))


def test_mc_invcov_diagonal_pools_zero_block():
    est = mc_invcov_diagonal([2.0, 1.0, 0.0, 0.0], 1, 50_000, RngStream(14))
    assert est.mean[2] == est.mean[3]
    assert np.all(est.zscore(_small_dimension(2.0, 1.0)) <= 5)


def test_permutation_closed_form():
    np.testing.assert_allclose(
        np.diagonal(permutation_invcov_exact([1.0, 2.0, 4.0], 2)), (2 / 3) * np.array([1, 0.5, 0.25]), rtol=1e-15
    )


def test_permutation_full_is_inverse():
    d = np.array([0.5, 2.0, 3.0])
    np.testing.assert_allclose(np.diagonal(permutation_invcov_exact(d, 3)), 1 / d)


def test_permutation_enumeration_small():
    np.testing.assert_allclose(permutation_invcov_enumerate([1.0, 2.0], 1), np.diag([0.5, 0.25]), atol=1e-15)
    np.testing.assert_allclose(permutation_invcov_enumerate([3.0], 1), [[1 / 3]], atol=1e-15)


def test_permutation_enumeration_matches():
    d = np.random.default_rng(15).uniform(0.1, 5, 4)
    assert np.max(np.abs(permutation_invcov_enumerate(d, 2) - permutation_invcov_exact(d, 2))) <= 1e-14


def test_permutation_size_limit():
    with pytest.raises(SizeError):
        permutation_invcov_enumerate(np.ones(9), 2)


def test_wishart_small():
    _, unnorm = mc_wishart_inv_trace(2, 1, S, RngStream(16))
    assert unnorm.zscore(1.0) <= 3


def test_wishart_diverges_at_square():
    with pytest.raises(InputError):
        mc_wishart_inv_trace(4, 4, 100, RngStream(0))


def test_wishart_fixed_ratio():
    # L/(N-L) is exactly 1/3 at every N with L/N = 1/4; the spread shrinks with N
    ests = [mc_wishart_inv_trace(4 * L, L, 5000, RngStream(17, L))[1] for L in (2, 5, 20)]
    assert all(e.zscore(1 / 3) <= 3 for e in ests)
    assert ests[0].stderr > ests[1].stderr > ests[2].stderr


def test_thread_count_does_not_change_result():
    d = [3.0, 2.0, 1.0, 0.0]
    a = mc_invcov(d, 2, 5000, RngStream(18), threads=1)
    b = mc_invcov(d, 2, 5000, RngStream(18), threads=4)
    np.testing.assert_array_equal(a.mean, b.mean)
    np.testing.assert_array_equal(a.stderr, b.stderr)


def test_seed_changes_result():
    a = mc_invcov([2.0, 1.0], 1, 2000, RngStream(1))
    b = mc_invcov([2.0, 1.0], 1, 2000, RngStream(2))
    assert not np.array_equal(a.mean, b.mean)


def test_mc_expectation_partial_block():
    def draw(gen, count, offset):
        return offset + np.arange(count, dtype=float)

    est = mc_expectation(draw, 2500, RngStream(0), threads=3)
    assert est.mean == pytest.approx(1249.5)
    assert est.samples == 2500
