import math

import numpy as np
import pytest

from singcov.errors import InputError, StructureError
from singcov.spectral import (
    as_hermitian,
    eig_hermitian,
    eigenvalue_clusters,
    frobenius_paper,
    frobenius_standard,
    random_unitary,
    sample_covariance,
    toeplitz_exp,
)


def test_sample_covariance_single_column():
    np.testing.assert_array_equal(sample_covariance([[1], [0]]), [[1, 0], [0, 0]])


def test_sample_covariance_identity():
    np.testing.assert_allclose(sample_covariance(np.eye(2)), 0.5 * np.eye(2))


def test_sample_covariance_random_rank():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
    spec = eig_hermitian(sample_covariance(x))
    assert spec.rank == 2
    assert spec.eigvals.min() >= -1e-12


def test_eig_diagonal():
    spec = eig_hermitian(np.diag([3.0, 1.0, 0.0]))
    np.testing.assert_allclose(spec.eigvals, [3, 1, 0], atol=1e-15)
    assert spec.rank == 2


def test_eig_two_by_two():
    np.testing.assert_allclose(eig_hermitian([[2, 1], [1, 2]]).eigvals, [3, 1])


def test_eig_reconstruction():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    k = a + a.conj().T
    spec = eig_hermitian(k)
    assert np.linalg.norm(spec.reconstruct() - k) <= 1e-10 * np.linalg.norm(k)


def test_eig_rejects_non_hermitian():
    with pytest.raises(StructureError):
        eig_hermitian([[1.0, 2.0], [0.0, 1.0]])


def test_eig_rejects_nan():
    with pytest.raises(InputError):
        eig_hermitian([[np.nan, 0], [0, 1]])


def test_as_hermitian_is_read_only_copy():
    k = np.eye(2)
    h = as_hermitian(k)
    assert not h.flags.writeable
    k[0, 0] = 5
    assert h[0, 0] == 1


def test_toeplitz_entry():
    assert toeplitz_exp(3, 3.0)[0, 1] == pytest.approx(math.exp(-1 / 3), abs=1e-12)
    assert toeplitz_exp(3, 3.0)[0, 1] == pytest.approx(0.716531, abs=1e-6)


@pytest.mark.parametrize("m", [1, 5, 17])
def test_toeplitz_unit_diagonal(m):
    np.testing.assert_array_equal(np.diagonal(toeplitz_exp(m, 2.5)), 1.0)


def test_toeplitz_positive_definite():
    assert np.linalg.eigvalsh(toeplitz_exp(10, 10.0)).min() > 0


def test_toeplitz_bad_beta():
    with pytest.raises(InputError):
        toeplitz_exp(3, 0.0)


def test_frobenius_paper_values():
    assert frobenius_paper(np.eye(2)) == pytest.approx(0.5)
    assert frobenius_paper(np.zeros((3, 3))) == 0
    assert frobenius_paper(np.diag([1.0, 2.0])) == pytest.approx(1.25)


def test_frobenius_standard():
    assert frobenius_standard(np.diag([3.0, 4.0])) == pytest.approx(5.0)


def test_random_unitary():
    u = random_unitary(6, np.random.default_rng(3))
    np.testing.assert_allclose(u @ u.conj().T, np.eye(6), atol=1e-13)


def test_clusters():
    assert eigenvalue_clusters([3.0, 2.0, 2.0 * (1 + 1e-9), 1.0]) == [[1, 2]]
    assert eigenvalue_clusters([3.0, 2.0, 1.0]) == []
