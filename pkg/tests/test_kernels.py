import mpmath
import numpy as np
import pytest

from singcov import _kernels
from singcov.exact import lambda_exact

BACKENDS = [_kernels.python_backend]
if _kernels.compiled_backend is not None:
    BACKENDS.append(_kernels.compiled_backend)

NODES = np.array([3.5, 2.0, 1.25, 0.4])


def _reference(nodes, row, power, logdeg):
    mpmath.mp.prec = 300
    n = len(nodes)
    d = [mpmath.mpf(float(x)) for x in nodes]
    v = mpmath.matrix([[x ** (n - 1 - r) for x in d] for r in range(n)])
    g = v.copy()
    for i, x in enumerate(d):
        g[row, i] = x**power * (mpmath.log(x) if logdeg else 1)
    return mpmath.det(g) / mpmath.det(v)


@pytest.fixture(params=BACKENDS, ids=lambda b: b.BACKEND)
def backend(request):
    return request.param


def test_selected_backend_is_known():
    assert _kernels.BACKEND in ("compiled", "python")


def test_inverse_vandermonde(backend):
    table = backend.NodeTable(NODES, 160)
    v = np.vander(NODES, increasing=False).T
    np.testing.assert_allclose(table.inverse_vandermonde() @ v, np.eye(4), atol=1e-13)


@pytest.mark.parametrize("row,power,logdeg", [(0, 5, 0), (1, 2, 1), (3, -1, 0), (2, 6, 1), (1, 1, 0)])
def test_combine_matches_determinant_ratio(backend, row, power, logdeg):
    table = backend.NodeTable(NODES, 192)
    value, grad, cond_bits, zero_like = table.combine([(row, power, logdeg, 1, 1)])
    want = float(_reference(NODES, row, power, logdeg))
    if want == 0:
        assert abs(value) <= 1e-30
    else:
        assert value == pytest.approx(want, rel=1e-14)
    assert grad.shape == (4,)


def test_combine_gradient_finite_difference(backend):
    terms = [(1, 5, 1, 3, 2), (2, 4, 0, -1, 7)]
    value, grad, _, _ = backend.NodeTable(NODES, 192).combine(terms)
    h = 1e-7
    for k in range(4):
        up, down = NODES.copy(), NODES.copy()
        up[k] += h
        down[k] -= h
        fd = (backend.NodeTable(up, 192).combine(terms, gradient=False)[0]
              - backend.NodeTable(down, 192).combine(terms, gradient=False)[0]) / (2 * h)
        assert grad[k] == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_combine_rejects_bad_row(backend):
    with pytest.raises(ValueError):
        backend.NodeTable(NODES, 128).combine([(4, 1, 0, 1, 1)])


@pytest.mark.parametrize("nodes", [[1.0, 1.0], [1.0, -1.0], []])
def test_nodes_validated(backend, nodes):
    with pytest.raises(ValueError):
        backend.NodeTable(np.array(nodes), 128)


@pytest.mark.skipif(_kernels.compiled_backend is None, reason="compiled backend not built")
@pytest.mark.parametrize("n", [5, 16, 40])
def test_backends_bit_identical(n):
    nodes = np.sort(np.random.default_rng(n).uniform(0.1, 10.0, n))[::-1]
    terms = [(r, n + r % 3, r % 2, r + 1, 2 * r + 3) for r in range(n)]
    prec = 256 + 4 * n
    a = _kernels.python_backend.NodeTable(nodes, prec).combine(terms)
    b = _kernels.compiled_backend.NodeTable(nodes, prec).combine(terms)
    assert a[0] == b[0]
    np.testing.assert_array_equal(a[1], b[1])
    assert a[3] == b[3]
    assert a[2] == pytest.approx(b[2], abs=1e-6)


def test_env_var_forces_python(monkeypatch):
    import importlib

    monkeypatch.setenv("SINGCOV_PURE_PYTHON", "1")
    try:
        mod = importlib.reload(_kernels)
        assert mod.BACKEND == "python"
    finally:
        monkeypatch.delenv("SINGCOV_PURE_PYTHON")
        importlib.reload(_kernels)


def test_engine_answers_do_not_depend_on_backend(monkeypatch):
    import singcov.exact.engine as engine

    d = np.array([6.0, 3.0, 2.0, 1.5, 0.2])
    results = []
    for b in BACKENDS:
        monkeypatch.setattr(engine, "NodeTable", b.NodeTable)
        engine._table.cache_clear()
        results.append(lambda_exact(d, 2))
    engine._table.cache_clear()
    for r in results[1:]:
        np.testing.assert_array_equal(r, results[0])
