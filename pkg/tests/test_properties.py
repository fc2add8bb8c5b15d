from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from singcov.asymptotic import lambda_asymptotic, mu_asymptotic
from singcov.bench import parse_sweep
from singcov.exact import LogPoly, lambda_exact, mu_exact
from singcov.haar import permutation_invcov_enumerate, permutation_invcov_exact
from singcov.matio import matrix_from_json, matrix_to_json


def _separated(values, rel=1e-3):
    s = np.sort(values)
    return np.all(np.diff(s) > rel * s[1:])


spectra = st.lists(st.floats(0.05, 50.0), min_size=2, max_size=7).map(np.array).filter(_separated)


@settings(max_examples=40, deadline=None)
@given(spectra, st.data())
def test_functional_equation(d, data):
    n = d.size
    L = data.draw(st.integers(1, n - 1))
    resid = d * lambda_exact(d, L) + lambda_exact(1 / d, n - L) / d - 1
    assert np.max(np.abs(resid)) <= 1e-9


@settings(max_examples=40, deadline=None)
@given(spectra, st.data())
def test_trace_identity(d, data):
    L = data.draw(st.integers(1, d.size))
    assert abs(np.sum(d * lambda_exact(d, L)) - L) <= 1e-10


@settings(max_examples=30, deadline=None)
@given(spectra, st.floats(1e-3, 1e3), st.data())
def test_homogeneity(d, c, data):
    L = data.draw(st.integers(1, d.size - 1))
    np.testing.assert_allclose(lambda_exact(c * d, L) * c, lambda_exact(d, L), rtol=1e-11)
    assert mu_exact(c * d, L) * c == pytest.approx(mu_exact(d, L), rel=1e-11)


@settings(max_examples=30, deadline=None)
@given(spectra, st.data())
def test_lambda_positive_and_ordered(d, data):
    L = data.draw(st.integers(1, d.size))
    lam = lambda_exact(d, L)
    assert np.all(lam > 0)
    # a larger eigenvalue never receives a larger inverse value
    order = np.argsort(d)
    assert np.all(np.diff(lam[order]) <= 1e-12 * lam.max())


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.01, 100.0), min_size=2, max_size=60).map(np.array), st.data())
def test_asymptotic_trace_and_fixed_point(d, data):
    n = d.size
    L = data.draw(st.integers(1, n - 1))
    mu = mu_asymptotic(d, L)
    assert abs(np.sum(1 / (1 + mu * d)) - (n - L)) <= 1e-9 * n
    assert abs(np.sum(d * lambda_asymptotic(d, L)) - L) <= 1e-8 * n


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.1, 10.0), min_size=1, max_size=5).map(np.array), st.data())
def test_permutation_enumeration(d, data):
    L = data.draw(st.integers(1, d.size))
    assert np.max(np.abs(permutation_invcov_enumerate(d, L) - permutation_invcov_exact(d, L))) <= 1e-14 * max(1, 1 / d.min())


coefficients = st.fractions(min_value=-5, max_value=5, max_denominator=7)
terms = st.dictionaries(st.tuples(st.integers(0, 6), st.integers(0, 1)), coefficients, max_size=5)


@given(terms, st.integers(1, 3))
def test_logpoly_integrate_then_differentiate(t, p):
    g = LogPoly(t)
    h = g.integrate(p)
    for _ in range(p):
        h = h.derivative()
    assert h == g


@given(terms, terms)
def test_logpoly_linearity(a, b):
    f, g = LogPoly(a), LogPoly(b)
    assert (f + g).integrate(2) == f.integrate(2) + g.integrate(2)
    assert f.scale(Fraction(3, 2)).integrate(1) == f.integrate(1).scale(Fraction(3, 2))


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(st.integers(1, 4), st.integers(1, 4), st.data())
def test_matrix_json_round_trip(rows, cols, data):
    re = np.array(data.draw(st.lists(finite, min_size=rows * cols, max_size=rows * cols))).reshape(rows, cols)
    im = np.array(data.draw(st.lists(finite, min_size=rows * cols, max_size=rows * cols))).reshape(rows, cols)
    a = re + 1j * im
    np.testing.assert_array_equal(matrix_from_json(matrix_to_json(a)), a)


@given(st.integers(1, 50), st.integers(0, 50), st.integers(1, 7))
def test_parse_sweep_range(start, length, step):
    stop = start + length
    assert parse_sweep(f"{start}:{stop}:{step}") == tuple(range(start, stop + 1, step))
    assume(length > 0)
    values = tuple(range(start, stop + 1, step))
    assert parse_sweep(",".join(map(str, values))) == values
