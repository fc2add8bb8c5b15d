"""Pure-Python (gmpy2) implementation of the Vandermonde row-replacement kernel.

A node set ``d_1 > ... > d_N > 0`` defines the Vandermonde matrix with rows
``d^(N-1), ..., d, 1``.  Replacing row ``r`` by ``phi(d_i)`` and dividing the two
determinants gives ``sum_i W[i, r] * phi(d_i)`` where ``W`` is the inverse of the
Vandermonde matrix, i.e. ``W[i, r]`` is the coefficient of ``x^(N-1-r)`` in the
i-th Lagrange basis polynomial.  Every entry of ``W`` is a product of positive
quantities up to sign, so it is computed without cancellation; the only
cancellation happens in the final sums, and those are tracked to decide the
working precision.

The compiled backend in ``_vdm.pyx`` implements exactly the same interface.
"""

from __future__ import annotations


import gmpy2
import numpy as np
from gmpy2 import mpfr

__all__ = ["NodeTable", "BACKEND"]

BACKEND = "python"

_mp_log = np.frompyfunc(gmpy2.log, 1, 1)


def _context(precision):
    return gmpy2.context(gmpy2.get_context(), precision=precision)


class NodeTable:
    """Inverse-Vandermonde and differentiation tables at a fixed binary precision."""

    def __init__(self, nodes, precision):
        nodes = np.ascontiguousarray(nodes, dtype=np.float64)
        if nodes.ndim != 1 or nodes.size == 0:
            raise ValueError("nodes must be a non-empty vector")
        if np.any(nodes <= 0.0) or not np.all(np.isfinite(nodes)):
            raise ValueError("nodes must be finite and positive")
        self.nodes = nodes
        self.precision = int(precision)
        self.size = n = nodes.size
        with _context(self.precision):
            d = np.array([mpfr(float(v)) for v in nodes], dtype=object)
            one = mpfr(1)
            diff = d[:, None] - d[None, :]
            np.fill_diagonal(diff, one)
            if any(x == 0 for x in diff.ravel()):
                raise ValueError("nodes must be distinct")
            w = one / np.prod(diff, axis=1)

            # elementary symmetric functions of the nodes with node i removed
            esym = np.empty((n, n), dtype=object)
            esym[:, 0] = one
            esym[:, 1:] = mpfr(0)
            for m in range(n):
                rows = np.arange(n) != m
                esym[rows, 1:] = esym[rows, 1:] + d[m] * esym[rows, :-1]
            signs = np.array([one if k % 2 == 0 else -one for k in range(n)], dtype=object)
            self._w_table = esym * signs[None, :] * w[:, None]

            inv_diff = one / diff
            np.fill_diagonal(inv_diff, mpfr(0))
            dmat = (w[None, :] / w[:, None]) * inv_diff
            np.fill_diagonal(dmat, inv_diff.sum(axis=1))
            self._dmat = dmat
            self._abs_w = np.abs(self._w_table)
            self._abs_dmat = np.abs(dmat)
            self._d = d
            self._logd = _mp_log(d)

    def inverse_vandermonde(self):
        """Return the inverse Vandermonde matrix rounded to float64."""
        return np.array([[float(x) for x in row] for row in self._w_table])

    def combine(self, terms, gradient=True):
        """Evaluate a weighted sum of row-replacement ratios and its node gradient.

        ``terms`` is a sequence of ``(row, power, logdeg, num, den)``; each term
        contributes ``num/den * sum_i W[i, row] * d_i**power * log(d_i)**logdeg``.

        Returns ``(value, grad, cond_bits, zero_like)`` where ``cond_bits`` is the
        largest log2 cancellation factor over the non-negligible outputs and
        ``zero_like`` counts outputs indistinguishable from zero at this precision.
        Outputs beyond the float64 range come back as infinities.
        """
        n = self.size
        with _context(self.precision):
            zero = mpfr(0)
            value = zero
            value_abs = zero
            grad = np.full(n, zero, dtype=object) if gradient else None
            grad_abs = np.full(n, zero, dtype=object) if gradient else None
            cache = {}
            for row, power, logdeg, num, den in terms:
                if not 0 <= row < n:
                    raise ValueError(f"row {row} outside 0..{n - 1}")
                if logdeg not in (0, 1):
                    raise ValueError("logdeg must be 0 or 1")
                key = (power, logdeg)
                if key not in cache:
                    cache[key] = self._row_function(power, logdeg, gradient)
                phi, abs_phi, dphi, dm_phi, abs_dm_phi = cache[key]
                coef = mpfr(num) / mpfr(den)
                acoef = abs(coef)
                col = self._w_table[:, row]
                acol = self._abs_w[:, row]
                value = value + coef * col.dot(phi)
                value_abs = value_abs + acoef * acol.dot(abs_phi)
                if gradient:
                    grad = grad + coef * col * (dphi - dm_phi)
                    grad_abs = grad_abs + acoef * acol * (np.abs(dphi) + abs_dm_phi)

            outputs = [(value, value_abs)]
            if gradient:
                outputs.extend(zip(grad, grad_abs))
            cond_bits = 0.0
            zero_like = 0
            floor = gmpy2.exp2(mpfr(32 - self.precision))
            for out, scale in outputs:
                if scale == 0:
                    continue
                if abs(out) <= scale * floor:
                    zero_like += 1
                    continue
                cond_bits = max(cond_bits, float(gmpy2.log2(scale / abs(out))))
            value_f = float(value)
            grad_f = np.array([float(g) for g in grad]) if gradient else None
        return value_f, grad_f, cond_bits, zero_like

    def _row_function(self, power, logdeg, gradient):
        d = self._d
        phi = d ** power
        dphi = power * d ** (power - 1) if gradient else None
        if logdeg:
            if gradient:
                dphi = dphi * self._logd + d ** (power - 1)
            phi = phi * self._logd
        abs_phi = np.abs(phi)
        if gradient:
            dm_phi = self._dmat.dot(phi)
            abs_dm_phi = self._abs_dmat.dot(abs_phi)
        else:
            dm_phi = abs_dm_phi = None
        return phi, abs_phi, dphi, dm_phi, abs_dm_phi
