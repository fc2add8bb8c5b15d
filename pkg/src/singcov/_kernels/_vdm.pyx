# cython: language_level=3, boundscheck=False, wraparound=False
"""MPFR implementation of the Vandermonde row-replacement kernel.

Mirrors ``_vdm_py.NodeTable`` exactly; see that module for the maths.
"""

from libc.stdlib cimport malloc, free

import numpy as np

cdef extern from "mpfr.h":
    ctypedef struct __mpfr_struct:
        pass
    ctypedef __mpfr_struct *mpfr_ptr
    ctypedef long mpfr_prec_t
    ctypedef enum mpfr_rnd_t:
        MPFR_RNDN
    void mpfr_init2(mpfr_ptr, mpfr_prec_t)
    void mpfr_clear(mpfr_ptr)
    int mpfr_set(mpfr_ptr, mpfr_ptr, mpfr_rnd_t)
    int mpfr_set_d(mpfr_ptr, double, mpfr_rnd_t)
    int mpfr_set_ui(mpfr_ptr, unsigned long, mpfr_rnd_t)
    int mpfr_set_str(mpfr_ptr, const char *, int, mpfr_rnd_t)
    double mpfr_get_d(mpfr_ptr, mpfr_rnd_t)
    int mpfr_add(mpfr_ptr, mpfr_ptr, mpfr_ptr, mpfr_rnd_t)
    int mpfr_sub(mpfr_ptr, mpfr_ptr, mpfr_ptr, mpfr_rnd_t)
    int mpfr_mul(mpfr_ptr, mpfr_ptr, mpfr_ptr, mpfr_rnd_t)
    int mpfr_div(mpfr_ptr, mpfr_ptr, mpfr_ptr, mpfr_rnd_t)
    int mpfr_fma(mpfr_ptr, mpfr_ptr, mpfr_ptr, mpfr_ptr, mpfr_rnd_t)
    int mpfr_ui_div(mpfr_ptr, unsigned long, mpfr_ptr, mpfr_rnd_t)
    int mpfr_mul_si(mpfr_ptr, mpfr_ptr, long, mpfr_rnd_t)
    int mpfr_mul_2si(mpfr_ptr, mpfr_ptr, long, mpfr_rnd_t)
    int mpfr_neg(mpfr_ptr, mpfr_ptr, mpfr_rnd_t)
    int mpfr_abs(mpfr_ptr, mpfr_ptr, mpfr_rnd_t)
    int mpfr_log(mpfr_ptr, mpfr_ptr, mpfr_rnd_t)
    int mpfr_log2(mpfr_ptr, mpfr_ptr, mpfr_rnd_t)
    int mpfr_pow_si(mpfr_ptr, mpfr_ptr, long, mpfr_rnd_t)
    int mpfr_cmp(mpfr_ptr, mpfr_ptr)
    int mpfr_zero_p(mpfr_ptr)

BACKEND = "compiled"

cdef mpfr_rnd_t RND = MPFR_RNDN
# magnitude sums only feed the conditioning estimate
cdef mpfr_prec_t SCALE_PREC = 64


cdef __mpfr_struct *_alloc(Py_ssize_t count, mpfr_prec_t prec) except NULL:
    cdef __mpfr_struct *buf = <__mpfr_struct *> malloc(count * sizeof(__mpfr_struct))
    cdef Py_ssize_t i
    if buf == NULL:
        raise MemoryError()
    for i in range(count):
        mpfr_init2(&buf[i], prec)
        mpfr_set_ui(&buf[i], 0, RND)
    return buf


cdef void _release(__mpfr_struct *buf, Py_ssize_t count):
    cdef Py_ssize_t i
    if buf == NULL:
        return
    for i in range(count):
        mpfr_clear(&buf[i])
    free(buf)


cdef void _set_rational(mpfr_ptr out, object num, object den, mpfr_ptr tmp):
    mpfr_set_str(out, str(int(num)).encode("ascii"), 10, RND)
    mpfr_set_str(tmp, str(int(den)).encode("ascii"), 10, RND)
    mpfr_div(out, out, tmp, RND)


cdef class NodeTable:
    """Inverse-Vandermonde and differentiation tables at a fixed binary precision."""

    cdef readonly object nodes
    cdef readonly long precision
    cdef readonly Py_ssize_t size
    cdef __mpfr_struct *d
    cdef __mpfr_struct *logd
    cdef __mpfr_struct *w_table
    cdef __mpfr_struct *abs_w
    cdef __mpfr_struct *dmat
    cdef __mpfr_struct *abs_dmat

    def __cinit__(self):
        self.d = NULL
        self.logd = NULL
        self.w_table = NULL
        self.abs_w = NULL
        self.dmat = NULL
        self.abs_dmat = NULL
        self.size = 0

    def __init__(self, nodes, precision):
        arr = np.ascontiguousarray(nodes, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("nodes must be a non-empty vector")
        if np.any(arr <= 0.0) or not np.all(np.isfinite(arr)):
            raise ValueError("nodes must be finite and positive")
        cdef double[::1] view = arr
        cdef Py_ssize_t n = arr.size
        cdef Py_ssize_t i, j, m, k
        cdef mpfr_prec_t prec = int(precision)
        self.nodes = arr
        self.precision = prec

        cdef __mpfr_struct *w = _alloc(n, prec)
        cdef __mpfr_struct *esym = _alloc(n, prec)
        cdef __mpfr_struct *t = _alloc(2, prec)
        try:
            self.d = _alloc(n, prec)
            self.logd = _alloc(n, prec)
            self.size = n
            self.w_table = _alloc(n * n, prec)
            self.abs_w = _alloc(n * n, SCALE_PREC)
            self.dmat = _alloc(n * n, prec)
            self.abs_dmat = _alloc(n * n, SCALE_PREC)
            for i in range(n):
                mpfr_set_d(&self.d[i], view[i], RND)
                mpfr_log(&self.logd[i], &self.d[i], RND)

            for i in range(n):
                mpfr_set_ui(&t[0], 1, RND)
                for m in range(n):
                    if m == i:
                        continue
                    mpfr_sub(&t[1], &self.d[i], &self.d[m], RND)
                    if mpfr_zero_p(&t[1]):
                        raise ValueError("nodes must be distinct")
                    mpfr_mul(&t[0], &t[0], &t[1], RND)
                mpfr_ui_div(&w[i], 1, &t[0], RND)

            # W[i, k] = (-1)^k e_k(nodes without i) * w_i
            for i in range(n):
                mpfr_set_ui(&esym[0], 1, RND)
                for k in range(1, n):
                    mpfr_set_ui(&esym[k], 0, RND)
                k = 0
                for m in range(n):
                    if m == i:
                        continue
                    k += 1
                    for j in range(k, 0, -1):
                        mpfr_fma(&esym[j], &self.d[m], &esym[j - 1], &esym[j], RND)
                for k in range(n):
                    mpfr_mul(&self.w_table[i * n + k], &esym[k], &w[i], RND)
                    if k % 2 == 1:
                        mpfr_neg(&self.w_table[i * n + k], &self.w_table[i * n + k], RND)
                    mpfr_abs(&self.abs_w[i * n + k], &self.w_table[i * n + k], RND)

            # barycentric differentiation matrix
            for j in range(n):
                mpfr_set_ui(&self.dmat[j * n + j], 0, RND)
                for i in range(n):
                    if i == j:
                        continue
                    mpfr_sub(&t[0], &self.d[j], &self.d[i], RND)
                    mpfr_ui_div(&t[0], 1, &t[0], RND)
                    mpfr_add(&self.dmat[j * n + j], &self.dmat[j * n + j], &t[0], RND)
                    mpfr_div(&t[1], &w[i], &w[j], RND)
                    mpfr_mul(&self.dmat[j * n + i], &t[1], &t[0], RND)
                for i in range(n):
                    mpfr_abs(&self.abs_dmat[j * n + i], &self.dmat[j * n + i], RND)
        finally:
            _release(w, n)
            _release(esym, n)
            _release(t, 2)

    def __dealloc__(self):
        cdef Py_ssize_t n = self.size
        _release(self.d, n)
        _release(self.logd, n)
        _release(self.w_table, n * n)
        _release(self.abs_w, n * n)
        _release(self.dmat, n * n)
        _release(self.abs_dmat, n * n)

    def inverse_vandermonde(self):
        """Return the inverse Vandermonde matrix rounded to float64."""
        cdef Py_ssize_t n = self.size, i
        out = np.empty((n, n))
        cdef double[:, ::1] view = out
        for i in range(n * n):
            view[i // n, i % n] = mpfr_get_d(&self.w_table[i], RND)
        return out

    cdef void _row_function(self, long power, int logdeg, bint gradient,
                            __mpfr_struct *phi, __mpfr_struct *abs_phi,
                            __mpfr_struct *dphi, __mpfr_struct *dm_phi,
                            __mpfr_struct *abs_dm_phi, __mpfr_struct *tmp):
        cdef Py_ssize_t n = self.size, i, j
        for i in range(n):
            mpfr_pow_si(&phi[i], &self.d[i], power, RND)
            if gradient:
                mpfr_pow_si(&tmp[0], &self.d[i], power - 1, RND)
                mpfr_mul_si(&dphi[i], &tmp[0], power, RND)
                if logdeg:
                    mpfr_mul(&dphi[i], &dphi[i], &self.logd[i], RND)
                    mpfr_add(&dphi[i], &dphi[i], &tmp[0], RND)
            if logdeg:
                mpfr_mul(&phi[i], &phi[i], &self.logd[i], RND)
            mpfr_abs(&abs_phi[i], &phi[i], RND)
        if not gradient:
            return
        for j in range(n):
            mpfr_set_ui(&dm_phi[j], 0, RND)
            mpfr_set_ui(&abs_dm_phi[j], 0, RND)
            for i in range(n):
                mpfr_fma(&dm_phi[j], &self.dmat[j * n + i], &phi[i], &dm_phi[j], RND)
                mpfr_fma(&abs_dm_phi[j], &self.abs_dmat[j * n + i], &abs_phi[i], &abs_dm_phi[j], RND)

    def combine(self, terms, gradient=True):
        """Evaluate a weighted sum of row-replacement ratios and its node gradient.

        Same contract as the pure-Python backend.
        """
        cdef Py_ssize_t n = self.size, i
        cdef bint grad_on = bool(gradient)
        cdef mpfr_prec_t prec = self.precision
        terms = list(terms)
        groups = {}
        for term in terms:
            row, power, logdeg, num, den = term
            if not 0 <= row < n:
                raise ValueError(f"row {row} outside 0..{n - 1}")
            if logdeg not in (0, 1):
                raise ValueError("logdeg must be 0 or 1")
            groups.setdefault((int(power), int(logdeg)), []).append((int(row), num, den))

        cdef __mpfr_struct *phi = _alloc(n, prec)
        cdef __mpfr_struct *abs_phi = _alloc(n, SCALE_PREC)
        cdef __mpfr_struct *dphi = _alloc(n, prec)
        cdef __mpfr_struct *dm_phi = _alloc(n, prec)
        cdef __mpfr_struct *abs_dm_phi = _alloc(n, SCALE_PREC)
        cdef __mpfr_struct *grad = _alloc(n, prec)
        cdef __mpfr_struct *grad_abs = _alloc(n, SCALE_PREC)
        # scratch: 0 value, 2 coef, 4..5 temporaries
        cdef __mpfr_struct *s = _alloc(8, prec)
        # low precision: 0 value_abs, 1 |coef|, 2 term, 3 scale, 4 threshold, 5 ratio
        cdef __mpfr_struct *lo = _alloc(6, SCALE_PREC)
        cdef Py_ssize_t r
        cdef double cond_bits = 0.0, bits
        cdef int zero_like = 0
        try:
            for (power, logdeg), members in groups.items():
                self._row_function(power, logdeg, grad_on, phi, abs_phi, dphi,
                                   dm_phi, abs_dm_phi, &s[4])
                for r, num, den in members:
                    _set_rational(&s[2], num, den, &s[4])
                    mpfr_abs(&lo[1], &s[2], RND)
                    mpfr_set_ui(&s[5], 0, RND)
                    mpfr_set_ui(&lo[2], 0, RND)
                    for i in range(n):
                        mpfr_fma(&s[5], &self.w_table[i * n + r], &phi[i], &s[5], RND)
                        mpfr_fma(&lo[2], &self.abs_w[i * n + r], &abs_phi[i], &lo[2], RND)
                    mpfr_fma(&s[0], &s[2], &s[5], &s[0], RND)
                    mpfr_fma(&lo[0], &lo[1], &lo[2], &lo[0], RND)
                    if grad_on:
                        for i in range(n):
                            mpfr_sub(&s[5], &dphi[i], &dm_phi[i], RND)
                            mpfr_mul(&s[5], &s[5], &self.w_table[i * n + r], RND)
                            mpfr_fma(&grad[i], &s[2], &s[5], &grad[i], RND)
                            mpfr_abs(&lo[2], &dphi[i], RND)
                            mpfr_add(&lo[2], &lo[2], &abs_dm_phi[i], RND)
                            mpfr_mul(&lo[2], &lo[2], &self.abs_w[i * n + r], RND)
                            mpfr_fma(&grad_abs[i], &lo[1], &lo[2], &grad_abs[i], RND)

            # zero-like threshold: |out| <= scale * 2^(32 - prec)
            for i in range(-1, n if grad_on else 0):
                if i < 0:
                    mpfr_abs(&s[4], &s[0], RND)
                    mpfr_set(&lo[3], &lo[0], RND)
                else:
                    mpfr_abs(&s[4], &grad[i], RND)
                    mpfr_set(&lo[3], &grad_abs[i], RND)
                if mpfr_zero_p(&lo[3]):
                    continue
                mpfr_mul_2si(&lo[4], &lo[3], 32 - prec, RND)
                if mpfr_cmp(&s[4], &lo[4]) <= 0:
                    zero_like += 1
                    continue
                mpfr_div(&lo[5], &lo[3], &s[4], RND)
                mpfr_log2(&lo[5], &lo[5], RND)
                bits = mpfr_get_d(&lo[5], RND)
                if bits > cond_bits:
                    cond_bits = bits

            value = mpfr_get_d(&s[0], RND)
            grad_out = None
            if grad_on:
                grad_out = np.empty(n)
                for i in range(n):
                    grad_out[i] = mpfr_get_d(&grad[i], RND)
        finally:
            _release(phi, n)
            _release(abs_phi, n)
            _release(dphi, n)
            _release(dm_phi, n)
            _release(abs_dm_phi, n)
            _release(grad, n)
            _release(grad_abs, n)
            _release(s, 8)
            _release(lo, 6)
        return value, grad_out, cond_bits, zero_like
