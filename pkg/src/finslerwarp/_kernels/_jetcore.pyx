# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled truncated-series kernels.

All arrays are float64, C-contiguous, shaped ``(R+1, S+1, N)``: one
bivariate coefficient table per batch column.  ``N`` is the fastest
axis so the innermost loops stream through memory.
"""
import numpy as np

BACKEND = "cython"


cdef void _mul_into(const double[:, :, ::1] a, const double[:, :, ::1] b,
                    double[:, :, ::1] c) noexcept nogil:
    cdef Py_ssize_t R1 = a.shape[0], S1 = a.shape[1], N = a.shape[2]
    cdef Py_ssize_t i, j, p, q, k
    for i in range(R1):
        for j in range(S1):
            for k in range(N):
                c[i, j, k] = 0.0
            for p in range(i + 1):
                for q in range(j + 1):
                    for k in range(N):
                        c[i, j, k] += a[p, q, k] * b[i - p, j - q, k]


def mul(const double[:, :, ::1] a, const double[:, :, ::1] b):
    out = np.empty((a.shape[0], a.shape[1], a.shape[2]))
    cdef double[:, :, ::1] c = out
    with nogil:
        _mul_into(a, b, c)
    return out


def div(const double[:, :, ::1] a, const double[:, :, ::1] b):
    out = np.empty((a.shape[0], a.shape[1], a.shape[2]))
    cdef double[:, :, ::1] c = out
    cdef Py_ssize_t R1 = a.shape[0], S1 = a.shape[1], N = a.shape[2]
    cdef Py_ssize_t i, j, p, q, k
    cdef double acc
    with nogil:
        for i in range(R1):
            for j in range(S1):
                for k in range(N):
                    acc = a[i, j, k]
                    for p in range(i + 1):
                        for q in range(j + 1):
                            if p == 0 and q == 0:
                                continue
                            acc -= b[p, q, k] * c[i - p, j - q, k]
                    c[i, j, k] = acc / b[0, 0, k]
    return out


def compose(const double[:, :, ::1] a, const double[:, ::1] fk):
    """Evaluate sum_k fk[k] * h**k where h is ``a`` minus its constant term."""
    cdef Py_ssize_t R1 = a.shape[0], S1 = a.shape[1], N = a.shape[2]
    cdef Py_ssize_t K = fk.shape[0] - 1
    cdef Py_ssize_t i, j, k, m
    h_arr = np.array(a, copy=True)
    res_arr = np.zeros((R1, S1, N))
    tmp_arr = np.empty((R1, S1, N))
    cdef double[:, :, ::1] h = h_arr
    cdef double[:, :, ::1] res = res_arr
    cdef double[:, :, ::1] tmp = tmp_arr
    with nogil:
        for k in range(N):
            h[0, 0, k] = 0.0
            res[0, 0, k] = fk[K, k]
        for m in range(K - 1, -1, -1):
            _mul_into(res, h, tmp)
            for i in range(R1):
                for j in range(S1):
                    for k in range(N):
                        res[i, j, k] = tmp[i, j, k]
            for k in range(N):
                res[0, 0, k] += fk[m, k]
    return res_arr
