# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the MMSE quadratic forms.

Same contract as ``_pure``: A_k = sigma2*I + sum_j w[k,j] s_j s_j^T is
assembled per user and s_k^T A_k^{-1} s_k is computed via an in-place
Cholesky solve.  Matrices are small (N ~ 32) and built thousands of times
per best-response sweep, which is why this lives in C.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

BACKEND = "native"


cdef int _quadform(double[:, ::1] codes, double[:] wrow, double sigma2,
                   Py_ssize_t k, double[:, ::1] a, double[:] x,
                   double* out) nogil:
    """Build A_k (lower triangle), Cholesky-factor it and evaluate the form.

    Returns 0 on success, -1 if a pivot is not strictly positive (matrix not
    numerically positive definite).
    """
    cdef Py_ssize_t n = codes.shape[1]
    cdef Py_ssize_t kk = codes.shape[0]
    cdef Py_ssize_t i, j, r
    cdef double w, si, acc, piv

    for i in range(n):
        for j in range(i + 1):
            a[i, j] = 0.0
        a[i, i] = sigma2
    for j in range(kk):
        w = wrow[j]
        if w != 0.0:
            for i in range(n):
                si = w * codes[j, i]
                for r in range(i + 1):
                    a[i, r] += si * codes[j, r]

    # in-place Cholesky, lower triangle
    for i in range(n):
        acc = a[i, i]
        for r in range(i):
            acc -= a[i, r] * a[i, r]
        if acc <= 0.0:
            return -1
        piv = sqrt(acc)
        a[i, i] = piv
        for j in range(i + 1, n):
            acc = a[j, i]
            for r in range(i):
                acc -= a[j, r] * a[i, r]
            a[j, i] = acc / piv

    # forward substitution L y = s_k
    for i in range(n):
        acc = codes[k, i]
        for r in range(i):
            acc -= a[i, r] * x[r]
        x[i] = acc / a[i, i]
    # back substitution L^T z = y
    for i in range(n - 1, -1, -1):
        acc = x[i]
        for r in range(i + 1, n):
            acc -= a[r, i] * x[r]
        x[i] = acc / a[i, i]

    acc = 0.0
    for i in range(n):
        acc += codes[k, i] * x[i]
    out[0] = acc
    return 0


def mmse_quadforms(codes, weights, double sigma2):
    """Quadratic forms s_k^T A_k^{-1} s_k for every user (see ``_pure``)."""
    cdef double[:, ::1] c = np.ascontiguousarray(codes, dtype=np.float64)
    cdef double[:, ::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t kk = c.shape[0]
    cdef Py_ssize_t n = c.shape[1]
    out = np.empty(kk, dtype=np.float64)
    cdef double[:] out_v = out
    a_buf = np.empty((n, n), dtype=np.float64)
    x_buf = np.empty(n, dtype=np.float64)
    cdef double[:, ::1] a = a_buf
    cdef double[:] x = x_buf
    cdef Py_ssize_t k
    cdef double val
    cdef int status
    for k in range(kk):
        status = _quadform(c, w[k], sigma2, k, a, x, &val)
        if status != 0:
            raise np.linalg.LinAlgError(
                "interference matrix not positive definite (user %d)" % k)
        out_v[k] = val
    return out


def mmse_quadform_single(codes, weight_row, double sigma2, Py_ssize_t k):
    """Quadratic form s_k^T A_k^{-1} s_k for one user (see ``_pure``)."""
    cdef double[:, ::1] c = np.ascontiguousarray(codes, dtype=np.float64)
    cdef double[:] w = np.ascontiguousarray(weight_row, dtype=np.float64)
    cdef Py_ssize_t n = c.shape[1]
    a_buf = np.empty((n, n), dtype=np.float64)
    x_buf = np.empty(n, dtype=np.float64)
    cdef double[:, ::1] a = a_buf
    cdef double[:] x = x_buf
    cdef double val
    if _quadform(c, w, sigma2, k, a, x, &val) != 0:
        raise np.linalg.LinAlgError(
            "interference matrix not positive definite (user %d)" % k)
    return val
