# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: HALS coordinate sweep and running means."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def hals_update(double[:, ::1] W, const double[:, ::1] HHt, const double[:, ::1] XHt,
                const cnp.intp_t[::1] order):
    """In-place cyclic HALS sweep over the columns of W.

    HHt carries the L2 penalty on its diagonal and XHt has the L1 penalty
    already subtracted.
    """
    cdef Py_ssize_t n = W.shape[0]
    cdef Py_ssize_t k = W.shape[1]
    cdef Py_ssize_t s, t, i, r
    cdef double grad, hess, w
    with nogil:
        for s in range(k):
            t = order[s]
            hess = HHt[t, t]
            if hess <= 0.0:
                for i in range(n):
                    W[i, t] = 0.0
                continue
            for i in range(n):
                grad = -XHt[i, t]
                for r in range(k):
                    grad = grad + HHt[t, r] * W[i, r]
                w = W[i, t] - grad / hess
                W[i, t] = w if w > 0.0 else 0.0


def running_mean(const double[:, ::1] X):
    """Row n of the result is the mean of rows 0..n of X."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    out = np.empty((n, d), dtype=np.float64)
    cdef double[:, ::1] M = out
    cdef Py_ssize_t i, j
    cdef double inv
    if n == 0:
        return out
    with nogil:
        for j in range(d):
            M[0, j] = X[0, j]
        for i in range(1, n):
            inv = 1.0 / (i + 1)
            for j in range(d):
                M[i, j] = M[i - 1, j] + (X[i, j] - M[i - 1, j]) * inv
    return out
