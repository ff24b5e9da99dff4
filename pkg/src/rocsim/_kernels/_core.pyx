# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled pairwise kernels; mirrors rocsim._kernels.fallback.

Same signatures and the same lexicographic pair order (i < j) as the
pure-numpy module; per-backend floating point results may differ in the
last bits because accumulation order differs.
"""
from libc.math cimport sqrt

import numpy as np


def pair_stats_upper(x):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef Py_ssize_t n = xv.shape[0]
    out_arr = np.empty(n * (n - 1) // 2, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j, pos = 0
    cdef double hi, lo, xi, xj
    with nogil:
        for i in range(n - 1):
            xi = xv[i]
            for j in range(i + 1, n):
                xj = xv[j]
                hi = 1.0 - xi
                if 1.0 - xj > hi:
                    hi = 1.0 - xj
                lo = xi
                if xj > lo:
                    lo = xj
                out[pos] = hi if hi < lo else lo
                pos += 1
    return out_arr


def pair_same_label_upper(y):
    cdef const long long[::1] yv = np.ascontiguousarray(y, dtype=np.int64).ravel()
    cdef Py_ssize_t n = yv.shape[0]
    out_arr = np.empty(n * (n - 1) // 2, dtype=np.uint8)
    cdef unsigned char[::1] out = out_arr
    cdef Py_ssize_t i, j, pos = 0
    with nogil:
        for i in range(n - 1):
            for j in range(i + 1, n):
                out[pos] = 1 if yv[i] == yv[j] else 0
                pos += 1
    return out_arr


cdef inline double _dot(const double[:, ::1] a, Py_ssize_t i,
                        const double[:, ::1] b, Py_ssize_t j,
                        Py_ssize_t d) nogil:
    cdef double acc = 0.0
    cdef Py_ssize_t k
    for k in range(d):
        acc += a[i, k] * b[j, k]
    return acc


def bilinear_pair_sums(X, y, A):
    Xc = np.ascontiguousarray(X, dtype=np.float64)
    if Xc.ndim == 1:
        Xc = Xc.reshape(-1, 1)
    cdef const double[:, ::1] Xv = Xc
    cdef const long long[::1] yv = np.ascontiguousarray(y, dtype=np.int64).ravel()
    G = Xc @ np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[:, ::1] Gv = np.ascontiguousarray(G)
    cdef Py_ssize_t n = Xv.shape[0], d = Xv.shape[1]
    cdef Py_ssize_t i, j
    cdef double s, pos_sum = 0.0, neg_sum = 0.0
    with nogil:
        for i in range(n - 1):
            for j in range(i + 1, n):
                s = 0.5 * (1.0 + _dot(Gv, i, Xv, j, d))
                if yv[i] == yv[j]:
                    pos_sum += s
                else:
                    neg_sum += s
    return pos_sum, neg_sum


def mahalanobis_pair_sums(X, y, A):
    Xc = np.ascontiguousarray(X, dtype=np.float64)
    if Xc.ndim == 1:
        Xc = Xc.reshape(-1, 1)
    cdef const double[:, ::1] Xv = Xc
    cdef const long long[::1] yv = np.ascontiguousarray(y, dtype=np.int64).ravel()
    G = Xc @ np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[:, ::1] Gv = np.ascontiguousarray(G)
    q = np.einsum("ij,ij->i", Xc, G)
    cdef const double[::1] qv = np.ascontiguousarray(q)
    cdef Py_ssize_t n = Xv.shape[0], d = Xv.shape[1]
    cdef Py_ssize_t i, j
    cdef double sq, dist
    cdef double pos_d = 0.0, neg_d = 0.0, pos_sq = 0.0, neg_sq = 0.0
    with nogil:
        for i in range(n - 1):
            for j in range(i + 1, n):
                sq = qv[i] + qv[j] - 2.0 * _dot(Gv, i, Xv, j, d)
                if sq < 0.0:
                    sq = 0.0
                dist = sqrt(sq)
                if yv[i] == yv[j]:
                    pos_d += dist
                    pos_sq += sq
                else:
                    neg_d += dist
                    neg_sq += sq
    return pos_d, neg_d, pos_sq, neg_sq


def mmc_negative_gradient(X, y, A):
    Xc = np.ascontiguousarray(X, dtype=np.float64)
    if Xc.ndim == 1:
        Xc = Xc.reshape(-1, 1)
    cdef const double[:, ::1] Xv = Xc
    cdef const long long[::1] yv = np.ascontiguousarray(y, dtype=np.int64).ravel()
    G = Xc @ np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[:, ::1] Gv = np.ascontiguousarray(G)
    q = np.einsum("ij,ij->i", Xc, G)
    cdef const double[::1] qv = np.ascontiguousarray(q)
    cdef Py_ssize_t n = Xv.shape[0], d = Xv.shape[1]
    grad_arr = np.zeros((d, d), dtype=np.float64)
    cdef double[:, ::1] grad = grad_arr
    cdef Py_ssize_t i, j, a, b
    cdef double sq, dist, wgt, ua, neg_sum = 0.0
    with nogil:
        for i in range(n - 1):
            for j in range(i + 1, n):
                if yv[i] == yv[j]:
                    continue
                sq = qv[i] + qv[j] - 2.0 * _dot(Gv, i, Xv, j, d)
                if sq < 0.0:
                    sq = 0.0
                dist = sqrt(sq)
                neg_sum += dist
                if dist > 0.0:
                    wgt = 0.5 / dist
                    for a in range(d):
                        ua = (Xv[i, a] - Xv[j, a]) * wgt
                        for b in range(a, d):
                            grad[a, b] += ua * (Xv[i, b] - Xv[j, b])
    # fill the strict lower triangle from the accumulated upper half
    cdef Py_ssize_t r, c
    for r in range(d):
        for c in range(r + 1, d):
            grad[c, r] = grad[r, c]
    return neg_sum, grad_arr


def weighted_pairs_gradient(X, ii, jj, w, A):
    Xc = np.ascontiguousarray(X, dtype=np.float64)
    if Xc.ndim == 1:
        Xc = Xc.reshape(-1, 1)
    cdef const double[:, ::1] Xv = Xc
    cdef const long long[::1] iv = np.ascontiguousarray(ii, dtype=np.int64)
    cdef const long long[::1] jv = np.ascontiguousarray(jj, dtype=np.int64)
    cdef const double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef const double[:, ::1] Av = np.ascontiguousarray(A, dtype=np.float64)
    cdef Py_ssize_t m = iv.shape[0], d = Xv.shape[1]
    grad_arr = np.zeros((d, d), dtype=np.float64)
    cdef double[:, ::1] grad = grad_arr
    diff_arr = np.empty(d, dtype=np.float64)
    cdef double[::1] u = diff_arr
    cdef Py_ssize_t b, a, c
    cdef double sq, dist, coef, acc, obj = 0.0
    with nogil:
        for b in range(m):
            for a in range(d):
                u[a] = Xv[iv[b], a] - Xv[jv[b], a]
            sq = 0.0
            for a in range(d):
                acc = 0.0
                for c in range(d):
                    acc += Av[a, c] * u[c]
                sq += u[a] * acc
            if sq < 0.0:
                sq = 0.0
            dist = sqrt(sq)
            obj += wv[b] * dist
            if dist > 0.0:
                coef = 0.5 * wv[b] / dist
                for a in range(d):
                    for c in range(a, d):
                        grad[a, c] += coef * u[a] * u[c]
    cdef Py_ssize_t r2, c2
    for r2 in range(d):
        for c2 in range(r2 + 1, d):
            grad[c2, r2] = grad[r2, c2]
    return obj, grad_arr
