# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels for the per-document hot loops.

Same contracts as _pykernels.py; see there for semantics.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

BACKEND_NAME = "cython"


def im2col(double[:, ::1] xp, long[:, ::1] idx):
    cdef Py_ssize_t r = idx.shape[0]
    cdef Py_ssize_t w = idx.shape[1]
    cdef Py_ssize_t d = xp.shape[1]
    out_arr = np.empty((r, w * d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, k, src
    for i in range(r):
        for j in range(w):
            src = idx[i, j]
            for k in range(d):
                out[i, j * d + k] = xp[src, k]
    return out_arr


def segmax_relu(double[:, ::1] scores, long[::1] offsets):
    cdef Py_ssize_t n = offsets.shape[0] - 1
    cdef Py_ssize_t m = scores.shape[1]
    pooled_arr = np.empty((n, m), dtype=np.float64)
    arg_arr = np.empty((n, m), dtype=np.int64)
    cdef double[:, ::1] pooled = pooled_arr
    cdef long[:, ::1] arg = arg_arr
    cdef Py_ssize_t i, j, r, a, b
    cdef double best, x
    cdef Py_ssize_t besti
    for i in range(n):
        a = offsets[i]
        b = offsets[i + 1]
        for j in range(m):
            best = scores[a, j]
            besti = a
            for r in range(a + 1, b):
                x = scores[r, j]
                if x > best:
                    best = x
                    besti = r
            pooled[i, j] = best if best > 0.0 else 0.0
            arg[i, j] = besti
    return pooled_arr, arg_arr


def conv_filter_grad(double[:, ::1] g, long[:, ::1] arg, double[:, ::1] cols):
    cdef Py_ssize_t n = g.shape[0]
    cdef Py_ssize_t m = g.shape[1]
    cdef Py_ssize_t wd = cols.shape[1]
    df_arr = np.zeros((m, wd), dtype=np.float64)
    cdef double[:, ::1] df = df_arr
    cdef Py_ssize_t i, j, k, row
    cdef double gij
    for i in range(n):
        for j in range(m):
            gij = g[i, j]
            if gij == 0.0:
                continue
            row = arg[i, j]
            for k in range(wd):
                df[j, k] += gij * cols[row, k]
    return df_arr


def conv_input_grad(double[:, ::1] g, long[:, ::1] arg, long[:, ::1] idx,
                    double[:, ::1] filt, double[:, ::1] dxp):
    cdef Py_ssize_t n = g.shape[0]
    cdef Py_ssize_t m = g.shape[1]
    cdef Py_ssize_t w = idx.shape[1]
    cdef Py_ssize_t d = dxp.shape[1]
    cdef Py_ssize_t i, j, t, k, win, row
    cdef double gij
    for i in range(n):
        for j in range(m):
            gij = g[i, j]
            if gij == 0.0:
                continue
            win = arg[i, j]
            for t in range(w):
                row = idx[win, t]
                for k in range(d):
                    dxp[row, k] += gij * filt[j, t * d + k]


def adam_update(double[::1] p, double[::1] g, double[::1] m, double[::1] v,
                long t, double lr, double beta1, double beta2, double eps):
    cdef Py_ssize_t n = p.shape[0]
    cdef double c1 = 1.0 - beta1 ** t
    cdef double c2 = 1.0 - beta2 ** t
    cdef Py_ssize_t i
    cdef double mi, vi
    for i in range(n):
        mi = beta1 * m[i] + (1.0 - beta1) * g[i]
        vi = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i]
        m[i] = mi
        v[i] = vi
        p[i] -= lr * (mi / c1) / (sqrt(vi / c2) + eps)
