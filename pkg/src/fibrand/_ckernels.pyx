# cython: language_level=3
"""Compiled versions of the hot kernels in ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()

BACKEND = "cython"


def perm_chain(const int[:, ::1] stack, const unsigned char[::1] mask):
    cdef Py_ssize_t m = stack.shape[0], n = stack.shape[1]
    cdef Py_ssize_t i, x
    cdef int count = 0
    out_arr = np.arange(n, dtype=np.int32)
    cdef int[::1] out = out_arr
    for i in range(m):
        if mask[i]:
            count += 1
            for x in range(n):
                out[x] = stack[i, out[x]]
    return out_arr, count


def mat_chain(const long long[:, :, ::1] stack, const unsigned char[::1] mask, long long p):
    cdef Py_ssize_t m = stack.shape[0], d = stack.shape[1]
    cdef Py_ssize_t i, r, c, k
    cdef int count = 0
    cdef long long s
    acc_arr = np.eye(d, dtype=np.int64)
    tmp_arr = np.zeros((d, d), dtype=np.int64)
    cdef long long[:, ::1] acc = acc_arr
    cdef long long[:, ::1] tmp = tmp_arr
    for i in range(m):
        if not mask[i]:
            continue
        count += 1
        for r in range(d):
            for c in range(d):
                s = 0
                for k in range(d):
                    s += acc[r, k] * stack[i, k, c]
                tmp[r, c] = s % p
        acc[:, :] = tmp
    return acc_arr, count


def cycle_type(perm):
    cdef int[::1] img = np.ascontiguousarray(perm, dtype=np.int32)
    cdef Py_ssize_t n = img.shape[0], start, x
    cdef int length
    cdef unsigned char *seen = <unsigned char *>malloc(n if n > 0 else 1)
    lengths = []
    try:
        for start in range(n):
            seen[start] = 0
        for start in range(n):
            if seen[start]:
                continue
            length = 0
            x = start
            while not seen[x]:
                seen[x] = 1
                x = img[x]
                length += 1
            lengths.append(length)
    finally:
        free(seen)
    lengths.sort(reverse=True)
    return lengths


def group_convolve(const double[::1] x, const double[::1] y, const int[:, ::1] table):
    cdef Py_ssize_t n = x.shape[0], i, j
    cdef double xi
    out_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    for i in range(n):
        xi = x[i]
        if xi == 0.0:
            continue
        for j in range(n):
            out[table[i, j]] += xi * y[j]
    return out_arr


def right_shift_norms(const double[::1] x, const double[::1] w, const int[:, ::1] table,
                      double p0, double p1):
    cdef Py_ssize_t n = x.shape[0], g, h
    cdef double total = 0.0, acc, v
    shifted_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] shifted = shifted_arr
    for g in range(n):
        if w[g] == 0.0:
            continue
        for h in range(n):
            shifted[table[h, g]] = x[h]
        acc = 0.0
        for h in range(n):
            v = p0 * x[h] + p1 * shifted[h]
            acc += v * v
        total += w[g] * acc
    return total
