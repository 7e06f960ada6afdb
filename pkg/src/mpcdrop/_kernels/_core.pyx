# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend: fused C loops over uint64 ring vectors.

Mirrors the contract of ``_numpy``; selected at import when available.
Inputs are 1-D contiguous uint64 arrays (the dispatch layer flattens).
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()

NAME = "c"

ctypedef unsigned long long u64
ctypedef long long i64


cdef inline i64 _sx(u64 v, int shift) noexcept nogil:
    # sign-extend a width-(64-shift) value to 64 bits
    return (<i64> (v << shift)) >> shift


def add(const cnp.uint64_t[::1] a, const cnp.uint64_t[::1] b, u64 mask):
    cdef Py_ssize_t i, n = a.shape[0]
    out_arr = np.empty(n, dtype=np.uint64)
    cdef cnp.uint64_t[::1] out = out_arr
    for i in range(n):
        out[i] = (a[i] + b[i]) & mask
    return out_arr


def sub(const cnp.uint64_t[::1] a, const cnp.uint64_t[::1] b, u64 mask):
    cdef Py_ssize_t i, n = a.shape[0]
    out_arr = np.empty(n, dtype=np.uint64)
    cdef cnp.uint64_t[::1] out = out_arr
    for i in range(n):
        out[i] = (a[i] - b[i]) & mask
    return out_arr


def neg(const cnp.uint64_t[::1] a, u64 mask):
    cdef Py_ssize_t i, n = a.shape[0]
    out_arr = np.empty(n, dtype=np.uint64)
    cdef cnp.uint64_t[::1] out = out_arr
    for i in range(n):
        out[i] = (0 - a[i]) & mask
    return out_arr


def mul(const cnp.uint64_t[::1] a, const cnp.uint64_t[::1] b, u64 mask):
    cdef Py_ssize_t i, n = a.shape[0]
    out_arr = np.empty(n, dtype=np.uint64)
    cdef cnp.uint64_t[::1] out = out_arr
    for i in range(n):
        out[i] = (a[i] * b[i]) & mask
    return out_arr


def scale(const cnp.uint64_t[::1] a, u64 k, u64 mask):
    cdef Py_ssize_t i, n = a.shape[0]
    out_arr = np.empty(n, dtype=np.uint64)
    cdef cnp.uint64_t[::1] out = out_arr
    for i in range(n):
        out[i] = (a[i] * k) & mask
    return out_arr


def sum_mod(const cnp.uint64_t[::1] a, u64 mask):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef u64 acc = 0
    for i in range(n):
        acc += a[i]
    return np.uint64(acc & mask)


def to_signed(const cnp.uint64_t[::1] a, int ell):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef int shift = 64 - ell
    out_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    for i in range(n):
        out[i] = _sx(a[i], shift)
    return out_arr


def from_signed(const cnp.int64_t[::1] s, u64 mask):
    cdef Py_ssize_t i, n = s.shape[0]
    out_arr = np.empty(n, dtype=np.uint64)
    cdef cnp.uint64_t[::1] out = out_arr
    for i in range(n):
        out[i] = (<u64> s[i]) & mask
    return out_arr


def lt_signed(const cnp.uint64_t[::1] a, const cnp.uint64_t[::1] b, int ell):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef int shift = 64 - ell
    out_arr = np.empty(n, dtype=np.uint64)
    cdef cnp.uint64_t[::1] out = out_arr
    for i in range(n):
        out[i] = 1 if _sx(a[i], shift) < _sx(b[i], shift) else 0
    return out_arr


def trunc_round(const cnp.uint64_t[::1] a, int f, int ell):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef int shift = 64 - ell
    cdef u64 mask = (<u64> 0xFFFFFFFFFFFFFFFF) >> shift
    cdef i64 half = (<i64> 1) << (f - 1)
    out_arr = np.empty(n, dtype=np.uint64)
    cdef cnp.uint64_t[::1] out = out_arr
    cdef i64 s
    for i in range(n):
        s = (_sx(a[i], shift) + half) >> f
        out[i] = (<u64> s) & mask
    return out_arr


def beaver_combine(const cnp.uint64_t[::1] c, const cnp.uint64_t[::1] d,
                   const cnp.uint64_t[::1] b, const cnp.uint64_t[::1] e,
                   const cnp.uint64_t[::1] a, bint add_de, u64 mask):
    cdef Py_ssize_t i, n = c.shape[0]
    cdef u64 z
    out_arr = np.empty(n, dtype=np.uint64)
    cdef cnp.uint64_t[::1] out = out_arr
    for i in range(n):
        z = c[i] + d[i] * b[i] + e[i] * a[i]
        if add_de:
            z += d[i] * e[i]
        out[i] = z & mask
    return out_arr
