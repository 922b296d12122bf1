# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled amplitude kernels; same contract as :mod:`sqka._pykernels`."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

cdef double _R = 0.7071067811865476

# Coefficients of |ab> (index 2a+b) for PhiPlus, PhiMinus, PsiPlus, PsiMinus.
cdef double _BELL[4][4]
_BELL[0][:] = [_R, 0.0, 0.0, _R]
_BELL[1][:] = [_R, 0.0, 0.0, -_R]
_BELL[2][:] = [0.0, _R, _R, 0.0]
_BELL[3][:] = [0.0, _R, -_R, 0.0]


cdef inline Py_ssize_t _insert_bit(Py_ssize_t rest, int width, int pos, int bit) nogil:
    # Insert `bit` at member position `pos` (0 = most significant) of a
    # (width + 1)-bit index whose other bits come from `rest`.
    cdef int shift = width - pos
    cdef Py_ssize_t high = (rest >> shift) << (shift + 1)
    cdef Py_ssize_t low = rest & ((1 << shift) - 1)
    return high | (<Py_ssize_t>bit << shift) | low


cdef inline Py_ssize_t _pair_index(Py_ssize_t rest, int k, int m1, int m2, int a, int b) nogil:
    # Full index with member m1 = a and m2 = b; inserts the lower position first.
    if m1 < m2:
        return _insert_bit(_insert_bit(rest, k - 2, m1, a), k - 1, m2, b)
    return _insert_bit(_insert_bit(rest, k - 2, m2, b), k - 1, m1, a)


def z_probability_one(const double complex[::1] amps, int k, int m):
    cdef Py_ssize_t n = amps.shape[0]
    cdef Py_ssize_t i
    cdef int shift = k - 1 - m
    cdef double p = 0.0
    cdef double complex z
    for i in range(n):
        if (i >> shift) & 1:
            z = amps[i]
            p += z.real * z.real + z.imag * z.imag
    return p


def z_collapse(const double complex[::1] amps, int k, int m, int outcome):
    cdef Py_ssize_t size = 1 << (k - 1)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(size, dtype=np.complex128)
    cdef double complex[::1] o = out
    cdef Py_ssize_t r
    cdef double norm = 0.0
    cdef double complex z
    for r in range(size):
        z = amps[_insert_bit(r, k - 1, m, outcome)]
        o[r] = z
        norm += z.real * z.real + z.imag * z.imag
    if norm == 0.0:
        raise ValueError("projection onto a zero-probability outcome")
    norm = sqrt(norm)
    for r in range(size):
        o[r] = o[r] / norm
    return out


cdef inline double complex _component(const double complex[::1] amps, Py_ssize_t r,
                                      int k, int m1, int m2, int kind) nogil:
    cdef double complex acc = 0.0
    cdef int a, b
    cdef double c
    for a in range(2):
        for b in range(2):
            c = _BELL[kind][2 * a + b]
            if c != 0.0:
                acc = acc + c * amps[_pair_index(r, k, m1, m2, a, b)]
    return acc


def bell_probabilities(const double complex[::1] amps, int k, int m1, int m2):
    cdef Py_ssize_t size = 1 << (k - 2)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(4, dtype=np.float64)
    cdef Py_ssize_t r
    cdef int kind
    cdef double complex z
    for kind in range(4):
        for r in range(size):
            z = _component(amps, r, k, m1, m2, kind)
            out[kind] += z.real * z.real + z.imag * z.imag
    return out


def bell_collapse(const double complex[::1] amps, int k, int m1, int m2, int outcome):
    cdef Py_ssize_t size = 1 << (k - 2)
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(size, dtype=np.complex128)
    cdef double complex[::1] o = out
    cdef Py_ssize_t r
    cdef double norm = 0.0
    cdef double complex z
    for r in range(size):
        z = _component(amps, r, k, m1, m2, outcome)
        o[r] = z
        norm += z.real * z.real + z.imag * z.imag
    if norm == 0.0:
        raise ValueError("projection onto a zero-probability outcome")
    norm = sqrt(norm)
    for r in range(size):
        o[r] = o[r] / norm
    return out


def kron(const double complex[::1] a, const double complex[::1] b):
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0], i, j
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(na * nb, dtype=np.complex128)
    cdef double complex[::1] o = out
    for i in range(na):
        for j in range(nb):
            o[i * nb + j] = a[i] * b[j]
    return out
