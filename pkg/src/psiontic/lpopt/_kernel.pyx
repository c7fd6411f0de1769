# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled simplex pivot loop; see _kernel_py.py for the reference version."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

OPTIMAL, UNBOUNDED, ITERATION_LIMIT = 0, 1, 2


cdef void _pivot(double[:, ::1] T, long[::1] basis, Py_ssize_t row, Py_ssize_t col) noexcept nogil:
    cdef Py_ssize_t m1 = T.shape[0]
    cdef Py_ssize_t n1 = T.shape[1]
    cdef Py_ssize_t i, j
    cdef double p = T[row, col]
    cdef double f
    for j in range(n1):
        T[row, j] = T[row, j] / p
    for i in range(m1):
        if i == row:
            continue
        f = T[i, col]
        if f == 0.0:
            continue
        for j in range(n1):
            T[i, j] = T[i, j] - f * T[row, j]
        T[i, col] = 0.0
    T[row, col] = 1.0
    basis[row] = col


def pivot(double[:, ::1] T, long[::1] basis, Py_ssize_t row, Py_ssize_t col):
    _pivot(T, basis, row, col)


def simplex_loop(double[:, ::1] T, long[::1] basis, cnp.npy_bool[::1] allowed,
                 long max_iter, double cost_tol, double pivot_tol):
    cdef Py_ssize_t m = T.shape[0] - 1
    cdef Py_ssize_t n = T.shape[1] - 1
    cdef Py_ssize_t i, j, q, r
    cdef long it = 0
    cdef double best, ratio, lim
    cdef long best_basis
    with nogil:
        while it < max_iter:
            q = -1
            for j in range(n):
                if allowed[j] and T[m, j] < -cost_tol:
                    q = j
                    break
            if q < 0:
                with gil:
                    return OPTIMAL, it, -1
            best = 0.0
            r = -1
            for i in range(m):
                if T[i, q] > pivot_tol:
                    ratio = T[i, n] / T[i, q]
                    if r < 0 or ratio < best:
                        best = ratio
                        r = i
            if r < 0:
                with gil:
                    return UNBOUNDED, it, q
            lim = best + 1e-12 * (1.0 + fabs(best))
            r = -1
            best_basis = 0
            for i in range(m):
                if T[i, q] > pivot_tol:
                    ratio = T[i, n] / T[i, q]
                    if ratio <= lim and (r < 0 or basis[i] < best_basis):
                        r = i
                        best_basis = basis[i]
            _pivot(T, basis, r, q)
            it += 1
    return ITERATION_LIMIT, it, -1
