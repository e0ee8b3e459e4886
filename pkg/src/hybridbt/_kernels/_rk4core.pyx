# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled integration kernels: classical RK4 stages and the affine scan."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def rk4_lti(object a, object b, object x0, object u_start, object u_mid,
            object u_end, double h):
    """Fixed-step RK4 for ``x' = A x + B u`` over a uniform grid.

    Same contract as the NumPy fallback: stage inputs are supplied for the
    step starts, midpoints and ends; returns (steps + 1, n) states.
    """
    cdef const double[:, ::1] A = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[:, ::1] B = np.ascontiguousarray(b, dtype=np.float64)
    cdef const double[:, ::1] U1 = np.ascontiguousarray(u_start, dtype=np.float64)
    cdef const double[:, ::1] U2 = np.ascontiguousarray(u_mid, dtype=np.float64)
    cdef const double[:, ::1] U3 = np.ascontiguousarray(u_end, dtype=np.float64)
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t m = B.shape[1]
    cdef Py_ssize_t steps = U1.shape[0]

    out_arr = np.empty((steps + 1, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    x0_arr = np.ascontiguousarray(x0, dtype=np.float64)
    cdef const double[::1] x0v = x0_arr

    work = np.empty((5, n), dtype=np.float64)
    cdef double[:, ::1] w = work
    cdef double[::1] k1 = w[0]
    cdef double[::1] k2 = w[1]
    cdef double[::1] k3 = w[2]
    cdef double[::1] k4 = w[3]
    cdef double[::1] xs = w[4]

    cdef Py_ssize_t k, i, j
    cdef double acc, h2 = 0.5 * h, h6 = h / 6.0

    for i in range(n):
        out[0, i] = x0v[i]

    with nogil:
        for k in range(steps):
            for i in range(n):
                acc = 0.0
                for j in range(n):
                    acc += A[i, j] * out[k, j]
                for j in range(m):
                    acc += B[i, j] * U1[k, j]
                k1[i] = acc
            for i in range(n):
                xs[i] = out[k, i] + h2 * k1[i]
            for i in range(n):
                acc = 0.0
                for j in range(n):
                    acc += A[i, j] * xs[j]
                for j in range(m):
                    acc += B[i, j] * U2[k, j]
                k2[i] = acc
            for i in range(n):
                xs[i] = out[k, i] + h2 * k2[i]
            for i in range(n):
                acc = 0.0
                for j in range(n):
                    acc += A[i, j] * xs[j]
                for j in range(m):
                    acc += B[i, j] * U2[k, j]
                k3[i] = acc
            for i in range(n):
                xs[i] = out[k, i] + h * k3[i]
            for i in range(n):
                acc = 0.0
                for j in range(n):
                    acc += A[i, j] * xs[j]
                for j in range(m):
                    acc += B[i, j] * U3[k, j]
                k4[i] = acc
            for i in range(n):
                out[k + 1, i] = out[k, i] + h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])

    return out_arr


def affine_scan(object e, object g, object x0):
    """Run the recursion ``x[k+1] = E x[k] + g[k]``; returns (len(g)+1, n)."""
    cdef const double[:, ::1] E = np.ascontiguousarray(e, dtype=np.float64)
    cdef const double[:, ::1] G = np.ascontiguousarray(g, dtype=np.float64)
    cdef Py_ssize_t n = E.shape[0]
    cdef Py_ssize_t steps = G.shape[0]

    out_arr = np.empty((steps + 1, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    x0_arr = np.ascontiguousarray(x0, dtype=np.float64)
    cdef const double[::1] x0v = x0_arr

    cdef Py_ssize_t k, i, j
    cdef double acc

    for i in range(n):
        out[0, i] = x0v[i]

    with nogil:
        for k in range(steps):
            for i in range(n):
                acc = G[k, i]
                for j in range(n):
                    acc += E[i, j] * out[k, j]
                out[k + 1, i] = acc

    return out_arr
