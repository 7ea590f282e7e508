# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled mini-batch SGD epoch for linear logistic / hinge models.

Mirrors ``fairsemi._sgd_py.sgd_epoch`` operation for operation.
"""
from libc.math cimport exp


cdef inline double _sigmoid(double z) nogil:
    cdef double e
    if z >= 0:
        return 1.0 / (1.0 + exp(-z))
    e = exp(z)
    return e / (1.0 + e)


def sgd_epoch(const double[:, ::1] X, const double[::1] y, double[::1] w, double b,
              const long long[::1] order, double lr, double l2, int batch_size,
              int hinge):
    """Run one epoch over ``order`` in place on ``w``; return the new intercept."""
    cdef Py_ssize_t n = order.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t start, stop, t, j, i
    cdef double z, g, gb, m, s
    cdef double[::1] gw = w.copy()
    with nogil:
        start = 0
        while start < n:
            stop = start + batch_size
            if stop > n:
                stop = n
            m = stop - start
            for j in range(d):
                gw[j] = 0.0
            gb = 0.0
            for t in range(start, stop):
                i = order[t]
                z = b
                for j in range(d):
                    z = z + X[i, j] * w[j]
                if hinge:
                    s = 2.0 * y[i] - 1.0
                    g = -s if s * z < 1.0 else 0.0
                else:
                    g = _sigmoid(z) - y[i]
                if g != 0.0:
                    for j in range(d):
                        gw[j] = gw[j] + g * X[i, j]
                    gb = gb + g
            for j in range(d):
                w[j] = w[j] - lr * (gw[j] / m + l2 * w[j])
            b = b - lr * (gb / m)
            start = stop
    return b
