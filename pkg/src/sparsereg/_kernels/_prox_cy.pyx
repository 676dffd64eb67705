# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled coefficientwise prox kernel (see _prox_py for the reference)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, pow, isfinite

BACKEND = "cython"

cdef double NEWTON_TOL = 1e-12
cdef int NEWTON_MAX_ITER = 100


cdef double _interior_root(double a, double c, double q) nogil:
    # root of f(x) = x + c*x^(q-1) - a on [0, a], f increasing and concave
    cdef double lo = 0.0
    cdef double hi = a
    cdef double x = a
    cdef double f, deriv, xn
    cdef int it
    for it in range(NEWTON_MAX_ITER):
        f = x + c * pow(x, q - 1.0) - a
        if f > 0.0:
            hi = x
        elif f < 0.0:
            lo = x
        else:
            return x
        deriv = 1.0 + c * (q - 1.0) * pow(x, q - 2.0)
        xn = x - f / deriv
        if not isfinite(xn) or xn <= lo or xn >= hi:
            xn = 0.5 * (lo + hi)
        if fabs(xn - x) <= NEWTON_TOL:
            return xn
        x = xn
    return x


def prox_power(z, thresh, double q):
    """Coefficientwise minimizer of x -> 0.5*(x - z_i)^2 + thresh_i*|x|^q."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] zz = np.ascontiguousarray(z, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] tt = np.ascontiguousarray(thresh, dtype=np.float64)
    cdef Py_ssize_t n = zz.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i
    cdef double a, zi

    if q == 1.0:
        for i in range(n):
            zi = zz[i]
            a = fabs(zi) - tt[i]
            out[i] = 0.0 if a <= 0.0 else (a if zi > 0.0 else -a)
        return out
    if q == 2.0:
        for i in range(n):
            out[i] = zz[i] / (1.0 + 2.0 * tt[i])
        return out

    for i in range(n):
        zi = zz[i]
        a = fabs(zi)
        if a == 0.0:
            out[i] = 0.0
        else:
            out[i] = _interior_root(a, q * tt[i], q)
            if zi < 0.0:
                out[i] = -out[i]
    return out
