"""NumPy fallback for the coefficientwise prox kernel."""

import numpy as np

BACKEND = "python"

_NEWTON_TOL = 1e-12
_NEWTON_MAX_ITER = 100


def prox_power(z, thresh, q):
    """Coefficientwise minimizer of x -> 0.5*(x - z_i)^2 + thresh_i*|x|^q.

    ``z`` and ``thresh`` are 1-d float arrays of equal length, ``thresh``
    nonnegative, ``1 <= q <= 2``.  For interior exponents the stationarity
    equation x + q*thresh*x^(q-1) = |z| is solved on [0, |z|] by
    bracketed Newton iteration (absolute tolerance 1e-12).
    """
    z = np.asarray(z, dtype=np.float64)
    thresh = np.asarray(thresh, dtype=np.float64)
    if q == 1.0:
        return np.sign(z) * np.maximum(np.abs(z) - thresh, 0.0)
    if q == 2.0:
        return z / (1.0 + 2.0 * thresh)

    a = np.abs(z)
    c = q * thresh
    x = a.copy()
    lo = np.zeros_like(a)
    hi = a.copy()
    active = a > 0.0
    for _ in range(_NEWTON_MAX_ITER):
        if not active.any():
            break
        xa = x[active]
        ca = c[active]
        fa = xa + ca * xa ** (q - 1.0) - a[active]
        pos = fa > 0.0
        hi_a = hi[active]
        lo_a = lo[active]
        hi_a[pos] = xa[pos]
        lo_a[~pos] = xa[~pos]
        deriv = 1.0 + ca * (q - 1.0) * xa ** (q - 2.0)
        xn = xa - fa / deriv
        bad = ~np.isfinite(xn) | (xn <= lo_a) | (xn >= hi_a)
        xn[bad] = 0.5 * (lo_a[bad] + hi_a[bad])
        done = np.abs(xn - xa) <= _NEWTON_TOL
        x[active] = xn
        hi[active] = hi_a
        lo[active] = lo_a
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    return np.sign(z) * x
