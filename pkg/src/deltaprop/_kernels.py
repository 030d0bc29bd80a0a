"""Compiled tridiagonal LU kernels (no pivoting).

The factorization is split from the solve so a frozen slice can reuse one
factorization for all of its Cayley sub-steps.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def lu_factor(lower, diag, upper, pivot_floor):
    """Doolittle LU of a tridiagonal matrix.

    Returns ``(mult, piv, bad)`` where ``mult[k]`` eliminates row ``k+1``,
    ``piv`` holds the U diagonal and ``bad`` is the first index whose pivot
    magnitude fell below ``pivot_floor`` (``-1`` when none did).
    """
    n = diag.shape[0]
    mult = np.zeros(max(n - 1, 0), dtype=np.complex128)
    piv = np.empty(n, dtype=np.complex128)
    piv[0] = diag[0]
    if abs(piv[0]) < pivot_floor:
        return mult, piv, 0
    for k in range(1, n):
        m = lower[k - 1] / piv[k - 1]
        mult[k - 1] = m
        piv[k] = diag[k] - m * upper[k - 1]
        if abs(piv[k]) < pivot_floor:
            return mult, piv, k
    return mult, piv, -1


@njit(cache=True)
def lu_solve(mult, piv, upper, b):
    n = piv.shape[0]
    x = np.empty(n, dtype=np.complex128)
    x[0] = b[0]
    for k in range(1, n):
        x[k] = b[k] - mult[k - 1] * x[k - 1]
    x[n - 1] = x[n - 1] / piv[n - 1]
    for k in range(n - 2, -1, -1):
        x[k] = (x[k] - upper[k] * x[k + 1]) / piv[k]
    return x
