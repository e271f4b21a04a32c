"""Jitted hot kernels: batched Sturm counts and a shifted tridiagonal solve.

Signatures mirror ``_kernels_numpy`` exactly; ``backend.get_kernels`` picks
one of the two modules at runtime.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def sturm_counts(diag, off2, shifts, pivmin):
    """Number of eigenvalues strictly below each shift.

    ``off2`` holds the squared off-diagonal entries.  Counts negative pivots
    of the LDL^T recurrence; pivots smaller in magnitude than ``pivmin`` are
    replaced by ``-pivmin`` so the recurrence never divides by zero.
    """
    n = diag.shape[0]
    m = shifts.shape[0]
    counts = np.zeros(m, dtype=np.int64)
    for j in range(m):
        x = shifts[j]
        c = 0
        q = 1.0
        for i in range(n):
            q = diag[i] - x - (off2[i - 1] / q if i > 0 else 0.0)
            if np.abs(q) < pivmin:
                q = -pivmin
            if q < 0.0:
                c += 1
        counts[j] = c
    return counts


@njit(cache=True, nogil=True)
def solve_shifted(diag, off, shift, rhs, pivmin):
    """Solve (T - shift*I) x = rhs, T symmetric tridiagonal, by LU with
    partial pivoting (one fill-in superdiagonal).

    Pivots are clamped at ``pivmin`` so a solve exactly at an eigenvalue
    stays finite; inverse iteration relies on this.
    """
    n = diag.shape[0]
    dd = diag - shift
    uu1 = np.zeros(n)
    uu2 = np.zeros(n)
    for i in range(n - 1):
        uu1[i] = off[i]
    x = rhs.copy()
    for i in range(n - 1):
        sub = off[i]
        if np.abs(dd[i]) >= np.abs(sub):
            piv = dd[i]
            if np.abs(piv) < pivmin:
                piv = -pivmin
                dd[i] = piv
            m = sub / piv
            dd[i + 1] = dd[i + 1] - m * uu1[i]
            if i + 1 < n - 1:
                uu1[i + 1] = uu1[i + 1] - m * uu2[i]
            x[i + 1] = x[i + 1] - m * x[i]
        else:
            m = dd[i] / sub
            s1 = uu1[i]
            s2 = uu2[i]
            dd[i] = sub
            uu1[i] = dd[i + 1]
            uu2[i] = off[i + 1] if i + 1 < n - 1 else 0.0
            dd[i + 1] = s1 - m * uu1[i]
            if i + 1 < n - 1:
                uu1[i + 1] = s2 - m * uu2[i]
            t = x[i]
            x[i] = x[i + 1]
            x[i + 1] = t - m * x[i]
    # back substitution
    for i in range(n - 1, -1, -1):
        acc = x[i]
        if i + 1 < n:
            acc -= uu1[i] * x[i + 1]
        if i + 2 < n:
            acc -= uu2[i] * x[i + 2]
        piv = dd[i]
        if np.abs(piv) < pivmin:
            piv = -pivmin
        x[i] = acc / piv
    return x
