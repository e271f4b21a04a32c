"""Pure-numpy fallback kernels.

Same contracts as ``_kernels_numba``.  The Sturm recurrence is sequential in
the matrix row index, so the numpy version vectorizes across *shifts*
instead: one pass over the matrix serves a whole batch of bisection
midpoints.  Adequate for tests and moderate dimensions; the jitted backend
is the one meant for production-size blocks.
"""

import numpy as np


def sturm_counts(diag, off2, shifts, pivmin):
    """Number of eigenvalues strictly below each shift (vectorized over shifts)."""
    shifts = np.asarray(shifts, dtype=float)
    q = diag[0] - shifts
    np.copyto(q, -pivmin, where=np.abs(q) < pivmin)
    counts = (q < 0.0).astype(np.int64)
    for i in range(1, diag.shape[0]):
        q = diag[i] - shifts - off2[i - 1] / q
        np.copyto(q, -pivmin, where=np.abs(q) < pivmin)
        counts += q < 0.0
    return counts


def solve_shifted(diag, off, shift, rhs, pivmin):
    """Solve (T - shift*I) x = rhs by LU with partial pivoting (plain loops)."""
    n = diag.shape[0]
    dd = (diag - shift).astype(float)
    uu1 = np.zeros(n)
    uu1[: n - 1] = off
    uu2 = np.zeros(n)
    x = rhs.astype(float).copy()
    for i in range(n - 1):
        sub = off[i]
        if abs(dd[i]) >= abs(sub):
            piv = dd[i]
            if abs(piv) < pivmin:
                piv = -pivmin
                dd[i] = piv
            m = sub / piv
            dd[i + 1] -= m * uu1[i]
            if i + 1 < n - 1:
                uu1[i + 1] -= m * uu2[i]
            x[i + 1] -= m * x[i]
        else:
            m = dd[i] / sub
            s1, s2 = uu1[i], uu2[i]
            dd[i] = sub
            uu1[i] = dd[i + 1]
            uu2[i] = off[i + 1] if i + 1 < n - 1 else 0.0
            dd[i + 1] = s1 - m * uu1[i]
            if i + 1 < n - 1:
                uu1[i + 1] = s2 - m * uu2[i]
            x[i], x[i + 1] = x[i + 1], x[i] - m * x[i + 1]
    for i in range(n - 1, -1, -1):
        acc = x[i]
        if i + 1 < n:
            acc -= uu1[i] * x[i + 1]
        if i + 2 < n:
            acc -= uu2[i] * x[i + 2]
        piv = dd[i]
        if abs(piv) < pivmin:
            piv = -pivmin
        x[i] = acc / piv
    return x
