"""Pure-Python simplex pivot loop (fallback for the compiled kernel).

Arithmetic order matches ``_kernel.pyx`` so both backends follow the same
pivot sequence on the same input.
"""

import numpy as np

OPTIMAL, UNBOUNDED, ITERATION_LIMIT = 0, 1, 2


def pivot(T, basis, row, col):
    T[row, :] = T[row, :] / T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    nz = np.flatnonzero(factors)
    if nz.size:
        T[nz, :] = T[nz, :] - np.outer(factors[nz], T[row, :])
    T[:, col] = 0.0
    T[row, col] = 1.0
    basis[row] = col


def simplex_loop(T, basis, allowed, max_iter, cost_tol, pivot_tol):
    """Bland's-rule primal simplex on tableau ``T`` (last row = reduced costs).

    Returns ``(status, iterations, column)``; ``column`` is the entering
    column that proved unboundedness, else -1.
    """
    m = T.shape[0] - 1
    n = T.shape[1] - 1
    cost = T[m]
    it = 0
    while it < max_iter:
        candidates = np.flatnonzero((cost[:n] < -cost_tol) & allowed)
        if candidates.size == 0:
            return OPTIMAL, it, -1
        q = int(candidates[0])
        colv = T[:m, q]
        rows = np.flatnonzero(colv > pivot_tol)
        if rows.size == 0:
            return UNBOUNDED, it, q
        ratios = T[rows, n] / colv[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
        r = int(ties[np.argmin(basis[ties])])
        pivot(T, basis, r, q)
        it += 1
    return ITERATION_LIMIT, it, -1
