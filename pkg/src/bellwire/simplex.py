"""Dense-tableau primal simplex for small equality-form linear programs.

Solves  max c.x  subject to  A x = b, x >= 0  in two phases with Bland's
anti-cycling pivot rule.  The polytopes in this package are tiny (hundreds of
variables), so a dense float tableau with a 1e-9 feasibility tolerance is both
simple and exact enough; known closed-form optima are pinned in the tests.
"""

from __future__ import annotations

import numpy as np

FEASIBILITY_TOL = 1e-9


class LPError(Exception):
    pass


class LPInfeasibleError(LPError):
    pass


class LPUnboundedError(LPError):
    pass


def _pivot(tableau: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    column = tableau[:, col].copy()
    column[row] = 0.0
    tableau -= np.outer(column, tableau[row])
    # Rebuild exact unit column; the rank-1 update leaves O(eps) residue.
    tableau[:, col] = 0.0
    tableau[row, col] = 1.0
    basis[row] = col


def _bland_step(tableau: np.ndarray, basis: np.ndarray, n_cols: int) -> bool:
    """One pivot by Bland's rule on a max tableau (last row holds -reduced costs).

    Returns False if the tableau is already optimal.  Raises on unboundedness.
    """
    costs = tableau[-1, :n_cols]
    entering = -1
    for j in range(n_cols):
        if costs[j] < -FEASIBILITY_TOL:
            entering = j
            break
    if entering < 0:
        return False
    col = tableau[:-1, entering]
    rhs = tableau[:-1, -1]
    best_ratio = np.inf
    leaving = -1
    for i in range(col.size):
        if col[i] > FEASIBILITY_TOL:
            ratio = rhs[i] / col[i]
            # Bland tie-break: smallest basis index among minimal ratios.
            if ratio < best_ratio - FEASIBILITY_TOL or (
                ratio < best_ratio + FEASIBILITY_TOL
                and (leaving < 0 or basis[i] < basis[leaving])
            ):
                best_ratio = min(best_ratio, ratio)
                leaving = i
    if leaving < 0:
        raise LPUnboundedError("objective unbounded above on the feasible region")
    _pivot(tableau, basis, leaving, entering)
    return True


def _run(tableau: np.ndarray, basis: np.ndarray, n_cols: int, max_iters: int) -> None:
    for _ in range(max_iters):
        if not _bland_step(tableau, basis, n_cols):
            return
    raise LPError(f"simplex did not terminate within {max_iters} pivots")


def solve_lp_max(c, a_eq, b_eq) -> tuple[float, np.ndarray]:
    """Maximize ``c.x`` over ``a_eq x = b_eq, x >= 0``.

    Returns (optimal value, optimal x).  Redundant equality rows are tolerated;
    infeasibility raises :class:`LPInfeasibleError`.
    """
    c = np.asarray(c, dtype=float)
    a = np.asarray(a_eq, dtype=float).copy()
    b = np.asarray(b_eq, dtype=float).copy()
    m, n = a.shape
    if c.shape != (n,) or b.shape != (m,):
        raise ValueError("inconsistent LP dimensions")

    neg = b < 0
    a[neg] *= -1.0
    b[neg] *= -1.0

    # Phase 1: artificial basis, minimize the artificial sum.
    tableau = np.zeros((m + 1, n + m + 1))
    tableau[:m, :n] = a
    tableau[:m, n : n + m] = np.eye(m)
    tableau[:m, -1] = b
    tableau[-1, :n] = -a.sum(axis=0)
    tableau[-1, -1] = -b.sum()
    basis = np.arange(n, n + m)
    _run(tableau, basis, n + m, max_iters=50 * (n + m + 1))
    if tableau[-1, -1] < -1e-7:
        raise LPInfeasibleError(f"phase-1 residual {-tableau[-1, -1]:.3e}")

    # Drive leftover artificials out of the basis; rows with no eligible pivot
    # are redundant constraints and are dropped.
    keep_rows = []
    for i in range(m):
        if basis[i] < n:
            keep_rows.append(i)
            continue
        pivot_col = -1
        for j in range(n):
            if abs(tableau[i, j]) > FEASIBILITY_TOL and j not in set(basis[keep_rows]):
                pivot_col = j
                break
        if pivot_col >= 0:
            _pivot(tableau, basis, i, pivot_col)
            keep_rows.append(i)
    rows = keep_rows + [m]
    tableau = tableau[rows][:, list(range(n)) + [n + m]]
    basis = basis[keep_rows]

    # Phase 2: restore the real objective, priced out over the current basis.
    tableau[-1, :] = 0.0
    tableau[-1, :n] = -c
    for i, bi in enumerate(basis):
        if abs(tableau[-1, bi]) > 0.0:
            tableau[-1] -= tableau[-1, bi] * tableau[i]
    _run(tableau, basis, n, max_iters=200 * (n + 1))

    x = np.zeros(n)
    x[basis] = tableau[:-1, -1]
    return float(c @ x), x
