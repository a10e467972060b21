"""Dense two-phase simplex solver for small linear programs.

Solves   min c^T x   s.t.  A x <= b,  x >= 0

at desk scale (a few hundred variables/constraints), which covers the sparse
recovery LP (2d + k variables, 2k + 1 constraints after eliminating the free
theta through its positive/negative split).  Rows with negative right-hand
sides are flipped and given artificial variables; phase 1 drives those out.
Pivoting is Dantzig's rule with an automatic switch to Bland's rule after a
run of degenerate pivots, so the solver is fast in the typical case and
cannot cycle.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = ["LpStatus", "LpResult", "solve_lp"]

_TOL = 1e-9
_STALL_LIMIT = 40  # degenerate pivots tolerated before switching to Bland


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass(frozen=True)
class LpResult:
    status: LpStatus
    x: np.ndarray | None
    objective: float
    iterations: int


def _pivot(tableau: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= np.outer(factors, tableau[row])
    basis[row] = col


def _iterate(
    tableau: np.ndarray,
    basis: np.ndarray,
    cost: np.ndarray,
    allowed: np.ndarray,
    max_iter: int,
) -> tuple[LpStatus, int]:
    """Simplex iterations on the (m x ncols+1) tableau (RHS last column),
    minimizing ``cost`` over the columns where ``allowed`` is True."""
    m, width = tableau.shape
    n = width - 1
    it = 0
    stall = 0
    while it < max_iter:
        reduced = cost[:n] - cost[basis] @ tableau[:, :n]
        candidates = np.flatnonzero(allowed & (reduced < -_TOL))
        if candidates.size == 0:
            return LpStatus.OPTIMAL, it
        if stall < _STALL_LIMIT:
            enter = int(candidates[np.argmin(reduced[candidates])])
        else:
            enter = int(candidates[0])  # Bland: lowest index, no cycling
        col = tableau[:, enter]
        rows = np.flatnonzero(col > _TOL)
        if rows.size == 0:
            return LpStatus.UNBOUNDED, it
        ratios = tableau[rows, -1] / col[rows]
        best = np.min(ratios)
        # the tie window must stay far below the smallest constraint scale
        # (the recovery LP mixes O(1) rows with an O(xi) row)
        ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        leave = int(ties[np.argmin(basis[ties])])  # Bland tie-break
        stall = stall + 1 if best <= _TOL else 0
        _pivot(tableau, basis, leave, enter)
        it += 1
    return LpStatus.ITERATION_LIMIT, it


def solve_lp(
    c: np.ndarray,
    A_ub: np.ndarray,
    b_ub: np.ndarray,
    max_iter: int = 100000,
) -> LpResult:
    """Two-phase dense simplex for  min c^T x  s.t.  A_ub x <= b_ub, x >= 0."""
    c = np.asarray(c, dtype=float)
    A = np.asarray(A_ub, dtype=float)
    b = np.asarray(b_ub, dtype=float).copy()
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,):
        raise ValueError("inconsistent LP dimensions")

    # standard form A x + s = b, s >= 0; rows with b < 0 are flipped, which
    # makes their slack coefficient -1, so those rows get artificials
    body = np.hstack([A, np.eye(m)])
    neg = b < 0
    body[neg] *= -1.0
    b[neg] *= -1.0
    art_rows = np.flatnonzero(neg)
    n_art = art_rows.size

    ncols = n + m + n_art
    tableau = np.zeros((m, ncols + 1))
    tableau[:, : n + m] = body
    for j, r in enumerate(art_rows):
        tableau[r, n + m + j] = 1.0
    tableau[:, -1] = b

    basis = np.empty(m, dtype=np.int64)
    basis[:] = n + np.arange(m)  # slack basis where possible
    for j, r in enumerate(art_rows):
        basis[r] = n + m + j

    allowed = np.ones(ncols, dtype=bool)
    it1 = 0
    if n_art:
        phase1_cost = np.zeros(ncols)
        phase1_cost[n + m :] = 1.0
        status, it1 = _iterate(tableau, basis, phase1_cost, allowed, max_iter)
        if status is not LpStatus.OPTIMAL:
            return LpResult(status=status, x=None, objective=np.nan, iterations=it1)
        if float(phase1_cost[basis] @ tableau[:, -1]) > 1e-7:
            return LpResult(
                status=LpStatus.INFEASIBLE, x=None, objective=np.nan, iterations=it1
            )
        # pivot leftover degenerate artificials out of the basis if possible
        for r in range(m):
            if basis[r] >= n + m:
                pivots = np.flatnonzero(np.abs(tableau[r, : n + m]) > _TOL)
                if pivots.size:
                    _pivot(tableau, basis, r, int(pivots[0]))

    phase2_cost = np.zeros(ncols)
    phase2_cost[:n] = c
    allowed[n + m :] = False
    status, it2 = _iterate(tableau, basis, phase2_cost, allowed, max_iter - it1)
    if status is not LpStatus.OPTIMAL:
        return LpResult(status=status, x=None, objective=np.nan, iterations=it1 + it2)

    # refactorize: solve the final basic system from the original data so the
    # answer does not carry the roundoff accumulated over the pivots
    full = np.zeros((m, ncols))
    full[:, : n + m] = body
    for j, r in enumerate(art_rows):
        full[r, n + m + j] = 1.0
    B = full[:, basis]
    try:
        xb = np.linalg.solve(B, b)
    except np.linalg.LinAlgError:
        xb = np.linalg.lstsq(B, b, rcond=None)[0]
    x = np.zeros(n)
    for r, col in enumerate(basis):
        if col < n:
            x[col] = xb[r]
    return LpResult(
        status=LpStatus.OPTIMAL,
        x=x,
        objective=float(c @ x),
        iterations=it1 + it2,
    )
