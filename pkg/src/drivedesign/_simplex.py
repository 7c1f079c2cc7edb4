"""Dense two-phase simplex for the solver's LP relaxations.

Solves   min c.x   s.t.  A x <= b,  lo <= x <= hi

with a plain tableau method: variables are shifted to y = x - lo >= 0,
finite upper bounds become extra rows, negative right-hand sides get
artificial variables, and phase 1 minimizes their sum.  Pivoting is
Dantzig's rule with lowest-index tie-breaking, switching to Bland's rule
after a stall, so runs are deterministic and finite.  Problem sizes here
are small (tens of variables); no sparsity or revised-form machinery is
warranted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["LpResult", "solve_lp"]

_EPS = 1e-9
_STALL_LIMIT = 200


@dataclass(frozen=True)
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    objective: float | None


def _pivot(T: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    for i in range(T.shape[0]):
        if i != row and T[i, col] != 0.0:
            T[i] -= T[i, col] * T[row]
    basis[row] = col


def _iterate(T: np.ndarray, basis: np.ndarray, obj: np.ndarray, ncols: int) -> str:
    """Run simplex pivots until optimal or unbounded; obj is the reduced-cost row."""
    stall = 0
    last_val = math.inf
    use_bland = False  # sticky once engaged, or Dantzig can re-enter a near-cycle
    for _ in range(200 * (T.shape[0] + ncols) + 1000):
        candidates = np.nonzero(obj[:ncols] < -_EPS)[0]
        if candidates.size == 0:
            return "optimal"
        if use_bland:
            col = int(candidates[0])
        else:
            col = int(candidates[np.argmin(obj[candidates])])
        ratios = np.full(T.shape[0], math.inf)
        positive = T[:, col] > _EPS
        ratios[positive] = T[positive, -1] / T[positive, col]
        best = ratios.min()
        if not math.isfinite(best):
            return "unbounded"
        tied = np.nonzero(ratios <= best + 1e-12)[0]
        row = int(tied[np.argmin(basis[tied])]) if use_bland else int(tied[0])
        _pivot(T, basis, row, col)
        obj -= obj[col] * T[row]
        val = obj[-1]
        # relative test: 1e-11-sized "progress" on an O(1) objective is a stall
        if val < last_val - 1e-9 * (1.0 + abs(last_val)):
            stall = 0
        else:
            stall += 1
            if stall > _STALL_LIMIT:
                use_bland = True
        last_val = val
    raise RuntimeError("simplex failed to terminate")


def solve_lp(
    c: np.ndarray,
    a_ub: np.ndarray,
    b_ub: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
) -> LpResult:
    """Minimize c.x over A x <= b, lo <= x <= hi.

    Lower bounds must be finite; upper bounds may be +inf.  Returns
    status "optimal" with the minimizer, "infeasible", or "unbounded".
    """
    c = np.asarray(c, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    nx = c.size
    if not np.all(np.isfinite(lo)):
        raise ValueError("lower bounds must be finite")
    if np.any(hi < lo):
        return LpResult(status="infeasible", x=None, objective=None)
    a_ub = np.asarray(a_ub, dtype=float).reshape(-1, nx)
    b_ub = np.asarray(b_ub, dtype=float)

    rows = [a_ub]
    rhs = [b_ub - a_ub @ lo]
    finite_ub = np.nonzero(np.isfinite(hi))[0]
    if finite_ub.size:
        ub_rows = np.zeros((finite_ub.size, nx))
        ub_rows[np.arange(finite_ub.size), finite_ub] = 1.0
        rows.append(ub_rows)
        rhs.append(hi[finite_ub] - lo[finite_ub])
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    m = A.shape[0]
    if m == 0:
        # Box-only problem: each coordinate optimizes independently.
        x = np.where(c >= 0.0, lo, hi)
        if np.any(~np.isfinite(x)):
            return LpResult(status="unbounded", x=None, objective=None)
        return LpResult(status="optimal", x=x, objective=float(c @ x))

    neg = b < 0
    A = np.where(neg[:, None], -A, A)
    b = np.where(neg, -b, b)
    slack_sign = np.where(neg, -1.0, 1.0)
    art_idx = np.nonzero(neg)[0]
    n_art = art_idx.size

    # Columns: y (nx) | slacks (m) | artificials (n_art) | rhs.
    T = np.zeros((m, nx + m + n_art + 1))
    T[:, :nx] = A
    T[np.arange(m), nx + np.arange(m)] = slack_sign
    for j, i in enumerate(art_idx):
        T[i, nx + m + j] = 1.0
    T[:, -1] = b

    basis = np.empty(m, dtype=int)
    basis[:] = nx + np.arange(m)
    basis[art_idx] = nx + m + np.arange(n_art)

    # Phase-2 reduced costs are carried through phase-1 pivots.
    cost2 = np.zeros(nx + m + n_art + 1)
    cost2[:nx] = c
    cost2[-1] = 0.0

    if n_art:
        cost1 = np.zeros(nx + m + n_art + 1)
        cost1[nx + m : nx + m + n_art] = 1.0
        for i in art_idx:
            cost1 -= T[i] * 1.0
        status = _iterate(T, basis, cost1, nx + m)  # artificials never re-enter
        if status != "optimal" or -cost1[-1] > 1e-7 * (1.0 + np.abs(b).max()):
            return LpResult(status="infeasible", x=None, objective=None)
        # Drive any residual basic artificials out of the basis.
        for i in range(m):
            if basis[i] >= nx + m:
                pivot_col = -1
                for j in range(nx + m):
                    if abs(T[i, j]) > _EPS:
                        pivot_col = j
                        break
                if pivot_col >= 0:
                    _pivot(T, basis, i, pivot_col)

    for i in range(m):
        if basis[i] < nx + m:
            cost2 -= cost2[basis[i]] * T[i]
    status = _iterate(T, basis, cost2, nx + m)
    if status == "unbounded":
        return LpResult(status="unbounded", x=None, objective=None)

    y = np.zeros(nx + m + n_art)
    y[basis] = T[:, -1]
    x = y[:nx] + lo
    np.clip(x, lo, hi, out=x)
    return LpResult(status="optimal", x=x, objective=float(c @ x))
