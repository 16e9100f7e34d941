"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Solves ``max c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0`` for the
small rate polytopes used here (tens of variables, around a hundred rows).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FEAS_TOL = 1e-9
_COST_TOL = 1e-11
_PIVOT_TOL = 1e-11
_MAX_ITER = 50_000


class LPError(RuntimeError):
    pass


class LPInfeasible(LPError):
    def __init__(self, residual: float, multipliers: np.ndarray):
        super().__init__(f"infeasible (phase-one residual {residual:.3e})")
        self.residual = residual
        # one multiplier per original row: ub rows first, then eq rows
        self.multipliers = multipliers


class LPUnbounded(LPError):
    pass


@dataclass
class LPResult:
    x: np.ndarray
    value: float
    iterations: int = 0


@dataclass
class _Tableau:
    T: np.ndarray                 # (m, ncols + 1), last column is the rhs
    basis: list[int]
    n: int                        # original variables
    art: set[int] = field(default_factory=set)
    iterations: int = 0

    def pivot(self, r: int, j: int):
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        nz = np.nonzero(col)[0]
        if nz.size:
            T[nz] -= np.outer(col[nz], T[r])
        self.basis[r] = j
        self.iterations += 1

    def optimize(self, cost: np.ndarray, allowed: np.ndarray):
        """Bland-rule primal simplex on the current feasible basis."""
        T = self.T
        for _ in range(_MAX_ITER):
            d = cost - cost[self.basis] @ T[:, :-1]
            cand = np.nonzero((d > _COST_TOL) & allowed)[0]
            if cand.size == 0:
                return
            j = int(cand[0])
            colj = T[:, j]
            rows = np.nonzero(colj > _PIVOT_TOL)[0]
            if rows.size == 0:
                raise LPUnbounded(f"column {j} is unbounded")
            ratios = np.maximum(T[rows, -1], 0.0) / colj[rows]
            best = ratios.min()
            tied = rows[ratios <= best + 1e-14 * max(1.0, abs(best))]
            r = int(min(tied, key=lambda i: self.basis[i]))
            self.pivot(r, j)
        raise LPError("simplex iteration limit reached")


def maximize(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None,
             feas_tol: float = FEAS_TOL) -> LPResult:
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq

    sign = np.ones(m)
    sign[:m_ub][b_ub < 0] = -1.0
    sign[m_ub:][b_eq < 0] = -1.0
    needs_art = np.concatenate([b_ub < 0, np.ones(m_eq, dtype=bool)])
    n_art = int(needs_art.sum())
    ncols = n + m_ub + n_art

    T = np.zeros((m, ncols + 1))
    T[:m_ub, :n] = A_ub
    T[m_ub:, :n] = A_eq
    T[:m_ub, n:n + m_ub] = np.eye(m_ub)
    T[:m_ub, -1] = b_ub
    T[m_ub:, -1] = b_eq
    T *= sign[:, None]

    basis = []
    init_col = np.empty(m, dtype=int)
    art_cols = []
    k = n + m_ub
    for i in range(m):
        if needs_art[i]:
            T[i, k] = 1.0
            basis.append(k)
            art_cols.append(k)
            k += 1
        else:
            basis.append(n + i)
        init_col[i] = basis[-1]
    tab = _Tableau(T, basis, n, set(art_cols))

    allowed = np.ones(ncols, dtype=bool)
    if n_art:
        cost1 = np.zeros(ncols)
        cost1[art_cols] = -1.0
        tab.optimize(cost1, allowed)
        residual = float(np.maximum(T[[i for i, b in enumerate(tab.basis) if b in tab.art], -1], 0).sum())
        if residual > feas_tol:
            y = cost1[tab.basis] @ T[:, init_col]
            raise LPInfeasible(residual, -y * sign)
        # drive remaining artificials out of the basis
        for i in range(T.shape[0] - 1, -1, -1):
            if tab.basis[i] not in tab.art:
                continue
            cand = np.nonzero(np.abs(T[i, :n + m_ub]) > 1e-9)[0]
            if cand.size:
                tab.pivot(i, int(cand[0]))
            else:
                T = np.delete(T, i, axis=0)
                tab.T = T
                del tab.basis[i]
        T = tab.T
        allowed[art_cols] = False
        T[:, art_cols] = 0.0

    cost2 = np.zeros(ncols)
    cost2[:n] = c
    tab.optimize(cost2, allowed)
    T = tab.T
    x = np.zeros(ncols)
    x[tab.basis] = T[:, -1]
    x = np.maximum(x[:n], 0.0)
    return LPResult(x=x, value=float(c @ x), iterations=tab.iterations)
