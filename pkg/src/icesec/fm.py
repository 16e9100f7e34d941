"""Fourier-Motzkin projection of a rate polytope onto ``(R1, R2)``.

Used as a brute-force oracle for the LP support functions in
:mod:`icesec.region`. Redundant rows are pruned with scipy's HiGHS solver so
that this path shares no code with the in-house simplex.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .region import FMCapExceeded, InfeasiblePolytope, RatePolytope

DEFAULT_ROW_CAP = 1_000_000
_ZERO = 1e-12


@dataclass(frozen=True)
class Inequality:
    """``a1 * R1 + a2 * R2 <= b``."""

    a1: float
    a2: float
    b: float

    def __str__(self) -> str:
        return f"{self.a1:+.6g}*R1 {self.a2:+.6g}*R2 <= {self.b:.6g}"


@dataclass(frozen=True)
class ProjectedRegion:
    inequalities: tuple[Inequality, ...]
    max_rows: int = 0

    def __iter__(self):
        return iter(self.inequalities)

    def __len__(self):
        return len(self.inequalities)

    def contains(self, r1: float, r2: float, tol: float = 1e-9) -> bool:
        return all(q.a1 * r1 + q.a2 * r2 <= q.b + tol for q in self.inequalities)

    def vertices(self, tol: float = 1e-9) -> list[tuple[float, float]]:
        out = []
        rows = self.inequalities
        for p, q in itertools.combinations(rows, 2):
            det = p.a1 * q.a2 - p.a2 * q.a1
            if abs(det) < 1e-12:
                continue
            x = (p.b * q.a2 - p.a2 * q.b) / det
            y = (p.a1 * q.b - p.b * q.a1) / det
            if self.contains(x, y, tol):
                out.append((x, y))
        return out

    def support(self, weight: Sequence[float]) -> float:
        """``max w.(R1, R2)`` by enumerating polygon vertices."""
        verts = self.vertices()
        if not verts:
            raise InfeasiblePolytope("projected region is empty")
        w1, w2 = weight
        return max(w1 * x + w2 * y for x, y in verts)


def _lift(poly: RatePolytope):
    """Rewrite the system in y = (R1, R2, R_C1, R_C2, Rx_C1..Rx_O2) with
    R_S1 = R1 - R_C1 and R_S2 = R2 - R_C2."""
    n = len(poly.variables)
    M = np.zeros((n, n))
    M[0, 2] = 1.0                 # R_C1
    M[1, 0], M[1, 2] = 1.0, -1.0  # R_S1
    M[2, 3] = 1.0                 # R_C2
    M[3, 1], M[3, 3] = 1.0, -1.0  # R_S2
    for k in range(4, n):
        M[k, k] = 1.0
    G = np.vstack([poly.A_ub @ M, -M])
    h = np.concatenate([poly.b_ub, np.zeros(n)])
    return G, h, poly.A_eq @ M, poly.b_eq.copy()


def _normalize(G, h):
    G = np.where(np.abs(G) < _ZERO, 0.0, G)
    scale = np.abs(G).max(axis=1)
    empty = scale == 0
    if np.any(h[empty] < -1e-9):
        raise InfeasiblePolytope("Fourier-Motzkin derived 0 <= negative")
    G, h, scale = G[~empty], h[~empty], scale[~empty]
    G = G / scale[:, None]
    h = h / scale
    # exact duplicates after rounding: keep the tightest
    keys = np.round(G, 10)
    best: dict[bytes, int] = {}
    for i in range(G.shape[0]):
        k = keys[i].tobytes()
        j = best.get(k)
        if j is None or h[i] < h[j]:
            best[k] = i
    idx = sorted(best.values())
    return G[idx], h[idx]


def _prune(G, h, cols):
    """Drop rows implied by the others (LP check over the live columns)."""
    keep = list(range(G.shape[0]))
    sub = G[:, cols]
    for i in range(G.shape[0] - 1, -1, -1):
        others = [k for k in keep if k != i]
        if not others:
            continue
        res = linprog(-sub[i], A_ub=sub[others], b_ub=h[others],
                      bounds=[(None, None)] * len(cols), method="highs")
        if res.status == 2:
            raise InfeasiblePolytope("Fourier-Motzkin system is infeasible")
        if res.status == 0 and -res.fun <= h[i] + 1e-10 * max(1.0, abs(h[i])):
            keep.remove(i)
    return G[keep], h[keep]


def fm_project(poly: RatePolytope, row_cap: int = DEFAULT_ROW_CAP,
               prune_above: int = 24) -> ProjectedRegion:
    """Eliminate every variable except ``R1, R2`` by Fourier-Motzkin."""
    G, h, E, f = _lift(poly)
    live = list(range(2, G.shape[1]))
    # the randomization equality removes one variable by substitution
    for k in range(E.shape[0]):
        e, fk = E[k], f[k]
        cand = [j for j in live if abs(e[j]) > _ZERO]
        if not cand:
            if abs(fk) > 1e-9 or np.any(np.abs(e[:2]) > _ZERO):
                raise InfeasiblePolytope("equality has no eliminable variable")
            continue
        p = max(cand, key=lambda j: abs(e[j]))
        coef = G[:, p] / e[p]
        G = G - np.outer(coef, e)
        h = h - coef * fk
        G[:, p] = 0.0
        if k + 1 < E.shape[0]:
            c2 = E[k + 1:, p] / e[p]
            E[k + 1:] -= np.outer(c2, e)
            f[k + 1:] -= c2 * fk
        live.remove(p)
    G, h = _normalize(G, h)
    max_rows = G.shape[0]
    while live:
        def score(j):
            pos = int(np.sum(G[:, j] > 0))
            neg = int(np.sum(G[:, j] < 0))
            return pos * neg - pos - neg
        j = min(live, key=score)
        pos = np.nonzero(G[:, j] > 0)[0]
        neg = np.nonzero(G[:, j] < 0)[0]
        zero = np.nonzero(G[:, j] == 0)[0]
        n_new = len(zero) + len(pos) * len(neg)
        if n_new > row_cap:
            raise FMCapExceeded(f"eliminating column {j} would create {n_new} rows (cap {row_cap})")
        new_G = [G[zero]]
        new_h = [h[zero]]
        if len(pos) and len(neg):
            gp, gn = G[pos], G[neg]
            ap, an = gp[:, j], -gn[:, j]
            comb = (gp[:, None, :] / ap[:, None, None]) + (gn[None, :, :] / an[None, :, None])
            hb = h[pos][:, None] / ap[:, None] + h[neg][None, :] / an[None, :]
            new_G.append(comb.reshape(-1, G.shape[1]))
            new_h.append(hb.ravel())
        G = np.vstack(new_G)
        h = np.concatenate(new_h)
        G[:, j] = 0.0
        live.remove(j)
        max_rows = max(max_rows, G.shape[0])
        G, h = _normalize(G, h)
        if G.shape[0] > prune_above:
            G, h = _prune(G, h, [0, 1] + live)
    G, h = _prune(G, h, [0, 1])
    rows = tuple(Inequality(float(g[0]), float(g[1]), float(b)) for g, b in zip(G, h))
    region = ProjectedRegion(rows, max_rows)
    if not region.vertices():
        raise InfeasiblePolytope("projected region is empty")
    return region
