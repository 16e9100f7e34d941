"""Rate-region polytope for cooperative binning and channel prefixing.

The region for a fixed input distribution lives in ten rate variables: four
secrecy rates (``R_C1, R_S1, R_C2, R_S2``) and six randomization rates
(``Rx_*`` for every component). Its projection on ``(R1, R2) =
(R_C1 + R_S1, R_C2 + R_S2)`` is traced by LP support functions; the
Fourier-Motzkin projection in :mod:`icesec.fm` is an independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import lp
from .channel import COMPONENTS, Component
from .mutual_info import DECODE_SETS, MutualInfoTable, nonempty_subsets

C1, S1, O1, C2, S2, O2 = COMPONENTS

VARIABLES = ("R_C1", "R_S1", "R_C2", "R_S2",
             "Rx_C1", "Rx_S1", "Rx_O1", "Rx_C2", "Rx_S2", "Rx_O2")
_SECRECY = {C1: 0, S1: 1, C2: 2, S2: 3}
_RAND = {C1: 4, S1: 5, O1: 6, C2: 7, S2: 8, O2: 9}
R1_VARS = (0, 1)
R2_VARS = (2, 3)

FEAS_TOL = lp.FEAS_TOL
DOMINANCE_TOL = 1e-12
DEFAULT_WEIGHTS = 65


class InfeasiblePolytope(ValueError):
    """The rate polytope is empty; ``certificate`` names the rows whose
    phase-one multipliers are nonzero."""

    def __init__(self, message: str, residual: float = math.nan,
                 certificate: Sequence[str] = ()):
        super().__init__(message)
        self.residual = residual
        self.certificate = tuple(certificate)


class FMCapExceeded(RuntimeError):
    """Fourier-Motzkin row count exceeded the configured cap."""


def _label(receiver: str, subset: Iterable[Component]) -> str:
    order = {c: i for i, c in enumerate(COMPONENTS)}
    return f"{receiver}:" + ",".join(str(c) for c in sorted(subset, key=order.get))


@dataclass(frozen=True)
class RatePolytope:
    A_ub: np.ndarray
    b_ub: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    labels_ub: tuple[str, ...]
    labels_eq: tuple[str, ...]
    variables: tuple[str, ...] = VARIABLES

    @property
    def n_bounds(self) -> int:
        # every variable is nonnegative
        return len(self.variables)

    @property
    def counts(self) -> tuple[int, int, int]:
        return self.A_ub.shape[0], self.A_eq.shape[0], self.n_bounds

    def with_rows(self, A, b, labels) -> "RatePolytope":
        A = np.asarray(A, dtype=float).reshape(-1, len(self.variables))
        return RatePolytope(np.vstack([self.A_ub, A]), np.concatenate([self.b_ub, b]),
                            self.A_eq, self.b_eq, self.labels_ub + tuple(labels),
                            self.labels_eq, self.variables)

    def residual(self, x) -> float:
        """Largest constraint violation of the point ``x`` (0 when feasible)."""
        x = np.asarray(x, dtype=float)
        v = [0.0, float(np.max(-x, initial=0.0))]
        if self.A_ub.size:
            v.append(float(np.max(self.A_ub @ x - self.b_ub, initial=0.0)))
        if self.A_eq.size:
            v.append(float(np.max(np.abs(self.A_eq @ x - self.b_eq), initial=0.0)))
        return max(v)

    def contains(self, x, tol: float = FEAS_TOL) -> bool:
        return self.residual(x) <= tol

    def point(self, **rates) -> np.ndarray:
        """Assemble a variable vector from keyword rates (missing ones are 0)."""
        x = np.zeros(len(self.variables))
        for k, v in rates.items():
            x[self.variables.index(k)] = v
        return x


def _template():
    rows, keys, labels = [], [], []
    for r in ("1", "2"):
        for s in nonempty_subsets(DECODE_SETS[r]):
            a = np.zeros(len(VARIABLES))
            for comp in s:
                if comp in _SECRECY:
                    a[_SECRECY[comp]] = 1.0
                a[_RAND[comp]] = 1.0
            rows.append(a)
            keys.append((r, s))
            labels.append(_label(r, s))
    full = frozenset(COMPONENTS)
    for s in nonempty_subsets(COMPONENTS):
        if s == full:
            continue
        a = np.zeros(len(VARIABLES))
        for comp in s:
            a[_RAND[comp]] = 1.0
        rows.append(a)
        keys.append(("e", s))
        labels.append(_label("e", s))
    A = np.array(rows)
    A.setflags(write=False)
    a_eq = np.zeros((1, len(VARIABLES)))
    a_eq[0, 4:] = 1.0
    a_eq.setflags(write=False)
    return A, tuple(keys), tuple(labels), a_eq, ("e", full), (_label("e", full) + "(=)",)


_A_UB, _UB_KEYS, _UB_LABELS, _A_EQ, _EQ_KEY, _EQ_LABELS = _template()


_RX_FULL = np.array([k[0] != "e" and len(k[1]) == 4 for k in _UB_KEYS])


def build_constraints(table: MutualInfoTable, receiver_full_set: bool = True) -> RatePolytope:
    """Linear system of the region for one input distribution.

    Receiver constraints run over every nonempty subset of the decode set;
    the full decode set is included unless ``receiver_full_set`` is False.
    Eavesdropper constraints cover every nonempty proper subset, with
    equality on the full set. Nonnegativity of all ten variables is implicit.
    """
    missing = table.missing()
    if missing:
        r, s = missing[0]
        raise KeyError(f"table is missing {len(missing)} entries, e.g. {_label(r, s)}")
    e = table.entries
    b = np.array([e[k] for k in _UB_KEYS])
    if receiver_full_set:
        return RatePolytope(_A_UB, b, _A_EQ, np.array([e[_EQ_KEY]]), _UB_LABELS, _EQ_LABELS)
    keep = ~_RX_FULL
    labels = tuple(lab for lab, k in zip(_UB_LABELS, keep) if k)
    return RatePolytope(_A_UB[keep], b[keep], _A_EQ, np.array([e[_EQ_KEY]]), labels, _EQ_LABELS)


# ---------------------------------------------------------------------------
# LP layer
# ---------------------------------------------------------------------------

def _reduce(poly: RatePolytope):
    """Fix variables forced to zero by a nonnegative row with zero rhs and
    drop rows that become empty or duplicate.

    Returns ``(keep, reduced)`` where ``keep`` indexes the surviving
    variables and ``reduced`` is ``(A_ub, b_ub, A_eq, b_eq, labels)``, or
    ``(keep, violated_labels)`` when an emptied row is violated.
    """
    A, b = poly.A_ub, poly.b_ub
    zero_rows = np.all(A >= 0, axis=1) & (b <= 1e-14)
    fixed = np.any(A[zero_rows] > 0, axis=0) if zero_rows.any() else np.zeros(A.shape[1], bool)
    keep = np.nonzero(~fixed)[0]
    Ar, Ae = A[:, keep], poly.A_eq[:, keep]
    nonempty = np.any(Ar != 0, axis=1)
    eq_nonempty = np.any(Ae != 0, axis=1)
    bad = [poly.labels_ub[i] for i in np.nonzero(~nonempty & (b < -FEAS_TOL))[0]]
    bad += [poly.labels_eq[i] for i in np.nonzero(~eq_nonempty & (np.abs(poly.b_eq) > FEAS_TOL))[0]]
    if bad:
        return keep, bad
    idx = np.nonzero(nonempty)[0]
    # duplicates: keep the tightest rhs
    best: dict[bytes, int] = {}
    for i in idx:
        key = Ar[i].tobytes()
        j = best.get(key)
        if j is None or b[i] < b[j]:
            best[key] = i
    rows = sorted(best.values())
    eq_rows = np.nonzero(eq_nonempty)[0]
    labels = [poly.labels_ub[i] for i in rows] + [poly.labels_eq[i] for i in eq_rows]
    return keep, (Ar[rows], b[rows], Ae[eq_rows], poly.b_eq[eq_rows], labels)


def _lp_max(poly: RatePolytope, c: np.ndarray) -> np.ndarray:
    keep, red = _reduce(poly)
    if isinstance(red, list):
        raise InfeasiblePolytope("a constraint with no free variables is violated",
                                 certificate=red)
    Ar, br, Ae, be, labels = red
    if keep.size == 0:
        # every variable is pinned at zero and no emptied row is violated
        return np.zeros(len(poly.variables))
    try:
        res = lp.maximize(c[keep], Ar, br, Ae, be)
    except lp.LPInfeasible as exc:
        cert = [lab for lab, y in zip(labels, exc.multipliers) if abs(y) > 1e-9]
        raise InfeasiblePolytope(
            f"rate polytope is empty (phase-one residual {exc.residual:.3e}); "
            f"conflicting rows: {', '.join(cert)}",
            residual=exc.residual, certificate=cert) from None
    except lp.LPUnbounded as exc:
        raise RuntimeError(f"rate polytope unexpectedly unbounded: {exc}") from None
    x = np.zeros(len(poly.variables))
    x[keep] = res.x
    return x


@dataclass(frozen=True)
class SupportResult:
    value: float
    r1: float
    r2: float
    x: np.ndarray


def _rate_pair(x) -> tuple[float, float]:
    r1 = max(float(x[0] + x[1]), 0.0)
    r2 = max(float(x[2] + x[3]), 0.0)
    return r1, r2


def solve_support(poly: RatePolytope, weight: Sequence[float]) -> SupportResult:
    """Maximize ``w1 R1 + w2 R2`` over the polytope."""
    w1, w2 = (float(v) for v in weight)
    if w1 < 0 or w2 < 0 or not (math.isfinite(w1) and math.isfinite(w2)):
        raise ValueError("weights must be finite and nonnegative")
    c = np.zeros(len(poly.variables))
    c[list(R1_VARS)] = w1
    c[list(R2_VARS)] = w2
    x = _lp_max(poly, c)
    r1, r2 = _rate_pair(x)
    return SupportResult(value=float(c @ x), r1=r1, r2=r2, x=x)


def is_achievable(poly: RatePolytope, r1: float, r2: float) -> bool:
    """Whether ``(r1, r2)`` lies in the projection of the polytope."""
    if r1 < 0 or r2 < 0:
        raise ValueError("rates must be nonnegative")
    rows = np.zeros((2, len(poly.variables)))
    rows[0, list(R1_VARS)] = -1.0
    rows[1, list(R2_VARS)] = -1.0
    ext = poly.with_rows(rows, [-r1, -r2], ["R1>=", "R2>="])
    try:
        _lp_max(ext, np.zeros(len(poly.variables)))
    except InfeasiblePolytope:
        return False
    return True


# ---------------------------------------------------------------------------
# frontiers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FrontierPoint:
    r1: float
    r2: float
    weight: tuple[float, float] = (math.nan, math.nan)
    params_id: str = ""


@dataclass(frozen=True)
class RegionFrontier:
    """Pareto-optimal ``(R1, R2)`` samples, sorted by increasing ``R1``."""

    points: tuple[FrontierPoint, ...] = ()
    meta: dict = field(default_factory=dict, compare=False)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def pairs(self) -> list[tuple[float, float]]:
        return [(p.r1, p.r2) for p in self.points]

    @property
    def r1_max(self) -> float:
        return max((p.r1 for p in self.points), default=0.0)

    @property
    def r2_max(self) -> float:
        return max((p.r2 for p in self.points), default=0.0)

    def support(self, weight: Sequence[float]) -> float:
        w1, w2 = weight
        return max((w1 * p.r1 + w2 * p.r2 for p in self.points), default=0.0)

    @property
    def max_sum(self) -> float:
        return self.support((1.0, 1.0))

    def contains(self, r1: float, r2: float, tol: float = 1e-9) -> bool:
        """Membership in the downward-closed convex hull of the points."""
        if r1 < -tol or r2 < -tol:
            return False
        hull = convex_hull_union([self]) if self.points else self
        pts = [(0.0, hull.r2_max)] + hull.pairs + [(hull.r1_max, 0.0)]
        if r1 > hull.r1_max + tol or r2 > hull.r2_max + tol:
            return False
        for (xa, ya), (xb, yb) in zip(pts, pts[1:]):
            # outward normal of the chain edge points up-right
            nx, ny = yb - ya, xa - xb
            nx, ny = -nx, -ny
            if nx * (r1 - xa) + ny * (r2 - ya) > tol * max(1.0, math.hypot(nx, ny)):
                return False
        return True


def _pareto(points: Sequence[FrontierPoint], tol: float = DOMINANCE_TOL) -> tuple[FrontierPoint, ...]:
    pts = sorted(points, key=lambda p: (-p.r1, -p.r2))
    kept: list[FrontierPoint] = []
    best_r2 = -math.inf
    for p in pts:
        # sorted by decreasing r1: p is dominated iff some kept point has r2 >= p.r2
        if p.r2 <= best_r2 + tol:
            continue
        if kept and abs(kept[-1].r1 - p.r1) <= tol and p.r2 > kept[-1].r2:
            kept[-1] = p
        else:
            kept.append(p)
        best_r2 = max(best_r2, p.r2)
    return tuple(reversed(kept))


def weight_angles(weight_count: int) -> list[tuple[float, float]]:
    if weight_count < 2:
        raise ValueError("weight_count must be >= 2")
    out = []
    for i in range(weight_count):
        if i == 0:
            out.append((1.0, 0.0))
        elif i == weight_count - 1:
            out.append((0.0, 1.0))
        else:
            th = 0.5 * math.pi * i / (weight_count - 1)
            out.append((math.cos(th), math.sin(th)))
    return out


def frontier(poly: RatePolytope, weight_count: int = DEFAULT_WEIGHTS,
             params_id: str = "") -> RegionFrontier:
    """Support-function sweep over ``weight_count`` angles in [0, pi/2].

    Angles between two sampled angles that share a maximizer are skipped: a
    vertex optimal at both ends of an angular interval is optimal throughout.
    """
    weights = weight_angles(weight_count)
    sols: dict[int, SupportResult] = {}

    def get(i):
        if i not in sols:
            sols[i] = solve_support(poly, weights[i])
        return sols[i]

    stack = [(0, weight_count - 1)]
    while stack:
        lo, hi = stack.pop()
        a, b = get(lo), get(hi)
        if hi - lo <= 1:
            continue
        if abs(a.r1 - b.r1) <= 1e-12 and abs(a.r2 - b.r2) <= 1e-12:
            continue
        mid = (lo + hi) // 2
        stack.append((lo, mid))
        stack.append((mid, hi))
    pts = [FrontierPoint(s.r1, s.r2, weights[i], params_id) for i, s in sorted(sols.items())]
    return RegionFrontier(_pareto(pts), meta={"lp_solves": len(sols)})


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull_union(frontiers: Sequence[RegionFrontier]) -> RegionFrontier:
    """Pareto boundary of the convex hull of all points and their axis
    projections (the closure of the union under time sharing)."""
    frontiers = list(frontiers)
    if not frontiers:
        raise ValueError("convex_hull_union needs at least one frontier")
    pts = [p for f in frontiers for p in f.points]
    if not pts:
        return RegionFrontier((FrontierPoint(0.0, 0.0),))
    # best representative per distinct coordinate
    by_xy: dict[tuple[float, float], FrontierPoint] = {}
    for p in pts:
        by_xy.setdefault((p.r1, p.r2), p)
    cand = list(by_xy.values())
    cand += [FrontierPoint(0.0, max(p.r2 for p in cand), params_id="axis"),
             FrontierPoint(max(p.r1 for p in cand), 0.0, params_id="axis")]
    # upper hull, left to right; keep the highest point per abscissa
    cand.sort(key=lambda p: (p.r1, -p.r2))
    col: list[FrontierPoint] = []
    for p in cand:
        if col and col[-1].r1 == p.r1:
            continue
        col.append(p)
    hull: list[FrontierPoint] = []
    for p in col:
        while len(hull) >= 2 and _cross((hull[-2].r1, hull[-2].r2), (hull[-1].r1, hull[-1].r2),
                                        (p.r1, p.r2)) >= -1e-15:
            hull.pop()
        hull.append(p)
    # axis helpers only survive when no real point shares their coordinates
    real = {(p.r1, p.r2) for p in pts}
    hull = [p for p in hull if p.params_id != "axis" or (p.r1, p.r2) not in real]
    return RegionFrontier(_pareto(hull))
