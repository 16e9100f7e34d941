"""Closed-form Gaussian schemes and grid sweeps over power-split families."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np

from .channel import BUDGET_TOL, GaussianChannel, PowerState, TimeSharingSchedule
from .mutual_info import gamma, gaussian_mi_table
from .region import (FrontierPoint, InfeasiblePolytope, RegionFrontier,
                     build_constraints, convex_hull_union, frontier)

FAMILIES = ("G2", "G2-ncp", "G2-b-or-cp", "G3-mac", "G4-relay", "full-G")
GRID_SPAN = 16.0   # smallest nonzero level is P / GRID_SPAN
CHAIN_TOL = 1e-9


class BudgetError(ValueError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    """Grid description for a family sweep.

    ``levels`` counts the power levels per free axis including zero; the
    nonzero ones are geometric between ``P/16`` and ``P``.
    """

    family: str = "G2"
    levels: int = 9
    alpha_steps: int = 21
    weight_count: int = 65
    seed: int = 0
    full_units: int = 2

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        for name in ("levels", "alpha_steps", "weight_count", "full_units"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 2:
                raise ValueError(f"{name} must be an integer >= 2, got {v!r}")


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------

def level_fractions(levels: int) -> list[float]:
    """``[0, 1/16, ..., 1]`` with ``levels - 1`` geometric nonzero entries."""
    if levels < 2:
        raise ValueError("levels must be >= 2")
    n = levels - 1
    if n == 1:
        return [0.0, 1.0]
    return [0.0] + [GRID_SPAN ** (-(n - 1 - k) / (n - 1)) for k in range(n)]


def pair_fractions(levels: int) -> list[tuple[float, float]]:
    """Budget fractions ``(a, b)`` with ``a + b <= 1`` from the level grid,
    plus the corner allocations ``(a, 1 - a)`` and ``(1 - b, b)``."""
    lv = level_fractions(levels)
    out = {(a, b) for a in lv for b in lv if a + b <= 1.0 + 1e-12}
    for a in lv:
        out.add((a, 1.0 - a))
        out.add((1.0 - a, a))
    return sorted(out)


def alpha_grid(steps: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, steps)


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _state_id(state: PowerState) -> str:
    return ",".join(f"{k}={_fmt(v)}" for k, v in state.as_dict().items() if v != 0.0)


def schedule_id(family: str, schedule: TimeSharingSchedule) -> str:
    parts = [f"q{i}:p={_fmt(p)}:{_state_id(s)}" for i, (p, s) in enumerate(schedule.states)]
    return family + "|" + "|".join(parts)


def _ctdma_states(channel: GaussianChannel, alpha: float, f1: tuple[float, float],
                  f2: tuple[float, float]):
    """Slot powers from budget fractions: user k spends ``fs_k`` of its energy
    sending in its own slot and ``fj_k`` jamming in the other slot."""
    (fs1, fj1), (fs2, fj2) = f1, f2
    a, b = alpha, 1.0 - alpha
    ps1 = fs1 * channel.P1 / a if a > 0 else 0.0
    pj2 = fj2 * channel.P2 / a if a > 0 else 0.0
    ps2 = fs2 * channel.P2 / b if b > 0 else 0.0
    pj1 = fj1 * channel.P1 / b if b > 0 else 0.0
    return ps1, pj2, ps2, pj1


def family_schedules(channel: GaussianChannel, config: SweepConfig
                     ) -> Iterator[tuple[str, TimeSharingSchedule]]:
    """Deterministic enumeration of ``(params_id, schedule)`` for a family."""
    fam = config.family
    P1, P2 = channel.P1, channel.P2
    lv = level_fractions(config.levels)
    pairs = pair_fractions(config.levels)

    if fam in ("G2", "G3-mac", "G2-ncp", "G2-b-or-cp"):
        if fam == "G2-ncp":
            per_user = [(a, 0.0) for a in lv]
        elif fam == "G2-b-or-cp":
            per_user = sorted({(a, 0.0) for a in lv} | {(0.0, b) for b in lv})
        else:
            per_user = pairs
        for (c1, j1), (c2, j2) in itertools.product(per_user, per_user):
            st = PowerState(Pc1=c1 * P1, Pj1=j1 * P1, Pc2=c2 * P2, Pj2=j2 * P2)
            sch = TimeSharingSchedule.single(st)
            yield schedule_id(fam, sch), sch
    elif fam == "G4-relay":
        for (s1, j1), (o2, j2) in itertools.product(pairs, pairs):
            st = PowerState(Ps1=s1 * P1, Pj1=j1 * P1, Po2=o2 * P2, Pj2=j2 * P2)
            sch = TimeSharingSchedule.single(st)
            yield schedule_id(fam, sch), sch
    elif fam == "full-G":
        u = config.full_units
        splits = [c for c in itertools.product(range(u + 1), repeat=4) if sum(c) <= u]
        seen = set()
        for n1, n2 in itertools.product(splits, splits):
            st = PowerState(Pc1=n1[0] * P1 / u, Ps1=n1[1] * P1 / u, Po1=n1[2] * P1 / u,
                            Pj1=n1[3] * P1 / u, Pc2=n2[0] * P2 / u, Ps2=n2[1] * P2 / u,
                            Po2=n2[2] * P2 / u, Pj2=n2[3] * P2 / u)
            sch = TimeSharingSchedule.single(st)
            seen.add(schedule_id(fam, sch))
            yield schedule_id(fam, sch), sch
        # schedules with the cooperative TDMA structure; at alpha = 0 or 1
        # one slot vanishes and may repeat a schedule already listed
        for alpha in alpha_grid(config.alpha_steps):
            for f1, f2 in itertools.product(pairs, pairs):
                ps1, pj2, ps2, pj1 = _ctdma_states(channel, alpha, f1, f2)
                slots = ((alpha, PowerState(Ps1=ps1, Pj2=pj2)),
                         (1.0 - alpha, PowerState(Ps2=ps2, Pj1=pj1)))
                sch = TimeSharingSchedule(tuple(sl for sl in slots if sl[0] > 0))
                pid = schedule_id(fam, sch)
                if pid not in seen:
                    seen.add(pid)
                    yield pid, sch


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def _check_budget(value: float, budget: float, what: str):
    if value < 0:
        raise BudgetError(f"{what} is negative ({value})")
    if value > budget * (1 + BUDGET_TOL) + BUDGET_TOL:
        raise BudgetError(f"{what} = {value:.6g} exceeds budget {budget:.6g}")


def ctdma_point(channel: GaussianChannel, alpha: float, Ps1_slot1: float, Pj2_slot1: float,
                Ps2_slot2: float, Pj1_slot2: float, check_budget: bool = True
                ) -> tuple[float, float]:
    """Rates of cooperative TDMA: user 1 sends in slot 1 while user 2 jams,
    roles swap in slot 2 (fraction ``1 - alpha``).

    ``check_budget=False`` evaluates the closed form at allocations that
    overrun the average-power budgets (negative powers are still refused).
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    a, b = alpha, 1.0 - alpha
    if check_budget:
        _check_budget(a * Ps1_slot1 + b * Pj1_slot2, channel.P1, "user 1 average power")
        _check_budget(a * Pj2_slot1 + b * Ps2_slot2, channel.P2, "user 2 average power")
    elif min(Ps1_slot1, Pj2_slot1, Ps2_slot2, Pj1_slot2) < 0:
        raise BudgetError("slot powers must be nonnegative")
    c = channel
    r1 = 0.5 * a * (math.log2(1 + Ps1_slot1 / (1 + c.c21 * Pj2_slot1))
                    - math.log2(1 + c.c1e * Ps1_slot1 / (1 + c.c2e * Pj2_slot1)))
    r2 = 0.5 * b * (math.log2(1 + Ps2_slot2 / (1 + c.c12 * Pj1_slot2))
                    - math.log2(1 + c.c2e * Ps2_slot2 / (1 + c.c1e * Pj1_slot2)))
    return max(r1, 0.0), max(r2, 0.0)


def _pareto_hull_indices(r1: np.ndarray, r2: np.ndarray) -> np.ndarray:
    """Indices of the upper-right convex hull vertices of a point cloud."""
    order = np.lexsort((-r2, -r1))
    best = np.maximum.accumulate(r2[order])
    prev = np.concatenate([[-np.inf], best[:-1]])
    cand = order[r2[order] > prev]
    cand = cand[::-1]  # increasing r1
    hull: list[int] = []
    for i in cand:
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cr = (r1[a] - r1[o]) * (r2[i] - r2[o]) - (r2[a] - r2[o]) * (r1[i] - r1[o])
            if cr >= 0:
                hull.pop()
            else:
                break
        hull.append(int(i))
    return np.array(hull, dtype=int)


def ctdma_region(channel: GaussianChannel, grid: SweepConfig | None = None,
                 ncp: bool = False) -> RegionFrontier:
    """Hull of cooperative TDMA rate pairs over the alpha and budget grids.

    With ``ncp=True`` nobody jams, which reduces to plain TDMA wiretap coding.
    """
    grid = grid or SweepConfig()
    pairs = [(a, 0.0) for a in level_fractions(grid.levels)] if ncp else pair_fractions(grid.levels)
    fr = np.array(pairs)
    c = channel
    r1_all, r2_all, ids = [], [], []
    for alpha in alpha_grid(grid.alpha_steps):
        a, b = alpha, 1.0 - alpha
        fs, fj = fr[:, 0], fr[:, 1]
        # R1 depends on user 1's send share and user 2's jam share only
        with np.errstate(divide="ignore", invalid="ignore"):
            ps1 = np.where(a > 0, fs * c.P1 / a, 0.0)
            pj2 = np.where(a > 0, fj * c.P2 / a, 0.0)
            ps2 = np.where(b > 0, fs * c.P2 / b, 0.0)
            pj1 = np.where(b > 0, fj * c.P1 / b, 0.0)
        # index grid: i over user-1 pairs, k over user-2 pairs
        s1, j2 = ps1[:, None], pj2[None, :]
        r1 = 0.5 * a * (np.log2(1 + s1 / (1 + c.c21 * j2)) - np.log2(1 + c.c1e * s1 / (1 + c.c2e * j2)))
        s2, j1 = ps2[None, :], pj1[:, None]
        r2 = 0.5 * b * (np.log2(1 + s2 / (1 + c.c12 * j1)) - np.log2(1 + c.c2e * s2 / (1 + c.c1e * j1)))
        r1_all.append(np.maximum(r1, 0.0).ravel())
        r2_all.append(np.maximum(r2, 0.0).ravel())
        ids.append((alpha, r1.shape))
    R1 = np.concatenate(r1_all)
    R2 = np.concatenate(r2_all)
    idx = _pareto_hull_indices(R1, R2)
    n_pairs = len(pairs)
    scheme = "ctdma-ncp" if ncp else "ctdma"
    pts = []
    for g in idx:
        ai, rest = divmod(int(g), n_pairs * n_pairs)
        i, k = divmod(rest, n_pairs)
        alpha = float(alpha_grid(grid.alpha_steps)[ai])
        ps1, pj2, ps2, pj1 = _ctdma_states(channel, alpha, pairs[i], pairs[k])
        pid = (f"{scheme}|alpha={_fmt(alpha)}|Ps1={_fmt(ps1)},Pj2={_fmt(pj2)}"
               f"|Ps2={_fmt(ps2)},Pj1={_fmt(pj1)}")
        pts.append(FrontierPoint(float(R1[g]), float(R2[g]), params_id=pid))
    hull = convex_hull_union([RegionFrontier(tuple(pts))])
    return RegionFrontier(hull.points, meta={"scheme": scheme, "candidates": int(R1.size)})


def wiretap_with_jamming_rate(channel: GaussianChannel, user: int, Ps: float,
                              peer_Pj: float) -> float:
    """Single-user wiretap rate while the other user jams with ``peer_Pj``."""
    c = channel
    if user == 1:
        _check_budget(Ps, c.P1, "Ps")
        _check_budget(peer_Pj, c.P2, "peer_Pj")
        r = gamma(Ps / (1 + c.c21 * peer_Pj)) - gamma(c.c1e * Ps / (1 + c.c2e * peer_Pj))
    elif user == 2:
        return wiretap_with_jamming_rate(c.swapped(), 1, Ps, peer_Pj)
    else:
        raise ValueError("user must be 1 or 2")
    return max(r, 0.0)


def gnf_ncp_rate(channel: GaussianChannel) -> float:
    """Gaussian noise forwarding without prefixing: user 2 sends a dummy
    codeword at full power to confuse the eavesdropper."""
    c = channel
    via_rx = gamma(c.c21 * c.P2 / (1 + c.P1))
    a = min(via_rx, gamma(c.c2e * c.P2))
    b = min(via_rx, gamma(c.c2e * c.P2 / (1 + c.c1e * c.P1)))
    # grouped so that cancelling terms give an exact zero
    r = (gamma(c.P1) - gamma(c.c1e * c.P1)) + (a - b)
    return max(r, 0.0)


NF_KEYS = ("I(S1;Y1|O2)", "I(O2;Y1)", "I(O2;Ye|S1)", "I(O2;Ye)", "I(S1;Ye|O2)", "I(S1,O2;Ye)")


def nf_rate_discrete(values: Mapping[str, float]) -> tuple[float, float]:
    """Noise-forwarding rate in its original and simplified forms.

    ``values`` maps each name in :data:`NF_KEYS` to its value in bits.
    """
    missing = [k for k in NF_KEYS if k not in values]
    if missing:
        raise KeyError(f"missing values: {missing}")
    v = {k: float(values[k]) for k in NF_KEYS}
    gap = v["I(S1,O2;Ye)"] - (v["I(O2;Ye)"] + v["I(S1;Ye|O2)"])
    if abs(gap) > CHAIN_TOL:
        raise ValueError(f"values violate the chain rule for I(S1,O2;Ye) by {gap:.3e}")
    m1 = min(v["I(O2;Y1)"], v["I(O2;Ye|S1)"])
    m2 = min(v["I(O2;Y1)"], v["I(O2;Ye)"])
    original = v["I(S1;Y1|O2)"] + m1 - m2 - v["I(S1;Ye|O2)"]
    simplified = v["I(S1;Y1|O2)"] + m1 - v["I(S1,O2;Ye)"]
    return max(original, 0.0), max(simplified, 0.0)


def nf_values_from_table(table) -> dict[str, float]:
    """Extract the noise-forwarding quantities from a table in which only S1
    and O2 carry power (other components constant, ``|Q| = 1``)."""
    from .channel import Component as K
    s1, o2 = K.S1, K.O2
    i_s1o2_y1 = table.value("1", {s1, o2})
    i_s1_y1_o2 = table.value("1", {s1})
    i_s1o2_ye = table.value("e", {s1, o2})
    i_s1_ye_o2 = table.value("e", {s1})
    return {
        "I(S1;Y1|O2)": i_s1_y1_o2,
        "I(O2;Y1)": i_s1o2_y1 - i_s1_y1_o2,
        "I(O2;Ye|S1)": table.value("e", {o2}),
        "I(O2;Ye)": i_s1o2_ye - i_s1_ye_o2,
        "I(S1;Ye|O2)": i_s1_ye_o2,
        "I(S1,O2;Ye)": i_s1o2_ye,
    }


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScheduleResult:
    params_id: str
    schedule: TimeSharingSchedule
    frontier: RegionFrontier | None
    infeasible: bool = False


def _evaluate(args) -> list[ScheduleResult]:
    channel, mac, weight_count, batch = args
    out = []
    for pid, sch in batch:
        poly = build_constraints(gaussian_mi_table(channel, sch, mac=mac))
        try:
            fr = frontier(poly, weight_count, params_id=pid)
        except InfeasiblePolytope:
            out.append(ScheduleResult(pid, sch, None, True))
            continue
        out.append(ScheduleResult(pid, sch, fr))
    return out


def evaluate_family(channel: GaussianChannel, config: SweepConfig, jobs: int = 1,
                    batch_size: int = 256) -> list[ScheduleResult]:
    """Per-schedule frontiers, in enumeration order regardless of ``jobs``."""
    items = list(family_schedules(channel, config))
    mac = config.family == "G3-mac"
    batches = [(channel, mac, config.weight_count, items[i:i + batch_size])
               for i in range(0, len(items), batch_size)]
    if jobs <= 1 or len(batches) <= 1:
        chunks = [_evaluate(b) for b in batches]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_evaluate, batches))
    return [r for c in chunks for r in c]


def sweep_region(channel: GaussianChannel, config: SweepConfig | None = None,
                 jobs: int = 1) -> RegionFrontier:
    """Hull of the per-schedule frontiers over the family grid.

    Schedules whose polytope is empty contribute nothing and are counted in
    ``meta["infeasible"]``.
    """
    config = config or SweepConfig()
    results = evaluate_family(channel, config, jobs)
    fronts = [r.frontier for r in results if r.frontier is not None]
    if fronts:
        hull = convex_hull_union(fronts)
    else:
        hull = RegionFrontier((FrontierPoint(0.0, 0.0, params_id="empty"),))
    meta = {"family": config.family, "schedules": len(results),
            "infeasible": sum(r.infeasible for r in results),
            "lp_solves": sum(r.frontier.meta.get("lp_solves", 0) for r in results if r.frontier)}
    return RegionFrontier(hull.points, meta=meta)
