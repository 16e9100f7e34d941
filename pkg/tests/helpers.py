"""Random Gaussian instances with nonempty rate polytopes."""

from __future__ import annotations

import numpy as np

from icesec import (GaussianChannel, InfeasiblePolytope, PowerState, TimeSharingSchedule,
                    build_constraints, gaussian_mi_table, solve_support)

FIG3 = GaussianChannel(c12=1.9, c21=1.9, c1e=0.5, c2e=0.5, P1=10, P2=10)
FIG4 = GaussianChannel(c12=0.6, c21=0.6, c1e=1.1, c2e=1.1, P1=10, P2=10)
FIG5 = GaussianChannel(c12=1.9, c21=1.0, c1e=0.5, c2e=1.6, P1=10, P2=10)
FIGURES = {"fig3": FIG3, "fig4": FIG4, "fig5": FIG5}

FIELDS = ("Pc1", "Ps1", "Po1", "Pj1", "Pc2", "Ps2", "Po2", "Pj2")


def random_schedule(rng: np.random.Generator, channel: GaussianChannel,
                    q_size: int | None = None, active: float = 0.6) -> TimeSharingSchedule:
    """Random split of each budget over a random subset of the eight slots."""
    q_size = q_size or int(rng.integers(1, 3))
    pq = rng.dirichlet(np.ones(q_size))
    states = []
    for p in pq:
        on = rng.random(8) < active
        w = rng.dirichlet(np.ones(4), size=2).ravel() * on
        powers = {}
        for i, name in enumerate(FIELDS):
            budget = channel.P1 if i < 4 else channel.P2
            powers[name] = float(w[i] * budget * rng.uniform(0.3, 1.0))
        states.append((float(p), PowerState(**powers)))
    return TimeSharingSchedule(tuple(states))


def feasible(poly) -> bool:
    try:
        solve_support(poly, (1.0, 1.0))
    except InfeasiblePolytope:
        return False
    return True


def feasible_polytopes(rng: np.random.Generator, channel: GaussianChannel, count: int,
                       active: float = 0.6, max_draws: int = 20000):
    """``count`` (schedule, polytope) pairs with nonempty polytopes, plus the
    polytopes rejected along the way."""
    found, rejected = [], []
    for _ in range(max_draws):
        sch = random_schedule(rng, channel, active=active)
        poly = build_constraints(gaussian_mi_table(channel, sch))
        if feasible(poly):
            found.append((sch, poly))
            if len(found) == count:
                return found, rejected
        else:
            rejected.append(poly)
    raise RuntimeError(f"only {len(found)} feasible schedules in {max_draws} draws")
