"""Conditional mutual informations feeding the rate region.

Every rate constraint of the cooperative binning / channel prefixing region
is of the form ``I(S; Y_r | D_r \\ S, Q)`` where ``D_r`` is the set of
components receiver ``r`` decodes:

* receiver 1 decodes ``{C1, S1, C2, O2}``,
* receiver 2 decodes ``{C2, S2, C1, O1}``,
* the eavesdropper is charged with all six components.

Gaussian tables are closed form; discrete tables come from exact summation
over the joint pmf. :func:`mc_mi_oracle` is an independent sample-based check
of the Gaussian closed form.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .channel import (
    COMPONENTS,
    Component,
    DiscreteChannel,
    FactoredInput,
    GaussianChannel,
    TimeSharingSchedule,
    validate_schedule,
)

C1, S1, O1, C2, S2, O2 = COMPONENTS

DECODE_SETS: dict[str, tuple[Component, ...]] = {
    "1": (C1, S1, C2, O2),
    "2": (C2, S2, C1, O1),
    "e": COMPONENTS,
}
RECEIVERS = ("1", "2", "e")

NEG_CLAMP = 1e-12
DEFAULT_MAX_JOINT = 1 << 22


class MutualInfoError(ValueError):
    pass


def gamma(x: float) -> float:
    """Gaussian capacity function ``0.5 * log2(1 + x)`` in bits."""
    if x < 0 or math.isnan(x):
        raise ValueError(f"gamma() needs a nonnegative SNR, got {x}")
    return 0.5 * math.log2(1.0 + x)


def nonempty_subsets(items: Sequence) -> list[frozenset]:
    return [frozenset(c) for r in range(1, len(items) + 1)
            for c in itertools.combinations(items, r)]


def _clamp(v: float, what: str = "mutual information") -> float:
    if v < 0:
        if v < -NEG_CLAMP:
            raise MutualInfoError(f"{what} evaluated to {v:.3e} < 0")
        return 0.0
    return v


@dataclass(frozen=True)
class MutualInfoTable:
    """``I(S; Y_r | D_r \\ S, Q)`` for every receiver ``r`` and every nonempty
    ``S`` within its decode set (15 + 15 + 63 entries), in bits."""

    entries: Mapping[tuple[str, frozenset], float]

    def __post_init__(self):
        clean = {}
        for (r, s), v in self.entries.items():
            s = frozenset(Component(c) for c in s)
            clean[(str(r), s)] = float(v)
        object.__setattr__(self, "entries", clean)

    def value(self, receiver: str, subset: Iterable) -> float:
        key = (str(receiver), frozenset(Component(c) for c in subset))
        try:
            return self.entries[key]
        except KeyError:
            raise KeyError(f"no table entry for receiver {receiver}, "
                           f"subset {sorted(map(str, key[1]))}") from None

    def __getitem__(self, key) -> float:
        return self.value(*key)

    @classmethod
    def keys_required(cls) -> list[tuple[str, frozenset]]:
        return [(r, s) for r in RECEIVERS for s in nonempty_subsets(DECODE_SETS[r])]

    def missing(self) -> list[tuple[str, frozenset]]:
        return [k for k in self.keys_required() if k not in self.entries]

    def swapped(self) -> "MutualInfoTable":
        """Relabel users 1 <-> 2 (receiver 1 <-> receiver 2)."""
        swap_r = {"1": "2", "2": "1", "e": "e"}
        return MutualInfoTable({(swap_r[r], frozenset(c.swapped() for c in s)): v
                                for (r, s), v in self.entries.items()})

    @classmethod
    def zeros(cls) -> "MutualInfoTable":
        return cls({k: 0.0 for k in cls.keys_required()})

    @classmethod
    def from_function(cls, fn) -> "MutualInfoTable":
        """Fill every entry with ``fn(receiver, subset)``."""
        return cls({(r, s): fn(r, s) for r, s in cls.keys_required()})

    def to_dict(self) -> dict[str, float]:
        order = {c: i for i, c in enumerate(COMPONENTS)}
        out = {}
        for (r, s), v in self.entries.items():
            name = ",".join(str(c) for c in sorted(s, key=order.get))
            out[f"{r}:{name}"] = v
        return out


# ---------------------------------------------------------------------------
# Gaussian closed form
# ---------------------------------------------------------------------------

def _gaussian_state_terms(channel: GaussianChannel, state):
    """Received component powers and effective noise per receiver."""
    c12, c21, c1e, c2e = channel.c12, channel.c21, channel.c1e, channel.c2e
    st = state
    rx = {
        "1": {C1: st.Pc1, S1: st.Ps1, C2: c21 * st.Pc2, O2: c21 * st.Po2},
        "2": {C2: st.Pc2, S2: st.Ps2, C1: c12 * st.Pc1, O1: c12 * st.Po1},
        "e": {C1: c1e * st.Pc1, S1: c1e * st.Ps1, O1: c1e * st.Po1,
              C2: c2e * st.Pc2, S2: c2e * st.Ps2, O2: c2e * st.Po2},
    }
    # undecoded components act as Gaussian noise at full power
    noise = {
        "1": 1.0 + st.Po1 + st.Pj1 + c21 * (st.Ps2 + st.Pj2),
        "2": 1.0 + st.Po2 + st.Pj2 + c12 * (st.Ps1 + st.Pj1),
        "e": 1.0 + c1e * st.Pj1 + c2e * st.Pj2,
    }
    return rx, noise


def gaussian_mi_table(channel: GaussianChannel, schedule: TimeSharingSchedule,
                      mac: bool = False) -> MutualInfoTable:
    """Closed-form table for jointly Gaussian superposition inputs.

    With ``mac=True`` receiver 2 is replaced by a copy of receiver 1 (the
    MAC-E embedding); only meaningful when the S and O components are idle.
    """
    report = validate_schedule(schedule, channel)
    if not report.ok:
        raise MutualInfoError("invalid schedule: " + "; ".join(v.message for v in report.violations))
    entries = dict.fromkeys(MutualInfoTable.keys_required(), 0.0)
    for p, state in schedule.states:
        if p == 0.0:
            continue
        rx, noise = _gaussian_state_terms(channel, state)
        if mac:
            rx["2"] = {C2: rx["1"][C2], C1: rx["1"][C1], S2: 0.0, O1: 0.0}
            noise["2"] = noise["1"]
        for r in RECEIVERS:
            pw, n = rx[r], noise[r]
            for s in nonempty_subsets(DECODE_SETS[r]):
                entries[(r, s)] += p * gamma(sum(pw[k] for k in s) / n)
    return MutualInfoTable(entries)


# ---------------------------------------------------------------------------
# discrete pmfs
# ---------------------------------------------------------------------------

def _as_axes(axes) -> tuple[int, ...]:
    if isinstance(axes, (int, np.integer)):
        return (int(axes),)
    return tuple(int(a) for a in axes)


def discrete_mi(joint: np.ndarray, targets, observed, given=(),
                norm_tol: float = 1e-9) -> float:
    """``I(targets; observed | given)`` in bits by exact summation.

    ``joint`` is a pmf array; ``targets``, ``observed`` and ``given`` are
    disjoint collections of its axes.
    """
    joint = np.asarray(joint, dtype=float)
    a, b, c = _as_axes(targets), _as_axes(observed), _as_axes(given)
    sa, sb, sc = set(a), set(b), set(c)
    if (sa & sb) or (sa & sc) or (sb & sc):
        raise MutualInfoError("targets, observed and given must be disjoint")
    if not a or not b:
        raise MutualInfoError("targets and observed must be nonempty")
    if any(ax < 0 or ax >= joint.ndim for ax in sa | sb | sc):
        raise MutualInfoError(f"axis out of range for a {joint.ndim}-axis joint")
    total = joint.sum()
    if abs(total - 1.0) > norm_tol or np.any(joint < 0):
        raise MutualInfoError(f"joint pmf is not normalized (sums to {total!r})")
    other = tuple(ax for ax in range(joint.ndim) if ax not in sa | sb | sc)
    pabc = joint.sum(axis=other, keepdims=True) if other else joint
    pac = pabc.sum(axis=tuple(sorted(sb)), keepdims=True)
    pbc = pabc.sum(axis=tuple(sorted(sa)), keepdims=True)
    pc = pac.sum(axis=tuple(sorted(sa)), keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (pabc * pc) / (pac * pbc)
        terms = np.where(pabc > 0, pabc * np.log2(np.where(pabc > 0, ratio, 1.0)), 0.0)
    return _clamp(float(terms.sum()))


# axis layout of the composed joint: q, c1, s1, o1, c2, s2, o2, then the output
_AXIS = {"Q": 0, **{c: i + 1 for i, c in enumerate(COMPONENTS)}}


def compose_joint(channel: DiscreteChannel, inp: FactoredInput,
                  max_joint: int = DEFAULT_MAX_JOINT) -> dict[str, np.ndarray]:
    """Per-receiver joints ``p(q, c1, s1, o1, c2, s2, o2, y_r)``."""
    x1n, x2n = channel.x_sizes
    if inp.prefix1.shape[-1] != x1n or inp.prefix2.shape[-1] != x2n:
        raise MutualInfoError("prefix kernels do not match the channel input alphabets")
    sizes = [inp.q_size] + [inp.size(c) for c in COMPONENTS]
    n_in = int(np.prod(sizes)) * x1n * x2n
    ymax = max(channel.shape[2:])
    if n_in > max_joint or int(np.prod(sizes)) * ymax > max_joint:
        raise MutualInfoError(
            f"joint over (q, components, x1, x2) has {n_in} cells; cap is {max_joint}")
    m = inp.marginals
    # p(q, c1, s1, o1, c2, s2, o2)
    base = np.einsum("q,qa,qb,qc,qd,qe,qf->qabcdef", inp.pq, m[C1], m[S1], m[O1],
                     m[C2], m[S2], m[O2])
    # p(q, comps, x1, x2)
    with_x = np.einsum("qabcdef,abcx,defz->qabcdefxz", base, inp.prefix1, inp.prefix2)
    out = {}
    for r in RECEIVERS:
        out[r] = np.einsum("qabcdefxz,xzy->qabcdefy", with_x, channel.marginal(r))
    return out


def discrete_mi_table(channel: DiscreteChannel, inp: FactoredInput,
                      max_joint: int = DEFAULT_MAX_JOINT) -> MutualInfoTable:
    joints = compose_joint(channel, inp, max_joint)
    entries = {}
    for r in RECEIVERS:
        decode = DECODE_SETS[r]
        keep = [0] + [_AXIS[c] for c in decode] + [7]
        drop = tuple(ax for ax in range(8) if ax not in keep)
        red = joints[r].sum(axis=drop)
        # summing keeps the surviving axes in their original order
        kept = sorted(keep)
        pos = {c: kept.index(_AXIS[c]) for c in decode}
        y_ax = len(kept) - 1
        for s in nonempty_subsets(decode):
            given = [0] + [pos[c] for c in decode if c not in s]
            entries[(r, s)] = discrete_mi(red, [pos[c] for c in s], [y_ax], given)
    return MutualInfoTable(entries)


# ---------------------------------------------------------------------------
# Monte-Carlo oracle
# ---------------------------------------------------------------------------

def _rng(seed: int, stream: int) -> np.random.Generator:
    # an explicit uint64 key: a plain list with values >= 2**63 would go through float
    key = np.array([int(seed) % 2**64, int(stream) % 2**64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _gain(channel: GaussianChannel, receiver: str, user: int) -> float:
    if receiver == "1":
        return 1.0 if user == 1 else channel.c21
    if receiver == "2":
        return channel.c12 if user == 1 else 1.0
    return channel.c1e if user == 1 else channel.c2e


def mc_mi_oracle(channel: GaussianChannel, schedule: TimeSharingSchedule, subset,
                 receiver: str, samples: int, seed: int) -> float:
    """Sample estimate of ``I(subset; Y_r | D_r \\ subset, Q)``.

    Draws every component, the jammers and the receiver noise, forms the
    received signal and compares the residual variances of least-squares fits
    of ``Y_r`` on the conditioning components with and without ``subset``.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    receiver = str(receiver)
    decode = DECODE_SETS[receiver]
    subset = frozenset(Component(c) for c in subset)
    if not subset or not subset <= set(decode):
        raise ValueError(f"subset must be a nonempty part of {[str(c) for c in decode]}")
    total = 0.0
    for qi, (p, state) in enumerate(schedule.states):
        if p == 0.0:
            continue
        rng = _rng(seed, qi)
        y = rng.standard_normal(samples)
        cols = {}
        for comp in COMPONENTS:
            pw = state.component_power(comp)
            draw = rng.standard_normal(samples)
            if pw > 0:
                cols[comp] = math.sqrt(pw) * draw
                y += math.sqrt(_gain(channel, receiver, comp.user)) * cols[comp]
        for user in (1, 2):
            draw = rng.standard_normal(samples)
            pj = state.jam_power(user)
            if pj > 0:
                y += math.sqrt(_gain(channel, receiver, user) * pj) * draw
        active = [c for c in decode if c in cols]
        if not any(c in subset for c in active):
            continue
        cond = [cols[c] for c in active if c not in subset]
        full = [cols[c] for c in active]
        v_cond = _residual_var(y, cond)
        v_full = _residual_var(y, full)
        total += p * 0.5 * math.log2(v_cond / v_full)
    return total


def _residual_var(y: np.ndarray, cols: list[np.ndarray]) -> float:
    if not cols:
        return float(np.dot(y, y)) / y.size
    X = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    res = y - X @ coef
    return float(np.dot(res, res)) / y.size
