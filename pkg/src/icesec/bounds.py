"""Outer-bound expressions, sampled channel-condition checks and explicit
rate assignments for the special cases with known (sum) capacity.

Random distributions are Dirichlet(1, ..., 1) draws from a Philox stream
keyed on ``(seed, sample_index)``, so every sample is reproducible in
isolation and the first counterexample is always the lowest-index one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .channel import COMPONENTS, DiscreteChannel
from .mutual_info import DECODE_SETS, MutualInfoTable, discrete_mi, nonempty_subsets
from .region import VARIABLES, build_constraints

C1, S1, O1, C2, S2, O2 = COMPONENTS

CASES = ("C1", "C2", "C3", "C4", "C6", "C8")
WITNESS_CASES = ("C1", "C2", "C3", "C4", "C6", "C7")
MARGIN = 1e-9
WITNESS_TOL = 1e-9
SILENT_TOL = 1e-12
DEFAULT_MAX_ALPHABET = 4

# axis layout of AuxiliaryInput.joint
U, V1, V2, Y1, Y2, YE = range(6)
_AX = {"U": U, "Q": U, "V1": V1, "V2": V2, "Y1": Y1, "Y2": Y2, "Ye": YE}


class CapError(ValueError):
    pass


class CaseError(ValueError):
    pass


# streams at or above this index are reserved for draws that are not part of
# a condition search (evaluation points, outer-bound maximization)
AUX_STREAM = 1 << 63


def _rng(seed: int, index: int) -> np.random.Generator:
    # an explicit uint64 key: a plain list with values >= 2**63 would go through float
    key = np.array([int(seed) % 2**64, int(index) % 2**64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def random_aux(channel: DiscreteChannel, seed: int, index: int, u_size: int = 1) -> "AuxiliaryInput":
    """Reproducible draw from the reserved stream family."""
    return AuxiliaryInput.random(channel, _rng(seed, AUX_STREAM + int(index)), u_size=u_size)


def _check_cond(arr: np.ndarray, name: str, tol: float = 1e-12) -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D conditional table")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has negative or non-finite entries")
    dev = np.max(np.abs(arr.sum(axis=1) - 1.0))
    if dev > tol:
        raise ValueError(f"{name} rows are not normalized (max deviation {dev:.3g})")
    return arr


@dataclass(frozen=True)
class AuxiliaryInput:
    """``p(u) p(v1|u) p(v2|u) p(x1|v1) p(x2|v2)``.

    The same object doubles as a time-sharing input ``P(T1, T2)`` with ``U``
    read as ``Q``.
    """

    pu: np.ndarray
    pv1_u: np.ndarray
    pv2_u: np.ndarray
    px1_v1: np.ndarray
    px2_v2: np.ndarray
    max_alphabet: int = DEFAULT_MAX_ALPHABET

    def __post_init__(self):
        pu = np.atleast_1d(np.asarray(self.pu, dtype=float))
        _check_cond(pu[None, :], "p(u)")
        a = _check_cond(self.pv1_u, "p(v1|u)")
        b = _check_cond(self.pv2_u, "p(v2|u)")
        c = _check_cond(self.px1_v1, "p(x1|v1)")
        d = _check_cond(self.px2_v2, "p(x2|v2)")
        if a.shape[0] != pu.size or b.shape[0] != pu.size:
            raise ValueError("p(v|u) row counts must equal |U|")
        if c.shape[0] != a.shape[1] or d.shape[0] != b.shape[1]:
            raise ValueError("p(x|v) row counts must equal |V|")
        if max(pu.size, a.shape[1], b.shape[1]) > self.max_alphabet:
            raise CapError(f"auxiliary alphabets exceed the cap of {self.max_alphabet}")
        for name, v in (("pu", pu), ("pv1_u", a), ("pv2_u", b), ("px1_v1", c), ("px2_v2", d)):
            object.__setattr__(self, name, v)

    @property
    def sizes(self) -> tuple[int, int, int]:
        return self.pu.size, self.pv1_u.shape[1], self.pv2_u.shape[1]

    def joint(self, channel: DiscreteChannel) -> np.ndarray:
        """``p(u, v1, v2, y1, y2, ye)``."""
        if self.px1_v1.shape[1] != channel.x_sizes[0] or self.px2_v2.shape[1] != channel.x_sizes[1]:
            raise ValueError("p(x|v) columns must match the channel input alphabets")
        return np.einsum("u,ua,ub,ax,bz,xzijk->uabijk", self.pu, self.pv1_u, self.pv2_u,
                         self.px1_v1, self.px2_v2, channel.pmf)

    @classmethod
    def random(cls, channel: DiscreteChannel, rng: np.random.Generator, u_size: int = 1,
               v_sizes: tuple[int, int] | None = None) -> "AuxiliaryInput":
        """Uniform draw on every simplex; ``|V_k|`` defaults to ``|X_k|``."""
        x1, x2 = channel.x_sizes
        n1, n2 = v_sizes or (x1, x2)
        return cls(rng.dirichlet(np.ones(u_size)),
                   rng.dirichlet(np.ones(n1), size=u_size),
                   rng.dirichlet(np.ones(n2), size=u_size),
                   rng.dirichlet(np.ones(x1), size=n1),
                   rng.dirichlet(np.ones(x2), size=n2))


def mi(joint: np.ndarray, targets: str, observed: str, given: str = "") -> float:
    """Mutual information on an :meth:`AuxiliaryInput.joint` array using
    names: ``mi(j, "V1,V2", "Y1", "U")``."""
    ax = lambda s: [_AX[t] for t in s.split(",") if t]
    return discrete_mi(joint, ax(targets), ax(observed), ax(given))


# ---------------------------------------------------------------------------
# outer bounds
# ---------------------------------------------------------------------------

def outer_r1(channel: DiscreteChannel, aux: AuxiliaryInput) -> float:
    """``I(V1;Y1|V2,U) - I(V1;Ye|U)``, unclipped."""
    j = aux.joint(channel)
    return mi(j, "V1", "Y1", "V2,U") - mi(j, "V1", "Ye", "U")


def outer_r2(channel: DiscreteChannel, aux: AuxiliaryInput) -> float:
    j = aux.joint(channel)
    return mi(j, "V2", "Y2", "V1,U") - mi(j, "V2", "Ye", "U")


@dataclass(frozen=True)
class Inequality:
    name: str
    lhs: float
    rhs: float

    @property
    def excess(self) -> float:
        return self.lhs - self.rhs


@dataclass(frozen=True)
class Counterexample:
    index: int
    aux: AuxiliaryInput
    inequality: Inequality


@dataclass(frozen=True)
class CaseReport:
    case: str
    samples: int
    counterexample: Counterexample | None = None
    value: float | None = None
    notes: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "counterexample" if self.counterexample else "no-counterexample"

    @property
    def ok(self) -> bool:
        return self.counterexample is None

    def summary(self) -> dict:
        out = {"case": self.case, "verdict": self.verdict, "samples": self.samples,
               "value": self.value, **self.notes}
        if self.counterexample:
            q = self.counterexample.inequality
            out["counterexample"] = {"index": self.counterexample.index, "inequality": q.name,
                                     "lhs": q.lhs, "rhs": q.rhs}
        return out


def _outer_sum_condition(j) -> list[Inequality]:
    return [Inequality("I(V2;Y2|V1) <= I(V2;Y1|V1)", mi(j, "V2", "Y2", "V1,U"), mi(j, "V2", "Y1", "V1,U"))]


def _search(channel: DiscreteChannel, samples: int, seed: int, u_sizes: tuple[int, ...],
            test: Callable[[np.ndarray], list[Inequality]]) -> tuple[int, Counterexample | None]:
    if samples < 1:
        raise ValueError("samples must be >= 1")
    for i in range(samples):
        aux = AuxiliaryInput.random(channel, _rng(seed, i), u_size=u_sizes[i % len(u_sizes)])
        for q in test(aux.joint(channel)):
            if q.excess > MARGIN:
                return i + 1, Counterexample(i, aux, q)
    return samples, None


def outer_sum_value(channel: DiscreteChannel, aux: AuxiliaryInput) -> float:
    j = aux.joint(channel)
    return mi(j, "V1,V2", "Y1", "U") - mi(j, "V1,V2", "Ye", "U")


def outer_sum_condition(channel: DiscreteChannel, samples: int = 200, seed: int = 0) -> CaseReport:
    """Sampled check of ``I(V2;Y2|V1) <= I(V2;Y1|V1)`` over product inputs."""
    n, cx = _search(channel, samples, seed, (1,), _outer_sum_condition)
    return CaseReport("outer-sum", n, cx)


def outer_sum(channel: DiscreteChannel, aux: AuxiliaryInput, condition_samples: int = 200,
              seed: int = 0) -> tuple[float, CaseReport]:
    """Sum-rate bound ``I(V1,V2;Y1|U) - I(V1,V2;Ye|U)`` at ``aux`` together
    with a sampled check of the condition under which it holds."""
    value = outer_sum_value(channel, aux)
    rep = outer_sum_condition(channel, condition_samples, seed)
    return value, CaseReport(rep.case, rep.samples, rep.counterexample, value)


# ---------------------------------------------------------------------------
# special-case conditions
# ---------------------------------------------------------------------------

def _ineq(j, chain: list[tuple[str, str, str]], names: list[str]) -> list[Inequality]:
    vals = [mi(j, *t) for t in chain]
    return [Inequality(f"{names[k]} <= {names[k + 1]}", vals[k], vals[k + 1])
            for k in range(len(vals) - 1)]


def _term(t: tuple[str, str, str]) -> str:
    a, b, c = t
    return f"I({a};{b}|{c})" if c else f"I({a};{b})"


_V2Y2_V1Q = ("V2", "Y2", "V1,Q")
_V2Y1_V1Q = ("V2", "Y1", "V1,Q")
_V2Ye_V1Q = ("V2", "Ye", "V1,Q")
_V2YeQ = ("V2", "Ye", "Q")
_V2Y1Q = ("V2", "Y1", "Q")
_V2Y2Q = ("V2", "Y2", "Q")

# each case: list of chains a <= b <= ...; conditions with Q use |Q| in {1, 2}
_CHAINS = {
    "C1": [[_V2Y2_V1Q, _V2YeQ], [_V2Ye_V1Q, _V2Y1Q]],
    "C2": [[_V2YeQ, _V2Y1Q, _V2Y2Q], [("V1", "Ye", "V2,Q"), ("V1", "Y1", "V2,Q")],
           [_V2Y2_V1Q, _V2Y1_V1Q]],
    "C3": [[_V2YeQ, _V2Y1_V1Q, _V2Ye_V1Q], [_V2Y2_V1Q, _V2Y1_V1Q]],
    "C4": [[_V2Y1Q, _V2Ye_V1Q, _V2Y1_V1Q], [_V2Y2_V1Q, _V2Y1_V1Q]],
    "C6": [[("V1", "Ye", "V2"), ("V1", "Y1", "V2")], [("V2", "Ye", "V1"), ("V2", "Y1", "V1")]],
    "C8": [[("V2", "Y1", ""), ("V2", "Ye", "V1")]],
}
_U_SIZES = {"C1": (1, 2), "C2": (1, 2), "C3": (1, 2), "C4": (1, 2), "C6": (1,), "C8": (1,)}


def case_inequalities(case: str, joint: np.ndarray) -> list[Inequality]:
    if case not in _CHAINS:
        raise CaseError(f"unknown case {case!r}; expected one of {CASES}")
    out = []
    for chain in _CHAINS[case]:
        out += _ineq(joint, chain, [_term(t) for t in chain])
    return out


def case_value(case: str, channel: DiscreteChannel, aux: AuxiliaryInput) -> float | None:
    """Capacity (C1, C8) or sum-capacity expression at ``aux``, reading V1 as
    user 1's component and V2 as user 2's. For C8 the distribution must
    satisfy ``I(V2;Ye) <= I(V2;Y1)``; otherwise ``None`` is returned."""
    j = aux.joint(channel)
    if case == "C1":
        return max(mi(j, "V1", "Y1", "V2,Q") - mi(j, "V1", "Ye", "Q"), 0.0)
    if case == "C8":
        if mi(j, "V2", "Ye") > mi(j, "V2", "Y1") + MARGIN:
            return None
        return max(mi(j, "V1,V2", "Y1") - mi(j, "V1,V2", "Ye"), 0.0)
    if case in ("C2", "C3", "C4", "C6"):
        return mi(j, "V1,V2", "Y1", "Q") - mi(j, "V1,V2", "Ye", "Q")
    raise CaseError(f"unknown case {case!r}")


def check_condition(case: str, channel: DiscreteChannel, samples: int = 200, seed: int = 0,
                    at: AuxiliaryInput | None = None) -> CaseReport:
    """Search for an input distribution violating the case's hypotheses.

    A clean report means no counterexample among ``samples`` draws, not a
    proof. ``at`` optionally attaches the case's (sum-)capacity expression
    evaluated at that distribution.
    """
    if case not in CASES:
        raise CaseError(f"unknown case {case!r}; expected one of {CASES}")
    n, cx = _search(channel, samples, seed, _U_SIZES[case],
                    lambda j: case_inequalities(case, j))
    value = case_value(case, channel, at) if at is not None else None
    notes = {}
    if at is not None and value is None:
        notes["value_note"] = "evaluation point fails I(V2;Ye) <= I(V2;Y1)"
    return CaseReport(case, n, cx, value, notes)


# ---------------------------------------------------------------------------
# explicit rate assignments
# ---------------------------------------------------------------------------

_USED = {"C1": (S1, O2), "C2": (S1, C2), "C3": (S1, O2), "C4": (S1, O2),
         "C6": (C1, C2), "C7": (S1, O2)}


@dataclass(frozen=True)
class Witness:
    case: str
    rates: dict
    guard: bool
    feasible: bool
    residual: float

    @property
    def r1(self) -> float:
        return self.rates["R_C1"] + self.rates["R_S1"]

    @property
    def r2(self) -> float:
        return self.rates["R_C2"] + self.rates["R_S2"]


def _require_silent(case: str, table: MutualInfoTable):
    used = set(_USED[case])
    for r in ("1", "2", "e"):
        for s in nonempty_subsets(DECODE_SETS[r]):
            if s & used:
                continue
            v = table.value(r, s)
            if v > SILENT_TOL:
                names = ",".join(sorted(c.value for c in s))
                raise CaseError(f"case {case} needs {names} silent, but I({names};Y{r}|...) = {v:.3g}")


def _quantities(case: str, table: MutualInfoTable) -> dict[str, float]:
    """Conditional MIs of the two active components, each conditioned on Q,
    recovered from the table by the chain rule."""
    ca, cb = _USED[case]
    a, b = ca.value, cb.value
    t = table.value
    q = {}
    for r in ("1", "e") if case != "C2" else ("1", "2", "e"):
        dec = DECODE_SETS[r]
        if ca in dec and cb in dec:
            both = t(r, {ca, cb})
            q[f"{a}{b};{r}"] = both
            q[f"{a};{r}|{b}"] = t(r, {ca})
            q[f"{b};{r}|{a}"] = t(r, {cb})
            q[f"{a};{r}"] = both - t(r, {cb})
            q[f"{b};{r}"] = both - t(r, {ca})
        elif cb in dec:
            q[f"{b};{r}"] = t(r, {cb})
    return q


def witness_rates(case: str, table: MutualInfoTable) -> tuple[dict[str, float], bool]:
    """Rate assignment of the case's achievability argument and whether its
    zero-rate guard fired."""
    rates = dict.fromkeys(VARIABLES, 0.0)
    q = _quantities(case, table)
    if case == "C1":
        r = q["S1;1|O2"] - q["S1;e"]
        if r <= 0:
            return rates, True
        rates.update(R_S1=r, Rx_S1=q["S1;e"], Rx_O2=q["O2;e|S1"])
    elif case == "C2":
        if q["S1C2;1"] <= q["S1C2;e"]:
            return rates, True
        rates.update(R_S1=q["S1;1|C2"] - q["S1;e|C2"], Rx_S1=q["S1;e|C2"],
                     R_C2=q["C2;1"] - q["C2;e"], Rx_C2=q["C2;e"])
    elif case in ("C3", "C4"):
        if q["S1O2;1"] <= q["S1O2;e"]:
            return rates, True
        rates["R_S1"] = q["S1O2;1"] - q["S1O2;e"]
        if case == "C3":
            rates.update(Rx_S1=q["S1O2;e"] - q["O2;1|S1"], Rx_O2=q["O2;1|S1"])
        else:
            rates.update(Rx_S1=q["S1;e"], Rx_O2=q["O2;e|S1"])
    elif case == "C6":
        total = q["C1C2;1"] - q["C1C2;e"]
        if total <= 0:
            return rates, True
        # lowest admissible randomization for C1; C1 takes what its own
        # constraint allows and C2 gets the remainder of the sum rate
        t = q["C1;e"]
        r1 = min(q["C1;1|C2"] - t, total)
        rates.update(R_C1=r1, R_C2=total - r1, Rx_C1=t, Rx_C2=q["C1C2;e"] - t)
    elif case == "C7":
        m = min(q["O2;1"], q["O2;e|S1"])
        r = q["S1;1|O2"] - q["S1O2;e"] + m
        if r <= 0:
            return rates, True
        rates.update(R_S1=r, Rx_S1=q["S1O2;e"] - m, Rx_O2=m)
    else:
        raise CaseError(f"no rate assignment for case {case!r}; expected one of {WITNESS_CASES}")
    return rates, False


def corollary_witness(case: str, table: MutualInfoTable) -> Witness:
    """Build the case's rate assignment and test it against the polytope.

    When the guard fires every rate is zero; the pair ``(0, 0)`` is always
    achievable (both users stay silent), so the verdict is feasible without
    consulting the polytope.
    """
    if case not in WITNESS_CASES:
        raise CaseError(f"no rate assignment for case {case!r}; expected one of {WITNESS_CASES}")
    _require_silent(case, table)
    rates, guard = witness_rates(case, table)
    if guard:
        return Witness(case, rates, True, True, 0.0)
    poly = build_constraints(table)
    x = np.array([rates[v] for v in VARIABLES])
    res = poly.residual(x)
    return Witness(case, rates, False, res <= WITNESS_TOL, res)
