"""Channel models and input-distribution containers.

Two settings are covered:

* the Gaussian IC-E in standard form,
  ``Y1 = X1 + sqrt(c21) X2 + N1``, ``Y2 = sqrt(c12) X1 + X2 + N2``,
  ``Ye = sqrt(c1e) X1 + sqrt(c2e) X2 + Ne`` with unit-variance noise, whose
  inputs are superpositions of independent Gaussian components
  ``Xk = Ck + Sk + Ok + Jk`` whose powers may vary with a time-sharing state;
* small-alphabet discrete memoryless IC-Es given by a conditional pmf
  table ``p(y1, y2, ye | x1, x2)``.

All containers are immutable once built.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

PROB_TOL = 1e-12
BUDGET_TOL = 1e-9
DEFAULT_MAX_ALPHABET = 4


class ScheduleError(ValueError):
    """Structurally malformed schedule (empty, negative or non-finite entries)."""


class ChannelError(ValueError):
    """Invalid channel description or input distribution."""


class Component(str, enum.Enum):
    """Rate-bearing signal components; jamming is carried as power only."""

    C1 = "C1"
    S1 = "S1"
    O1 = "O1"
    C2 = "C2"
    S2 = "S2"
    O2 = "O2"

    def __str__(self) -> str:
        return self.value

    @property
    def user(self) -> int:
        return int(self.value[1])

    @property
    def kind(self) -> str:
        return self.value[0]

    def swapped(self) -> "Component":
        return Component(self.kind + str(3 - self.user))


COMPONENTS: tuple[Component, ...] = tuple(Component)


def _readonly(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GaussianChannel:
    """Standard-form Gaussian IC-E. Gains are power gains, noise variance 1."""

    c12: float
    c21: float
    c1e: float
    c2e: float
    P1: float
    P2: float

    def __post_init__(self):
        for name in ("c12", "c21", "c1e", "c2e", "P1", "P2"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ChannelError(f"{name} must be a finite number, got {v!r}")
            object.__setattr__(self, name, float(v))
        for name in ("c12", "c21", "c1e", "c2e"):
            if getattr(self, name) < 0:
                raise ChannelError(f"gain {name} must be >= 0")
        if self.P1 <= 0 or self.P2 <= 0:
            raise ChannelError("power budgets P1, P2 must be > 0")

    def budget(self, user: int) -> float:
        return self.P1 if user == 1 else self.P2

    def swapped(self) -> "GaussianChannel":
        """The same channel with the user labels exchanged."""
        return GaussianChannel(c12=self.c21, c21=self.c12, c1e=self.c2e,
                               c2e=self.c1e, P1=self.P2, P2=self.P1)


@dataclass(frozen=True)
class PowerState:
    """Per-user power split over common, self, other and jamming signals."""

    Pc1: float = 0.0
    Ps1: float = 0.0
    Po1: float = 0.0
    Pj1: float = 0.0
    Pc2: float = 0.0
    Ps2: float = 0.0
    Po2: float = 0.0
    Pj2: float = 0.0

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ScheduleError(f"power {name} is not finite")
            if v < 0:
                raise ScheduleError(f"power {name} is negative ({v})")
            object.__setattr__(self, name, float(v))

    def component_power(self, comp: Component) -> float:
        return getattr(self, f"P{comp.kind.lower()}{comp.user}")

    def jam_power(self, user: int) -> float:
        return self.Pj1 if user == 1 else self.Pj2

    def total(self, user: int) -> float:
        k = user
        return sum(getattr(self, f"P{t}{k}") for t in "csoj")

    def scaled(self, factor: float) -> "PowerState":
        return PowerState(**{n: getattr(self, n) * factor
                             for n in self.__dataclass_fields__})

    def swapped(self) -> "PowerState":
        return PowerState(Pc1=self.Pc2, Ps1=self.Ps2, Po1=self.Po2, Pj1=self.Pj2,
                          Pc2=self.Pc1, Ps2=self.Ps1, Po2=self.Po1, Pj2=self.Pj1)

    def as_dict(self) -> dict[str, float]:
        return {n: getattr(self, n) for n in self.__dataclass_fields__}


@dataclass(frozen=True)
class TimeSharingSchedule:
    """Time-sharing pmf ``p(q)`` with one :class:`PowerState` per state."""

    states: tuple[tuple[float, PowerState], ...]

    def __post_init__(self):
        states = tuple((float(p), s) for p, s in self.states)
        if not states:
            raise ScheduleError("schedule has no states")
        for i, (p, s) in enumerate(states):
            if not math.isfinite(p) or p < 0:
                raise ScheduleError(f"state {i}: probability {p} is negative or not finite")
            if not isinstance(s, PowerState):
                raise ScheduleError(f"state {i}: expected PowerState, got {type(s).__name__}")
        object.__setattr__(self, "states", states)

    @classmethod
    def single(cls, state: PowerState | None = None, **powers) -> "TimeSharingSchedule":
        return cls(((1.0, state if state is not None else PowerState(**powers)),))

    @property
    def probabilities(self) -> tuple[float, ...]:
        return tuple(p for p, _ in self.states)

    def average_power(self, user: int) -> float:
        return sum(p * s.total(user) for p, s in self.states)

    def scaled(self, factor: float) -> "TimeSharingSchedule":
        return TimeSharingSchedule(tuple((p, s.scaled(factor)) for p, s in self.states))

    def swapped(self) -> "TimeSharingSchedule":
        return TimeSharingSchedule(tuple((p, s.swapped()) for p, s in self.states))


@dataclass(frozen=True)
class Violation:
    kind: str  # "normalization" | "budget"
    user: int | None
    excess: float
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate_schedule(schedule: TimeSharingSchedule, channel: GaussianChannel,
                      tol: float = BUDGET_TOL) -> ValidationReport:
    """Check normalization of ``p(q)`` and both average-power budgets.

    Structural problems (negative entries, empty schedules) are raised as
    :class:`ScheduleError` when the schedule is built, so this only reports
    budget-type violations.
    """
    if not isinstance(schedule, TimeSharingSchedule):
        raise ScheduleError("expected a TimeSharingSchedule")
    violations = []
    total_p = math.fsum(schedule.probabilities)
    if abs(total_p - 1.0) > tol:
        violations.append(Violation("normalization", None, total_p - 1.0,
                                    f"state probabilities sum to {total_p!r}, not 1"))
    for user in (1, 2):
        avg = math.fsum(p * s.total(user) for p, s in schedule.states)
        budget = channel.budget(user)
        if avg > budget + tol:
            # Name the states that carry more than the budget.
            heavy = [i for i, (_, s) in enumerate(schedule.states) if s.total(user) > budget + tol]
            where = f" (states over budget: {heavy})" if heavy else ""
            violations.append(Violation(
                "budget", user, avg - budget,
                f"user {user}: average power {avg:.12g} exceeds budget {budget:.12g} "
                f"by {avg - budget:.12g}{where}"))
    return ValidationReport(tuple(violations))


# ---------------------------------------------------------------------------
# discrete channels
# ---------------------------------------------------------------------------

def _check_pmf(arr: np.ndarray, axes: tuple[int, ...], what: str):
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise ChannelError(f"{what}: entries must be finite and >= 0")
    sums = arr.sum(axis=axes)
    err = np.max(np.abs(sums - 1.0)) if sums.size else 0.0
    if err > PROB_TOL * max(1, arr.shape[-1]):
        raise ChannelError(f"{what}: not normalized (max deviation {err:.3g})")


@dataclass(frozen=True)
class DiscreteChannel:
    """Conditional pmf ``p(y1, y2, ye | x1, x2)`` as an array indexed
    ``[x1, x2, y1, y2, ye]``."""

    pmf: np.ndarray
    max_alphabet: int = DEFAULT_MAX_ALPHABET

    def __post_init__(self):
        arr = np.asarray(self.pmf, dtype=float)
        if arr.ndim != 5:
            raise ChannelError(f"channel pmf must have 5 axes (x1,x2,y1,y2,ye), got {arr.ndim}")
        if min(arr.shape) < 1:
            raise ChannelError("empty alphabet")
        big = [n for n, s in zip(("X1", "X2", "Y1", "Y2", "Ye"), arr.shape) if s > self.max_alphabet]
        if big:
            raise ChannelError(f"alphabets {big} exceed the cap of {self.max_alphabet} symbols")
        _check_pmf(arr, (2, 3, 4), "channel")
        object.__setattr__(self, "pmf", _readonly(arr))

    @classmethod
    def from_components(cls, p_y1: np.ndarray, p_y2: np.ndarray, p_ye: np.ndarray,
                        **kw) -> "DiscreteChannel":
        """Build a channel whose three outputs are conditionally independent
        given ``(x1, x2)``; each argument is indexed ``[x1, x2, y]``."""
        pmf = np.einsum("abi,abj,abk->abijk", p_y1, p_y2, p_ye)
        return cls(pmf, **kw)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.pmf.shape

    @property
    def x_sizes(self) -> tuple[int, int]:
        return self.pmf.shape[0], self.pmf.shape[1]

    def marginal(self, receiver: str) -> np.ndarray:
        """``p(y_r | x1, x2)`` indexed ``[x1, x2, y]``."""
        axes = {"1": (3, 4), "2": (2, 4), "e": (2, 3)}[str(receiver)]
        return self.pmf.sum(axis=axes)

    def swapped(self) -> "DiscreteChannel":
        """Exchange user labels: inputs (x1, x2) and outputs (y1, y2)."""
        return DiscreteChannel(np.transpose(self.pmf, (1, 0, 3, 2, 4)), self.max_alphabet)

    def to_rows(self) -> list[tuple[int, int, int, int, int, float]]:
        """Nonzero entries as ``(x1, x2, y1, y2, ye, prob)`` rows."""
        idx = np.argwhere(self.pmf > 0)
        return [(*map(int, i), float(self.pmf[tuple(i)])) for i in idx]

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]], shape: Sequence[int] | None = None,
                  **kw) -> "DiscreteChannel":
        rows = [tuple(r) for r in rows]
        if not rows:
            raise ChannelError("empty pmf table")
        if shape is None:
            shape = [max(int(r[i]) for r in rows) + 1 for i in range(5)]
        pmf = np.zeros(shape)
        for r in rows:
            key = tuple(int(v) for v in r[:5])
            if any(k < 0 for k in key):
                raise ChannelError(f"negative symbol index in row {r}")
            pmf[key] += float(r[5])
        return cls(pmf, **kw)


def mac_to_ice(mac) -> DiscreteChannel:
    """Embed a MAC-E ``p(y1, ye | x1, x2)`` (array ``[x1, x2, y1, ye]``) into an
    IC-E whose second receiver observes exactly what the first one does."""
    arr = np.asarray(mac, dtype=float)
    if arr.ndim != 4:
        raise ChannelError("MAC-E pmf must have axes (x1, x2, y1, ye)")
    _check_pmf(arr, (2, 3), "MAC-E")
    n1 = arr.shape[2]
    pmf = np.zeros(arr.shape[:3] + (n1,) + arr.shape[3:])
    for y in range(n1):
        pmf[:, :, y, y, :] = arr[:, :, y, :]
    return DiscreteChannel(pmf, max_alphabet=max(DEFAULT_MAX_ALPHABET, max(arr.shape)))


@dataclass(frozen=True)
class FactoredInput:
    """Input distribution with the factorization

    ``p(q) prod_k p(c_k|q) p(s_k|q) p(o_k|q) p(x_1|c_1,s_1,o_1) p(x_2|c_2,s_2,o_2)``.

    ``marginals[comp]`` has shape ``(|Q|, |comp|)``; ``prefix1`` is indexed
    ``[c1, s1, o1, x1]`` and ``prefix2`` ``[c2, s2, o2, x2]``. A component with
    alphabet size one is unused.
    """

    pq: np.ndarray
    marginals: dict
    prefix1: np.ndarray
    prefix2: np.ndarray
    max_alphabet: int = DEFAULT_MAX_ALPHABET

    def __post_init__(self):
        pq = np.atleast_1d(np.asarray(self.pq, dtype=float))
        _check_pmf(pq, (0,), "p(q)")
        margs = {}
        for comp in COMPONENTS:
            m = self.marginals.get(comp, self.marginals.get(comp.value))
            m = np.ones((pq.size, 1)) if m is None else np.asarray(m, dtype=float)
            if m.ndim == 1:
                m = np.tile(m, (pq.size, 1))
            if m.shape[0] != pq.size:
                raise ChannelError(f"p({comp}|q) has {m.shape[0]} rows, expected |Q|={pq.size}")
            _check_pmf(m, (1,), f"p({comp}|q)")
            margs[comp] = _readonly(m)
        sizes = {c: m.shape[1] for c, m in margs.items()}
        big = [str(c) for c, s in sizes.items() if s > self.max_alphabet]
        if pq.size > self.max_alphabet:
            big.append("Q")
        if big:
            raise ChannelError(f"alphabets {big} exceed the cap of {self.max_alphabet} symbols")
        for k, name in ((1, "prefix1"), (2, "prefix2")):
            ker = np.asarray(getattr(self, name), dtype=float)
            want = tuple(sizes[Component(f"{t}{k}")] for t in "CSO")
            if ker.ndim != 4 or ker.shape[:3] != want:
                raise ChannelError(f"{name} must have shape {want} + (|X{k}|,), got {ker.shape}")
            _check_pmf(ker, (3,), f"p(x{k}|c{k},s{k},o{k})")
            object.__setattr__(self, name, _readonly(ker))
        object.__setattr__(self, "pq", _readonly(pq))
        object.__setattr__(self, "marginals", margs)

    def size(self, comp: Component) -> int:
        return self.marginals[comp].shape[1]

    @property
    def q_size(self) -> int:
        return self.pq.size

    def swapped(self) -> "FactoredInput":
        return FactoredInput(self.pq, {c.swapped(): m for c, m in self.marginals.items()},
                             self.prefix2, self.prefix1, self.max_alphabet)

    @classmethod
    def from_pairs(cls, pq, first: tuple[Component, np.ndarray, np.ndarray],
                   second: tuple[Component, np.ndarray, np.ndarray], **kw) -> "FactoredInput":
        """Distribution using one component per user, as in the special cases
        ``P(T1, T2)``: ``first = (comp, p(t|q), p(x|t))`` for the component
        feeding user ``comp.user``'s input, and likewise ``second``."""
        pq = np.atleast_1d(np.asarray(pq, dtype=float))
        margs = {}
        prefixes = {}
        for comp, m, ker in (first, second):
            m = np.asarray(m, dtype=float)
            if m.ndim == 1:
                m = np.tile(m, (pq.size, 1))
            ker = np.asarray(ker, dtype=float)
            margs[comp] = m
            shape = [1, 1, 1, ker.shape[-1]]
            shape["CSO".index(comp.kind)] = ker.shape[0]
            prefixes[comp.user] = ker.reshape(shape)
        if set(prefixes) != {1, 2}:
            raise ChannelError("from_pairs needs one component for each user")
        return cls(pq, margs, prefixes[1], prefixes[2], **kw)
