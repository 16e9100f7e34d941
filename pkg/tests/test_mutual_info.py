import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from icesec import (COMPONENTS, Component, DiscreteChannel, FactoredInput, GaussianChannel,
                    MutualInfoTable, PowerState, TimeSharingSchedule, discrete_mi,
                    discrete_mi_table, gamma, gaussian_mi_table, mc_mi_oracle)
from icesec.mutual_info import MutualInfoError

from families import random_channel, random_pair_input

C1, S1, O1, C2, S2, O2 = COMPONENTS
FIG3 = GaussianChannel(c12=1.9, c21=1.9, c1e=0.5, c2e=0.5, P1=10, P2=10)


def test_gamma_values():
    assert gamma(0) == 0.0
    assert gamma(1) == pytest.approx(0.5)
    assert gamma(3) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        gamma(-0.1)


def test_table_has_93_entries():
    t = gaussian_mi_table(FIG3, TimeSharingSchedule.single(Pc1=10))
    assert len(t.entries) == 93
    assert not t.missing()


def test_single_component_entries():
    t = gaussian_mi_table(FIG3, TimeSharingSchedule.single(Ps1=10))
    assert t.value("1", [S1]) == pytest.approx(gamma(10), abs=1e-12)
    assert t.value("e", [S1]) == pytest.approx(gamma(5), abs=1e-12)
    assert t.value("2", [C2]) == 0.0


def test_jamming_enters_as_noise():
    t = gaussian_mi_table(FIG3, TimeSharingSchedule.single(Ps1=10, Pj2=4))
    assert t.value("1", [S1]) == pytest.approx(gamma(10 / (1 + 1.9 * 4)), abs=1e-12)
    assert t.value("e", [S1]) == pytest.approx(gamma(5 / (1 + 2)), abs=1e-12)


def test_conditioning_removes_decoded_interference():
    t = gaussian_mi_table(FIG3, TimeSharingSchedule.single(Pc1=6, Pc2=8))
    # receiver 1 conditions on C2 when evaluating {C1}
    assert t.value("1", [C1]) == pytest.approx(gamma(6), abs=1e-12)
    assert t.value("1", [C1, C2]) == pytest.approx(gamma(6 + 1.9 * 8), abs=1e-12)
    # the eavesdropper also conditions on the other five components
    assert t.value("e", [C2]) == pytest.approx(gamma(0.5 * 8), abs=1e-12)


def test_time_sharing_averages_entries():
    sch = TimeSharingSchedule(((0.25, PowerState(Pc1=20)), (0.75, PowerState(Pc1=20 / 3))))
    t = gaussian_mi_table(FIG3, sch)
    assert t.value("1", [C1]) == pytest.approx(0.25 * gamma(20) + 0.75 * gamma(20 / 3), abs=1e-12)


def test_table_swap_matches_swapped_channel():
    sch = TimeSharingSchedule.single(Pc1=2, Ps1=3, Po1=1, Pc2=4, Ps2=1, Pj2=2)
    ch = GaussianChannel(c12=0.7, c21=1.3, c1e=0.4, c2e=0.9, P1=10, P2=7)
    a = gaussian_mi_table(ch, sch).swapped()
    b = gaussian_mi_table(ch.swapped(), sch.swapped())
    for k in MutualInfoTable.keys_required():
        assert a[k] == pytest.approx(b[k], abs=1e-12)


def test_missing_entry_is_a_key_error():
    t = MutualInfoTable({("1", frozenset([C1])): 0.1})
    with pytest.raises(KeyError):
        t.value("1", [S1])
    assert len(t.missing()) == 92


def test_discrete_mi_known_channels():
    # binary symmetric channel with uniform input
    p = 0.11
    joint = 0.5 * np.array([[1 - p, p], [p, 1 - p]])
    h = -p * math.log2(p) - (1 - p) * math.log2(1 - p)
    assert discrete_mi(joint, 0, 1) == pytest.approx(1 - h, abs=1e-12)
    # XOR: x1 alone says nothing, given x2 it is a full bit
    joint = np.zeros((2, 2, 2))
    for a in range(2):
        for b in range(2):
            joint[a, b, a ^ b] = 0.25
    assert discrete_mi(joint, 0, 2) == pytest.approx(0.0, abs=1e-15)
    assert discrete_mi(joint, 0, 2, given=1) == pytest.approx(1.0, abs=1e-12)


def test_discrete_mi_rejects_bad_input():
    joint = np.full((2, 2), 0.25)
    with pytest.raises(MutualInfoError):
        discrete_mi(joint * 2, 0, 1)
    with pytest.raises(MutualInfoError):
        discrete_mi(joint, 0, 0)
    with pytest.raises(MutualInfoError):
        discrete_mi(joint, 0, 5)


pmfs = st.integers(min_value=0, max_value=2**32 - 1).map(
    lambda s: np.random.default_rng(s).dirichlet(np.ones(18)).reshape(3, 3, 2))


@settings(max_examples=60, deadline=None)
@given(pmfs)
def test_discrete_mi_symmetry_and_chain_rule(joint):
    assert discrete_mi(joint, 0, 1) == pytest.approx(discrete_mi(joint, 1, 0), abs=1e-12)
    lhs = discrete_mi(joint, [0, 1], 2)
    rhs = discrete_mi(joint, 0, 2) + discrete_mi(joint, 1, 2, given=0)
    assert lhs == pytest.approx(rhs, abs=1e-12)
    assert discrete_mi(joint, 0, [1, 2]) >= discrete_mi(joint, 0, 1) - 1e-12


def test_discrete_table_swap_symmetry():
    rng = np.random.default_rng(11)
    for _ in range(5):
        ch = random_channel(rng)
        inp = random_pair_input(rng, C1, O2, ch, q_size=2)
        t = discrete_mi_table(ch, inp)
        s = discrete_mi_table(ch.swapped(), inp.swapped())
        ref = t.swapped()
        for k in MutualInfoTable.keys_required():
            assert s[k] == pytest.approx(ref[k], abs=1e-12)


def test_discrete_table_degenerate_components_vanish():
    rng = np.random.default_rng(3)
    ch = random_channel(rng)
    inp = random_pair_input(rng, S1, C2, ch, q_size=1)
    t = discrete_mi_table(ch, inp)
    for r, s in MutualInfoTable.keys_required():
        if not s & {S1, C2}:
            assert t[(r, s)] == 0.0


def test_mc_oracle_rejects_bad_arguments():
    sch = TimeSharingSchedule.single(Pc1=1)
    with pytest.raises(ValueError):
        mc_mi_oracle(FIG3, sch, [S2], "1", 100, 0)
    with pytest.raises(ValueError):
        mc_mi_oracle(FIG3, sch, [C1], "1", 0, 0)


def test_mc_oracle_is_seeded_and_close():
    sch = TimeSharingSchedule.single(Pc1=4, Ps1=3, Pc2=2, Pj2=1)
    a = mc_mi_oracle(FIG3, sch, [C1, S1], "1", 50_000, 9)
    assert a == mc_mi_oracle(FIG3, sch, [C1, S1], "1", 50_000, 9)
    exact = gaussian_mi_table(FIG3, sch).value("1", [C1, S1])
    assert abs(a - exact) < 0.03


def test_gamma_of_ten():
    assert gamma(10) == pytest.approx(1.7297158093186489, abs=1e-15)


def test_zero_powers_give_zero_table():
    t = gaussian_mi_table(FIG3, TimeSharingSchedule.single())
    assert all(v == 0.0 for v in t.entries.values())


def test_full_jamming_example():
    t = gaussian_mi_table(FIG3, TimeSharingSchedule.single(Ps1=10, Pj2=10))
    assert t.value("1", [S1]) == pytest.approx(gamma(10 / 20), abs=1e-12)
    assert t.value("e", [S1]) == pytest.approx(gamma(5 / 6), abs=1e-12)


def test_blind_eavesdropper_learns_nothing():
    rng = np.random.default_rng(21)
    pmf = np.einsum("xzab,e->xzabe", rng.dirichlet(np.ones(4), size=(2, 2)).reshape(2, 2, 2, 2),
                    np.array([0.3, 0.7]))
    ch = DiscreteChannel(pmf)
    t = discrete_mi_table(ch, random_pair_input(rng, S1, O2, ch, q_size=2))
    eve = [v for (r, _), v in t.entries.items() if r == "e"]
    assert len(eve) == 63 and max(eve) < 1e-15


def test_table_chain_rule_on_binary_instances():
    from icesec.mutual_info import compose_joint
    rng = np.random.default_rng(17)
    for _ in range(10):
        ch = random_channel(rng)
        inp = random_pair_input(rng, C1, C2, ch, q_size=2)
        t = discrete_mi_table(ch, inp)
        # I(C2;Y1|S1,O2,Q) from the raw joint; axes q,c1,s1,o1,c2,s2,o2,y
        joint = compose_joint(ch, inp)["1"]
        tail = discrete_mi(joint, [4], [7], [0, 2, 6])
        assert t.value("1", [C1, C2]) == pytest.approx(t.value("1", [C1]) + tail, abs=1e-9)


def test_mc_oracle_zero_power_and_wiretap_entry():
    assert abs(mc_mi_oracle(FIG3, TimeSharingSchedule.single(), [C1], "1", 10_000, 1)) < 1e-6
    est = mc_mi_oracle(FIG3, TimeSharingSchedule.single(Ps1=10), [S1], "1", 1_000_000, 2)
    assert abs(est - gamma(10)) < 0.02
