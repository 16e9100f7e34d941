import math

import numpy as np
import pytest

from icesec import (COMPONENTS, GaussianChannel, MutualInfoTable, discrete_mi_table, gamma,
                    validate_schedule)
from icesec.schemes import (FAMILIES, NF_KEYS, BudgetError, SweepConfig, ctdma_point,
                            ctdma_region, evaluate_family, family_schedules, gnf_ncp_rate,
                            level_fractions, nf_rate_discrete, nf_values_from_table,
                            pair_fractions, sweep_region, wiretap_with_jamming_rate)

from families import random_channel, random_pair_input
from helpers import FIG3, FIG4, FIG5, FIGURES

C1, S1, O1, C2, S2, O2 = COMPONENTS
COARSE = dict(levels=3, alpha_steps=5, weight_count=17)
SIMPLE = GaussianChannel(c12=1.0, c21=0.5, c1e=1.0, c2e=1.0, P1=1.0, P2=1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        SweepConfig(family="G7")
    with pytest.raises(ValueError):
        SweepConfig(levels=1)
    with pytest.raises(ValueError):
        SweepConfig(alpha_steps=1.5)


def test_level_grid():
    lv = level_fractions(9)
    assert lv[0] == 0.0 and lv[1] == pytest.approx(1 / 16) and lv[-1] == 1.0
    assert len(lv) == 9
    # eight nonzero levels, evenly spaced in log between 1/16 and 1
    assert np.allclose(np.diff(np.log2(lv[1:])), 4 / 7)
    pairs = pair_fractions(3)
    assert all(a + b <= 1 + 1e-12 for a, b in pairs)
    assert (0.0, 1.0) in pairs and (1 / 16, 15 / 16) in pairs


def test_ctdma_point_matches_hand_formula():
    # every slot at 20 averages 20 per user, twice the budget
    with pytest.raises(BudgetError):
        ctdma_point(FIG4, 0.5, 20, 20, 20, 20)
    r1, r2 = ctdma_point(FIG4, 0.5, 20, 20, 20, 20, check_budget=False)
    hand = 0.25 * (math.log2(1 + 20 / 13) - math.log2(1 + 22 / 23))
    assert r1 == pytest.approx(hand, abs=1e-12)
    assert r2 == pytest.approx(hand, abs=1e-12)
    assert hand == pytest.approx(0.0939, abs=5e-5)


def test_ctdma_point_edges_and_clip():
    assert ctdma_point(FIG4, 1.0, 10, 10, 7, 0)[1] == 0.0
    assert ctdma_point(FIG4, 0.5, 20, 0, 0, 0)[0] == 0.0
    with pytest.raises(BudgetError):
        ctdma_point(FIG4, 0.5, 30, 0, 0, 0)
    with pytest.raises(BudgetError):
        ctdma_point(FIG4, 0.5, -1, 0, 0, 0, check_budget=False)


def test_ctdma_within_budget():
    # half the time sending at 10, half the time jamming at 10
    r1, r2 = ctdma_point(FIG4, 0.5, 10, 10, 10, 10)
    hand = 0.25 * (math.log2(1 + 10 / 7) - math.log2(1 + 11 / 12))
    assert r1 == pytest.approx(hand, abs=1e-12) and r2 == pytest.approx(hand, abs=1e-12)


def test_ctdma_region_examples():
    f = ctdma_region(FIG4, SweepConfig(levels=5, alpha_steps=21))
    assert f.r1_max >= 0.09 and f.r2_max >= 0.09
    blind = GaussianChannel(c12=0.6, c21=0.6, c1e=1e6, c2e=1e6, P1=10, P2=10)
    assert ctdma_region(blind, SweepConfig(**COARSE), ncp=True).pairs == [(0.0, 0.0)]
    # jamming inflates the eavesdropper noise by the same huge gain, so its
    # SINR tends to Ps / Pj and cooperative TDMA keeps a positive rate
    assert ctdma_region(blind, SweepConfig(**COARSE)).r1_max > 0


def test_ctdma_params_ids_reproduce_points():
    f = ctdma_region(FIG5, SweepConfig(**COARSE))
    for p in f:
        if p.params_id == "axis":
            continue
        _, a, s1, s2 = p.params_id.split("|")
        alpha = float(a.split("=")[1])
        ps1, pj2 = (float(x.split("=")[1]) for x in s1.split(","))
        ps2, pj1 = (float(x.split("=")[1]) for x in s2.split(","))
        r1, r2 = ctdma_point(FIG5, alpha, ps1, pj2, ps2, pj1)
        assert (r1, r2) == pytest.approx((p.r1, p.r2), abs=1e-5)


def test_wiretap_with_jamming_examples():
    r = wiretap_with_jamming_rate(SIMPLE, 1, 1.0, 1.0)
    assert r == pytest.approx(0.5 * math.log2(10 / 9), abs=1e-12)
    assert r == pytest.approx(gamma(2 / 3) - gamma(1 / 2), abs=1e-12)
    assert wiretap_with_jamming_rate(SIMPLE, 1, 1.0, 0.0) == 0.0
    assert wiretap_with_jamming_rate(SIMPLE, 1, 0.0, 1.0) == 0.0
    with pytest.raises(BudgetError):
        wiretap_with_jamming_rate(SIMPLE, 1, 2.0, 0.0)
    with pytest.raises(ValueError):
        wiretap_with_jamming_rate(SIMPLE, 3, 1.0, 0.0)


def test_wiretap_user_two_mirrors_user_one():
    assert wiretap_with_jamming_rate(FIG5, 2, 8, 3) == pytest.approx(
        wiretap_with_jamming_rate(FIG5.swapped(), 1, 8, 3), abs=0)


def test_gnf_examples():
    assert gnf_ncp_rate(SIMPLE) == 0.0
    blind1 = GaussianChannel(c12=1, c21=100, c1e=0, c2e=1, P1=1, P2=1)
    assert gnf_ncp_rate(blind1) == pytest.approx(0.5, abs=1e-12)


def test_gnf_zero_power_user_one():
    # the channel type insists on P1 > 0; the rate vanishes continuously
    tiny = GaussianChannel(c12=1, c21=0.5, c1e=1, c2e=1, P1=1e-12, P2=1)
    assert gnf_ncp_rate(tiny) < 1e-11


def test_nf_rate_with_constant_o2():
    v = dict.fromkeys(NF_KEYS, 0.0)
    v.update({"I(S1;Y1|O2)": 0.8, "I(S1;Ye|O2)": 0.3, "I(S1,O2;Ye)": 0.3})
    assert nf_rate_discrete(v) == pytest.approx((0.5, 0.5), abs=1e-15)
    v["I(S1;Ye|O2)"] = 0.9
    v["I(S1,O2;Ye)"] = 0.9
    assert nf_rate_discrete(v) == (0.0, 0.0)


def test_nf_rate_rejects_chain_rule_gap():
    v = dict.fromkeys(NF_KEYS, 0.1)
    with pytest.raises(ValueError):
        nf_rate_discrete(v)
    with pytest.raises(KeyError):
        nf_rate_discrete({})


def test_nf_rate_forms_on_random_tables():
    rng = np.random.default_rng(40)
    agree = collapse = 0
    while agree < 50 or collapse < 5:
        ch = random_channel(rng, sizes=(2, 2, 3, 2, 3))
        t = discrete_mi_table(ch, random_pair_input(rng, S1, O2, ch))
        v = nf_values_from_table(t)
        orig, simp = nf_rate_discrete(v)
        if v["I(O2;Ye)"] <= v["I(O2;Y1)"]:
            assert orig == pytest.approx(simp, abs=1e-12)
            agree += 1
        else:
            assert orig == pytest.approx(max(v["I(S1;Y1|O2)"] - v["I(S1;Ye|O2)"], 0), abs=1e-12)
            collapse += 1


@pytest.mark.parametrize("family", FAMILIES)
def test_every_sweep_schedule_is_valid(family):
    cfg = SweepConfig(family=family, **COARSE)
    items = list(family_schedules(FIG3, cfg))
    assert items and len({pid for pid, _ in items}) == len(items)
    for _, sch in items:
        assert validate_schedule(sch, FIG3).ok


def test_family_shapes():
    cfg = dict(COARSE)
    for pid, sch in family_schedules(FIG3, SweepConfig(family="G2-ncp", **cfg)):
        st = sch.states[0][1]
        assert st.Pj1 == st.Pj2 == st.Ps1 == st.Po1 == 0
    for pid, sch in family_schedules(FIG3, SweepConfig(family="G2-b-or-cp", **cfg)):
        st = sch.states[0][1]
        assert st.Pc1 * st.Pj1 == 0 and st.Pc2 * st.Pj2 == 0
    for pid, sch in family_schedules(FIG3, SweepConfig(family="G4-relay", **cfg)):
        st = sch.states[0][1]
        assert st.Pc1 == st.Po1 == st.Pc2 == st.Ps2 == 0
    assert max(len(s.states) for _, s in family_schedules(FIG3, SweepConfig(family="full-G", **cfg))) == 2


def test_sweep_results_are_feasible_points():
    cfg = SweepConfig(family="G2", **COARSE)
    from icesec import build_constraints, gaussian_mi_table, is_achievable
    for res in evaluate_family(FIG5, cfg):
        if res.frontier is None:
            continue
        poly = build_constraints(gaussian_mi_table(FIG5, res.schedule))
        for p in res.frontier:
            assert p.params_id == res.params_id
            assert is_achievable(poly, p.r1, p.r2)


@pytest.mark.parametrize("name", sorted(FIGURES))
def test_subfamilies_are_contained(name):
    ch = FIGURES[name]
    g2 = sweep_region(ch, SweepConfig(family="G2", **COARSE))
    for sub in ("G2-ncp", "G2-b-or-cp"):
        small = sweep_region(ch, SweepConfig(family=sub, **COARSE))
        assert all(g2.contains(*p, tol=1e-9) for p in small.pairs)


@pytest.mark.parametrize("name", sorted(FIGURES))
def test_ctdma_chain_is_contained(name):
    ch = FIGURES[name]
    cfg = SweepConfig(family="full-G", **COARSE)
    full = sweep_region(ch, cfg)
    ct = ctdma_region(ch, cfg)
    ncp = ctdma_region(ch, cfg, ncp=True)
    assert all(ct.contains(*p, tol=1e-9) for p in ncp.pairs)
    assert all(full.contains(*p, tol=1e-9) for p in ct.pairs)


def test_blind_eavesdropper_gives_capacity():
    ch = GaussianChannel(c12=1.9, c21=1.9, c1e=0, c2e=0, P1=10, P2=10)
    f = sweep_region(ch, SweepConfig(family="G2-ncp", **COARSE))
    assert f.r1_max == pytest.approx(gamma(10), abs=1e-9)


def test_sweep_parallel_matches_serial():
    cfg = SweepConfig(family="G2-b-or-cp", **COARSE)
    a = evaluate_family(FIG3, cfg, jobs=1, batch_size=7)
    b = evaluate_family(FIG3, cfg, jobs=2, batch_size=7)
    assert [r.params_id for r in a] == [r.params_id for r in b]
    assert [r.frontier for r in a] == [r.frontier for r in b]


def test_sweep_meta_counts():
    f = sweep_region(FIG4, SweepConfig(family="G2", **COARSE))
    assert f.meta["schedules"] == len(pair_fractions(3)) ** 2
    assert 0 < f.meta["infeasible"] < f.meta["schedules"]
