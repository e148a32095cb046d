import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fibrand.groups import GeneratingSet
from fibrand.oracle import Dist
from fibrand.prodrepl import (ClassicPRSampler, ReplacementState, VariantPRSampler, default_k,
                              default_steps, pr_classic_move, pr_classic_sample, pr_fc_variant_run,
                              pr_variant_exact_law, pr_variant_move, slots_generate)
from fibrand.rng import RandomSource
from fibrand.stats import chi_square_test, classify, cycle_type_distribution
from fibrand.verify import group_table


def test_defaults():
    assert default_k(24) == 12 and default_steps(24) == 5
    assert default_k(60) == 14 and default_steps(60) == 6


def test_state_needs_two_slots():
    ng, _ = group_table("S3")
    with pytest.raises(ValueError):
        ReplacementState(ng.group, [ng.generators[0]])
    with pytest.raises(ValueError):
        ReplacementState.from_generators(ng.group, ng.generators, 1)
    st = ReplacementState.from_generators(ng.group, ng.generators, 5)
    assert st.slots == [ng.generators[i % 2] for i in range(5)]


def test_z2_literal_move():
    ng, _ = group_table("Z2")
    G, g = ng.group, ng.generators[0]
    st = ReplacementState(G, [g, g])
    pr_variant_move(st, 0)
    assert st.slots == [g, G.identity]
    assert st.unchosen() == [1]
    with pytest.raises(ValueError):
        pr_variant_move(st, 0)


def test_steps_must_leave_an_unchosen_slot():
    ng, _ = group_table("S3")
    with pytest.raises(ValueError):
        pr_fc_variant_run(ng.group, ng.generators, 4, 4, RandomSource(0))
    with pytest.raises(ValueError):
        VariantPRSampler(ng.group, ng.generators, 3, 3)
    with pytest.raises(ValueError):
        pr_fc_variant_run(ng.group, ng.generators, 4, 1, RandomSource(0), mode="sideways")


def test_zero_steps_return_an_initial_slot():
    ng, _ = group_table("S4")
    for seed in range(20):
        assert pr_fc_variant_run(ng.group, ng.generators, 6, 0, RandomSource(seed)) in list(ng.generators)


def test_classic_zero_burn_in_returns_initial_slot():
    ng, _ = group_table("S4")
    st = ReplacementState.from_generators(ng.group, ng.generators, 4)
    assert pr_classic_sample(st, 0, RandomSource(0)) in list(ng.generators)
    with pytest.raises(ValueError):
        pr_classic_sample(st, -1, RandomSource(0))


def test_classic_on_cyclic_stays_in_powers():
    ng, table = group_table("Z12")
    g = ng.generators[0]
    st = ReplacementState(ng.group, [g, g])
    src = RandomSource(0)
    for _ in range(100):
        pr_classic_move(st, src)
    H = table.generated_mask([table.idx(g)])
    assert all(H[table.idx(s)] for s in st.slots)


def test_classic_move_costs_one_multiply():
    ng, _ = group_table("S5")
    G = ng.group
    st = ReplacementState.from_generators(G, ng.generators, 6)
    before = G.counter.total
    pr_classic_sample(st, 50, RandomSource(1))
    assert G.counter.total - before == 50


@given(st.integers(0, 2 ** 32), st.sampled_from(["S4", "SL(2,3)", "A5"]), st.integers(0, 60))
@settings(max_examples=30)
def test_classic_moves_preserve_generation(seed, name, moves):
    ng, table = group_table(name)
    st = ReplacementState.from_generators(ng.group, ng.generators, 5)
    src = RandomSource(seed)
    for _ in range(moves):
        pr_classic_move(st, src)
    assert slots_generate(table, st).all()


@given(st.integers(0, 2 ** 32), st.sampled_from(["cube", "literal"]))
@settings(max_examples=30)
def test_variant_never_reuses_a_slot(seed, mode):
    ng, _ = group_table("S4")
    st = ReplacementState.from_generators(ng.group, ng.generators, 9)
    pr_fc_variant_run(ng.group, ng.generators, 9, 8, RandomSource(seed), state=st, mode=mode)
    assert len(st.history) == 8 == len(set(st.history))


def test_variant_literal_move_costs_k_minus_1():
    ng, _ = group_table("S5")
    G = ng.group
    st = ReplacementState.from_generators(G, ng.generators, 7)
    before = G.counter.total
    pr_variant_move(st, 3)
    assert G.counter.total - before == 6


def test_exact_variant_law_on_s3():
    ng, table = group_table("S3")
    cube = pr_variant_exact_law(table, ng.generators, 8, 6, mode="cube")
    assert cube.eps_uniform <= 0.5
    # frozen exact values
    assert cube.eps_uniform == pytest.approx(0.027990, abs=5e-6)
    assert cube.eps_semi == pytest.approx(0.021355, abs=5e-6)
    literal = pr_variant_exact_law(table, ng.generators, 8, 6, mode="literal")
    assert Fraction(literal.eps_uniform).limit_denominator(1000) == Fraction(17, 7)
    assert literal.support == 2


def test_exact_variant_law_matches_monte_carlo():
    ng, table = group_table("S3")
    law = pr_variant_exact_law(table, ng.generators, 5, 3)
    src = RandomSource(7)
    n = 20_000
    counts = np.zeros(6)
    for _ in range(n):
        counts[table.idx(pr_fc_variant_run(ng.group, ng.generators, 5, 3, src))] += 1
    assert np.abs(counts / n - law.p).max() < 0.015


def test_exact_law_zero_steps_is_the_slot_mix():
    ng, table = group_table("S3")
    law = pr_variant_exact_law(table, ng.generators, 4, 0)
    a, b = ng.generators
    assert law.prob(a) == pytest.approx(0.5) and law.prob(b) == pytest.approx(0.5)


def test_exact_law_state_cap():
    ng, table = group_table("S4")
    with pytest.raises(ValueError):
        pr_variant_exact_law(table, ng.generators, 8, 7, max_states=1000)


def _s4_chi(sampler, seed, n=10_000):
    src = RandomSource(seed, "sample")
    dist = cycle_type_distribution(4, "S")
    drawn = [sampler.sample(src) for _ in range(n)]
    return chi_square_test(classify(drawn, list(dist)), list(dist.values()), list(dist))


def test_classic_sampler_passes_chi_square_on_s4():
    ng, _ = group_table("S4")
    k = default_k(24)
    s = ClassicPRSampler(ng.group, ng.generators, k, 200, RandomSource(0, "pr"), gap=k)
    rep = _s4_chi(s, 0)
    assert rep.accepted, rep.to_dict()


def test_variant_sampler_with_enough_steps_passes_on_s4():
    ng, _ = group_table("S4")
    rep = _s4_chi(VariantPRSampler(ng.group, ng.generators, 16, 14), 1)
    assert rep.accepted, rep.to_dict()
