import itertools
import random

import pytest

from tte.config import Caps, ResourceCapError
from tte.extremal import (
    ExtremalError,
    backward_upper_bound,
    exponent_report,
    graph_backward_bound,
    m_exhaustive,
    m_local_search,
    moment_exponent,
    multi_backward_formula,
    simple_certificate,
)
from tte.graph import (
    build,
    build_moment,
    complement,
    is_simple,
    pairing_ranks,
)
from tte.perm import Permutation, full_cycle, identity, parse

S3 = [Permutation(3, images) for images in itertools.permutations(range(1, 4))]
S4 = [Permutation(4, images) for images in itertools.permutations(range(1, 5))]

SHOWCASE_LEGS = [parse("1>2, 2>3", 3), full_cycle(3), full_cycle(3)]

# spot maxima frozen from plain enumeration over every pairing
S3_SPOT_M = {
    ((2, 3, 1), (2, 3, 1)): 2,
    ((1, 2, 3), (1, 2, 3)): 6,
    ((2, 1, 3), (1, 3, 2)): 4,
    ((2, 3, 1), (3, 1, 2)): 3,
    ((3, 2, 1), (2, 3, 1)): 3,
}


def test_one_leg_matches_cycle_count():
    for s in S4:
        assert m_exhaustive(build([s], 4)).M == s.n_cycles()


def test_two_leg_spot_values():
    for (a, b), want in S3_SPOT_M.items():
        g = build([Permutation(3, a), Permutation(3, b)], 3)
        assert m_exhaustive(g).M == want


def test_pruned_equals_plain_enumeration_s3():
    for s1 in S3:
        for s2 in S3:
            g = build([s1, s2], 3)
            rp = m_exhaustive(g, prune=True)
            rn = m_exhaustive(g, prune=False)
            assert rp.M == rn.M
            assert rp.witness == rn.witness


def test_pruned_equals_plain_enumeration_s4_sample():
    rng = random.Random(11)
    for _ in range(25):
        g = build([rng.choice(S4), rng.choice(S4)], 4)
        rp = m_exhaustive(g, prune=True)
        rn = m_exhaustive(g, prune=False)
        assert (rp.M, rp.witness) == (rn.M, rn.witness)


def test_pruned_equals_plain_with_partial_legs():
    cases = [
        [parse("1>2, 2>3", 3), full_cycle(3)],
        [parse("-", 2), full_cycle(2)],
        SHOWCASE_LEGS,
    ]
    for legs in cases:
        g = build(legs, legs[0].m)
        rp = m_exhaustive(g, prune=True)
        rn = m_exhaustive(g, prune=False)
        assert (rp.M, rp.witness) == (rn.M, rn.witness)


def test_witness_attains_and_is_lex_smallest():
    g = build([parse("(1 2 3)(4)", 4), parse("(1 2 3 4)", 4)], 4)
    res = m_exhaustive(g)
    assert res.M == 3
    assert pairing_ranks(2, res.witness) == (0, 0, 0, 0)


def test_backward_bound_dominates():
    for s1 in S3:
        for s2 in S3:
            g = build([s1, s2], 3)
            res = m_exhaustive(g)
            assert res.M <= backward_upper_bound([s1, s2])
            assert res.M <= graph_backward_bound(g)
            assert res.upper_bound_backward == graph_backward_bound(g)


def test_m_is_conjugation_invariant():
    rng = random.Random(3)
    thetas = [Permutation(4, images) for images in itertools.permutations(range(1, 5))]
    for _ in range(10):
        s1, s2 = rng.choice(S4), rng.choice(S4)
        base = m_exhaustive(build([s1, s2], 4)).M
        theta = rng.choice(thetas)
        conj = m_exhaustive(build([s1.conjugate(theta), s2.conjugate(theta)], 4)).M
        assert conj == base


def test_backward_instance():
    s1 = parse("(1 6 4 2 5 3)", 6)
    s2 = parse("(1 2 3 4 5 6)", 6)
    assert backward_upper_bound([s1, s2]) == 5
    res = m_exhaustive(build([s1, s2], 6))
    assert res.M == 4
    assert pairing_ranks(2, res.witness) == (1, 0, 1, 0, 1, 1)


def test_showcase_word():
    res = m_exhaustive(build(SHOWCASE_LEGS, 3))
    assert res.M == 2
    assert pairing_ranks(3, res.witness) == (0, 0, 0)


def test_local_search_is_deterministic_lower_bound():
    for s1 in S3[:3]:
        g = build([s1, full_cycle(3)], 3)
        first = m_local_search(g, restarts=16, seed=0)
        second = m_local_search(g, restarts=16, seed=0)
        assert (first.M, first.witness) == (second.M, second.witness)
        assert first.method == "local_search"
        assert first.M <= m_exhaustive(g).M


def test_local_search_finds_optimum_on_small_graphs():
    for s1 in S3:
        for s2 in S3:
            g = build([s1, s2], 3)
            assert m_local_search(g, restarts=16, seed=0).M == m_exhaustive(g).M


def test_local_search_rejects_zero_restarts():
    g = build([identity(2)], 2)
    with pytest.raises(ExtremalError):
        m_local_search(g, restarts=0)


def test_certificate_on_full_permutations():
    for s1 in S3:
        for s2 in S3:
            g = build([s1, s2], 3)
            res = m_exhaustive(g)
            assert res.certificate is not None
            assert is_simple(g, res.certificate)
            assert len(res.removed_edges) == res.M
            assert complement(g, res.certificate).edges == res.removed_edges


def test_certificate_on_showcase_word_uses_backward_cut():
    g = build(SHOWCASE_LEGS, 3)
    res = m_exhaustive(g)
    assert res.certificate is not None
    assert len(res.removed_edges) == 2
    assert all(g.is_backward(g.edges[i]) for i in res.removed_edges)
    assert is_simple(g, res.certificate)


def test_certificate_absent_on_moment_ring():
    g = build_moment(SHOWCASE_LEGS, 3, 1)
    res = m_exhaustive(g)
    assert res.M == 5
    assert res.certificate is None
    assert res.removed_edges == ()


def test_certificate_rejects_wrong_cycle_count():
    g = build([full_cycle(3), full_cycle(3)], 3)
    witness = m_exhaustive(g).witness
    with pytest.raises(ExtremalError):
        simple_certificate(g, witness, _trusted_m=5)


def test_certificate_chain_and_loops():
    g = build([full_cycle(4)], 4)
    sel, removed = simple_certificate(g, ((0,),) * 4)
    assert len(removed) == 1
    assert is_simple(g, sel)
    gi = build([identity(3)], 3)
    sel, removed = simple_certificate(gi, ((0,),) * 3)
    assert len(removed) == 3
    assert is_simple(gi, sel)


def test_moment_exponent_formula_and_graph_agree():
    for p in (1, 2):
        direct = moment_exponent(SHOWCASE_LEGS, p)
        ring = m_exhaustive(build_moment(SHOWCASE_LEGS, 3, p)).M
        assert direct == ring
    assert moment_exponent(SHOWCASE_LEGS, 1) == 5
    assert moment_exponent(SHOWCASE_LEGS, 2) == 9


def test_moment_exponent_full_permutations():
    legs = [full_cycle(3), full_cycle(3)]
    for p in (1, 2):
        assert moment_exponent(legs, p) == m_exhaustive(build_moment(legs, 3, p)).M


def test_moment_ring_backward_bound():
    g = build_moment(SHOWCASE_LEGS, 3, 2)
    n_backward = sum(1 for e in g.edges if not e.yellow and g.is_backward(e))
    assert graph_backward_bound(g) == n_backward + 1
    assert m_exhaustive(g).M <= graph_backward_bound(g)


def test_multi_backward_formula():
    sigma = parse("1>3, 2>1, 3>2", 3)
    value, applicable = multi_backward_formula(sigma, 3)
    assert value == 4
    assert applicable
    value, applicable = multi_backward_formula(sigma, 2)
    assert value == 3
    assert applicable
    assert multi_backward_formula(identity(3), 2) == (4, True)
    with pytest.raises(ExtremalError):
        multi_backward_formula(sigma, 1)


def test_formula_not_applicable_below_threshold():
    # two disjoint backward intervals need k >= 3
    sigma = parse("(1 2)(3 4)", 5)
    value, applicable = multi_backward_formula(sigma, 2)
    assert value == sigma.backward_count() + 1
    assert applicable  # the two intervals merge into one set
    sigma2 = parse("(2 1)(4 3)(6 5)", 6)
    _, app2 = multi_backward_formula(sigma2, 2)
    assert app2


def test_formula_matches_exhaustive_where_applicable():
    for m in (2, 3):
        gamma = full_cycle(m)
        for sigma in (identity(m), gamma, parse("(1 2)", m)):
            for k in (2, 3):
                value, applicable = multi_backward_formula(sigma, k)
                if not applicable:
                    continue
                legs = [sigma] + [gamma] * (k - 1)
                assert m_exhaustive(build(legs, m)).M == value


def test_exponent_report_instance():
    sigma = parse("1>3, 2>1, 3>2", 3)
    rep = exponent_report([sigma, full_cycle(3)], [1, 2])
    assert rep.k == 3
    assert rep.result.M == 4
    assert pairing_ranks(3, rep.result.witness) == (2, 2, 2)
    assert rep.formula_value == 4
    assert rep.formula_applicable is True
    assert rep.backward_bound == sigma.backward_count() + 2


def test_exponent_report_methods():
    legs = [full_cycle(3), full_cycle(3)]
    exact = exponent_report(legs, method="exhaustive")
    local = exponent_report(legs, method="local", restarts=16)
    auto = exponent_report(legs, method="auto")
    assert exact.result.M == local.result.M == auto.result.M == 2
    assert auto.result.method == "exhaustive"
    with pytest.raises(ExtremalError):
        exponent_report(legs, method="guess")
    with pytest.raises(ExtremalError):
        exponent_report(legs, [1])
    with pytest.raises(ExtremalError):
        exponent_report(legs, [1, 0])


def test_exponent_report_auto_falls_back():
    caps = Caps(max_pairings=10)
    legs = [identity(3), full_cycle(3), full_cycle(3)]
    rep = exponent_report(legs, method="auto", caps=caps)
    assert rep.result.method == "closed_form"
    assert rep.result.M == 5
    mixed = [parse("(1 2)", 3), parse("(1 3)", 3), parse("(2 3)", 3)]
    rep2 = exponent_report(mixed, method="auto", caps=caps, restarts=8, seed=0)
    assert rep2.result.method == "local_search"
    assert rep2.result.M <= backward_upper_bound(mixed)


def test_exhaustive_cap_exceeded():
    caps = Caps(max_pairings=2)
    g = build([full_cycle(3), full_cycle(3)], 3)
    with pytest.raises(ResourceCapError):
        m_exhaustive(g, caps=caps, prune=False)
    with pytest.raises(ResourceCapError):
        m_exhaustive(g, caps=caps, prune=True)


def test_nodes_accounting():
    g = build([full_cycle(3), full_cycle(3)], 3)
    plain = m_exhaustive(g, prune=False)
    pruned = m_exhaustive(g, prune=True)
    assert plain.nodes == 8
    assert 0 < pruned.nodes <= plain.nodes
