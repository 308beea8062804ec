import itertools
import json

import pytest

from tte.config import Caps, ResourceCapError
from tte.graph import (
    GraphError,
    Selection,
    brute_force_has_cycle,
    build,
    build_adjoint,
    build_moment,
    complement,
    count_cycles,
    enumerate_pairings,
    from_json,
    is_simple,
    n_pairings,
    pairing_from_ranks,
    pairing_ranks,
    select,
    to_dot,
    to_json,
)
from tte.perm import Permutation, full_cycle, identity, parse


def _all_s3_pairs():
    for a in itertools.permutations(range(1, 4)):
        for b in itertools.permutations(range(1, 4)):
            yield Permutation(3, a), Permutation(3, b)


def test_build_edges_and_open_slots():
    g = build([parse("1>2, 2>3", 3), full_cycle(3)], 3)
    assert g.k == 2
    assert g.n_rects == 3
    plain = [(e.src, e.dst, e.color) for e in g.edges]
    assert plain == [(0, 1, 0), (1, 2, 0), (0, 1, 1), (1, 2, 1), (2, 0, 1)]
    assert g.open_in == (frozenset({0}), frozenset(), frozenset())
    assert g.open_out == (frozenset(), frozenset(), frozenset({0}))
    assert g.n_open() == 1
    assert [g.rect_label(i) for i in range(3)] == ["A1", "A2", "A3"]


def test_build_rejects_bad_input():
    with pytest.raises(GraphError):
        build([], 3)
    with pytest.raises(GraphError):
        build([identity(2)], 3)
    with pytest.raises(GraphError):
        build([identity(1)], 0)


def test_backward_edges():
    g = build([full_cycle(3)], 3)
    flags = [g.is_backward(e) for e in g.edges]
    assert flags == [False, False, True]
    gi = build([identity(2)], 2)
    assert all(gi.is_backward(e) for e in gi.edges)


def test_adjoint_reverses_arcs_and_swaps_opens():
    legs = [parse("1>2, 2>3", 3)]
    g = build(legs, 3)
    ga = build_adjoint(legs, 3)
    assert [(e.src, e.dst) for e in ga.edges] == [(e.dst, e.src) for e in g.edges]
    assert ga.open_in == g.open_out
    assert ga.open_out == g.open_in
    assert [ga.rect_label(i) for i in range(3)] == ["A1*", "A2*", "A3*"]
    # the same generating arcs are backward on both sides
    assert [ga.is_backward(e) for e in ga.edges] == [g.is_backward(e) for e in g.edges]


def test_moment_ring_shape():
    legs = [parse("1>2, 2>3", 3), full_cycle(3), full_cycle(3)]
    g = build_moment(legs, 3, 2)
    assert g.n_blocks == 4
    assert g.n_rects == 12
    n_yellow = sum(1 for e in g.edges if e.yellow)
    assert n_yellow == 4 * 1
    assert g.n_open() == 0
    assert g.rect_label(0) == "A1@1"
    assert g.rect_label(3) == "A1*@1"
    assert g.rect_label(6) == "A1@2"
    boundaries = sorted({g.yellow_boundary(e) for e in g.edges if e.yellow})
    assert boundaries == [0, 1, 2, 3]
    with pytest.raises(GraphError):
        build_moment(legs, 3, 0)


def test_moment_ring_full_permutations_has_no_yellow():
    g = build_moment([full_cycle(3), full_cycle(3)], 3, 1)
    assert not any(e.yellow for e in g.edges)
    assert g.n_rects == 6


def test_pairing_rank_roundtrip():
    assert n_pairings(3, 2) == 36
    for ranks in itertools.product(range(6), repeat=2):
        pairing = pairing_from_ranks(3, ranks)
        assert pairing_ranks(3, pairing) == ranks
    with pytest.raises(GraphError):
        pairing_from_ranks(2, [5])
    with pytest.raises(GraphError):
        pairing_ranks(2, ((0, 0),))


def test_enumerate_pairings_order_and_ranges():
    g = build([identity(2), identity(2)], 2)
    seq = list(enumerate_pairings(g))
    assert len(seq) == 4
    assert seq[0] == ((0, 1), (0, 1))
    assert seq[-1] == ((1, 0), (1, 0))
    assert seq == list(enumerate_pairings(g, 0, 2)) + list(enumerate_pairings(g, 2, 4))
    with pytest.raises(GraphError):
        list(enumerate_pairings(g, 3, 2))


def test_count_cycles_one_leg():
    for images in itertools.permutations(range(1, 5)):
        s = Permutation(4, images)
        g = build([s], 4)
        report = count_cycles(g, ((0,),) * 4)
        assert report.n_cycles == s.n_cycles()
        assert report.open_paths == ()
        assert all(b >= 1 for b in report.backward_per_cycle)


def test_count_cycles_partial_has_paths():
    g = build([parse("1>2, 2>3", 3)], 3)
    report = count_cycles(g, ((0,),) * 3)
    assert report.n_cycles == 0
    assert len(report.open_paths) == 1
    path = report.open_paths[0]
    assert path[0] == (0, 0, 0)
    assert path[-1] == (2, 0, 1)


def test_count_cycles_two_leg_identity_pairing():
    s = full_cycle(3)
    g = build([s, s], 3)
    ident = ((0, 1),) * 3
    swap = ((1, 0),) * 3
    assert count_cycles(g, ident).n_cycles == 2
    assert count_cycles(g, swap).n_cycles == 1
    report = count_cycles(g, ident)
    assert report.backward_per_cycle == (1, 1)
    assert report.yellow_per_cycle == (0, 0)


def test_count_cycles_yellow_tallies():
    legs = [parse("1>2, 2>3", 3), full_cycle(3), full_cycle(3)]
    g = build_moment(legs, 3, 1)
    pairing = ((0, 1, 2),) * g.n_rects
    report = count_cycles(g, pairing)
    assert sum(report.yellow_per_cycle) == 2
    assert report.open_paths == ()


def test_count_cycles_rejects_bad_pairing():
    g = build([identity(2)], 2)
    with pytest.raises(GraphError):
        count_cycles(g, ((0,),))
    with pytest.raises(GraphError):
        count_cycles(g, ((1,), (0,)))


def test_selection_validation():
    g = build([full_cycle(3)], 3)
    sel = select(g, [0, 1], [0])
    assert sel.rects == (0, 1)
    with pytest.raises(GraphError):
        select(g, [0], [0])
    with pytest.raises(GraphError):
        select(g, [0, 0, 1], [0])
    with pytest.raises(GraphError):
        select(g, [0, 1], [9])
    comp = complement(g, sel)
    assert comp.rects == (2,)
    assert comp.edges == (1, 2)


def test_is_simple_basics():
    g = build([full_cycle(3)], 3)
    assert not is_simple(g)
    chain = select(g, [0, 1, 2], [0, 1])
    assert is_simple(g, chain)
    gi = build([identity(2)], 2)
    assert not is_simple(gi)
    loops_removed = select(gi, [0, 1], [])
    assert is_simple(gi, loops_removed)
    # a surviving loop edge alone closes a cycle
    one_loop = select(gi, [0], [0])
    assert not is_simple(gi, one_loop)


def test_empty_selection_is_simple():
    g = build([full_cycle(2)], 2)
    assert is_simple(g, Selection((), ()))


def _each_selection(g):
    rect_sets = [
        rs
        for size in range(g.n_rects + 1)
        for rs in itertools.combinations(range(g.n_rects), size)
    ]
    for rs in rect_sets:
        inner = [
            idx
            for idx, e in enumerate(g.edges)
            if e.src in rs and e.dst in rs
        ]
        for esize in range(len(inner) + 1):
            for es in itertools.combinations(inner, esize):
                yield Selection(rs, es)


def test_is_simple_matches_brute_force_exhaustively():
    legs_cases = [
        [identity(2), full_cycle(2)],
        [full_cycle(3), parse("(1 2)", 3)],
        [parse("1>2", 2), full_cycle(2)],
    ]
    for legs in legs_cases:
        g = build(legs, legs[0].m)
        for sel in _each_selection(g):
            assert is_simple(g, sel) == (not brute_force_has_cycle(g, sel))


def test_brute_force_cap():
    g = build([full_cycle(3), full_cycle(3), full_cycle(3)], 3)
    caps = Caps(max_brute_cycles=10)
    with pytest.raises(ResourceCapError):
        brute_force_has_cycle(g, caps=caps)


def test_dot_output_stable_and_annotated():
    g = build([parse("1>2, 2>3", 3), full_cycle(3)], 3)
    first = to_dot(g)
    assert first == to_dot(g)
    assert "digraph trace_word" in first
    assert "color=green" in first
    assert "color=red" in first
    assert "shape=point" in first
    witness = ((0, 1),) * 3
    with_blue = to_dot(g, witness)
    assert 'color=blue, style=dotted, label="1>1"' in with_blue


def test_dot_moment_ring_markers():
    legs = [parse("1>2", 2), full_cycle(2)]
    g = build_moment(legs, 2, 1)
    out = to_dot(g)
    assert 'label="y"' in out
    assert "A1*@1" in out


def test_json_roundtrip_word_adjoint_moment():
    legs = [parse("1>2, 2>3", 3), full_cycle(3)]
    for g in (build(legs, 3), build_adjoint(legs, 3), build_moment(legs, 3, 2)):
        h = from_json(to_json(g))
        assert h.k == g.k
        assert h.n_blocks == g.n_blocks
        assert h.rects == g.rects
        assert h.edges == g.edges
        assert h.open_in == g.open_in
        assert h.open_out == g.open_out
        assert to_json(h) == to_json(g)


def test_from_json_errors():
    g = build([full_cycle(2)], 2)
    good = json.loads(to_json(g))
    with pytest.raises(GraphError):
        from_json("{")
    bad = dict(good)
    del bad["edges"]
    with pytest.raises(GraphError):
        from_json(json.dumps(bad))
    bad = dict(good)
    bad["rects"] = ["A1", "B2"]
    with pytest.raises(GraphError):
        from_json(json.dumps(bad))
    bad = dict(good)
    bad["edges"] = [[1, 2, 1, "striped"]]
    with pytest.raises(GraphError):
        from_json(json.dumps(bad))
    bad = dict(good)
    bad["edges"] = good["edges"] + [[1, 9, 1, "plain"]]
    with pytest.raises(GraphError):
        from_json(json.dumps(bad))


def test_from_json_rejects_inconsistent_vertices():
    g = build([full_cycle(2)], 2)
    data = json.loads(to_json(g))
    data["open_in"] = [[1, 1]]
    with pytest.raises(GraphError):
        from_json(json.dumps(data))


def test_every_cycle_has_backward_or_yellow():
    for s1, s2 in _all_s3_pairs():
        g = build([s1, s2], 3)
        for pairing in enumerate_pairings(g):
            report = count_cycles(g, pairing)
            for nb, ny in zip(report.backward_per_cycle, report.yellow_per_cycle):
                assert nb + ny >= 1
