import random

import pytest

from troplift.divisors import (
    AdmissibleMultidegree,
    metric_to_subdivided,
    multidegree_to_divisor,
)
from troplift.graph_core import ChainStructure, Edge, Multigraph, contract, subdivide
from troplift.twisting import (
    TwistError,
    critical_indices,
    is_concentrated,
    is_tight,
    negative_twist,
    partial_twist,
    reduced_multidegree,
    relative_twist_divisor,
    tight_tuple,
    twist,
    twist_path,
    twisting_divisors,
)

from conftest import (
    genus_one_graph,
    random_admissible,
    random_connected_multigraph,
    random_multitree,
    three_edge_graph,
    three_edge_multidegree,
)


def test_twist_at_v_matches_example():
    g, chain = three_edge_graph()
    wt = twist(three_edge_multidegree(), g, chain, "v")
    assert wt == AdmissibleMultidegree({"v": 2, "vp": 1}, {"e1": 2, "e3": 1})


def test_twist_at_all_vertices_is_identity():
    g, chain = three_edge_graph()
    w = three_edge_multidegree()
    assert twist_path(w, g, chain, ["v", "vp"]) == w
    assert twist_path(w, g, chain, ["vp", "v"]) == w


def test_negative_twist_inverts():
    g, chain = three_edge_graph()
    w = three_edge_multidegree()
    assert negative_twist(twist(w, g, chain, "v"), g, chain, "v") == w
    assert twist(negative_twist(w, g, chain, "vp"), g, chain, "vp") == w


def test_twists_commute():
    rng = random.Random(3)
    for _ in range(25):
        g, chain = random_connected_multigraph(rng)
        w = random_admissible(rng, g, chain, rng.randint(-1, 5))
        u, v = rng.sample(list(g.vertices), 2)
        a = twist(twist(w, g, chain, u), g, chain, v)
        b = twist(twist(w, g, chain, v), g, chain, u)
        assert a == b


def test_partial_twist_two_vertex_equals_twist():
    g, chain = three_edge_graph()
    tree = contract(g)
    w = three_edge_multidegree()
    assert partial_twist(w, g, chain, tree, "v~vp", "v") == twist(w, g, chain, "v")


def test_partial_twist_three_times_reaches_other_member():
    g, chain = three_edge_graph()
    sub = subdivide(g, chain)
    tree = contract(g)
    tup = tight_tuple(three_edge_multidegree(), g, chain, sub, tree)
    w = tup.member("v")
    for _ in range(3):
        w = partial_twist(w, g, chain, tree, "v~vp", "v")
    assert w == tup.member("vp")
    assert tup.b_at("v~vp") == 3


def test_partial_twist_inverse_pair():
    rng = random.Random(9)
    for _ in range(20):
        g, chain = random_multitree(rng)
        tree = contract(g)
        e = rng.choice(tree.graph.edges)
        w = random_admissible(rng, g, chain, rng.randint(0, 5))
        out = partial_twist(w, g, chain, tree, e.id, e.tail)
        out = partial_twist(out, g, chain, tree, e.id, e.head)
        assert out == w


def test_partial_twist_requires_multitree():
    g = Multigraph(
        ["a", "b", "c"],
        [Edge("e1", "a", "b"), Edge("e2", "b", "c"), Edge("e3", "a", "c")],
    )
    chain = ChainStructure({"e1": 1, "e2": 1, "e3": 1})
    tree = contract(g)
    w = AdmissibleMultidegree({"a": 1}, {})
    with pytest.raises(TwistError, match="multitree"):
        partial_twist(w, g, chain, tree, "a~b", "a")


def test_concentrated_examples():
    g, chain = three_edge_graph()
    w = three_edge_multidegree()
    ok, order = is_concentrated(w, g, chain, "v")
    assert ok and order[0] == "v"
    # the two-vertex criterion: negative at vp after twisting at (e, vp)
    sub = subdivide(g, chain)
    tree = contract(g)
    shifted = partial_twist(w, g, chain, tree, "v~vp", "vp")
    assert shifted.w_at("vp") < 0
    # not concentrated on vp: the chips sit at v
    ok_vp, _ = is_concentrated(w, g, chain, "vp")
    assert not ok_vp


def test_reduced_multidegree_idempotent_and_concentrated():
    rng = random.Random(17)
    for _ in range(15):
        g, chain = random_multitree(rng)
        sub = subdivide(g, chain)
        w0 = random_admissible(rng, g, chain, rng.randint(0, 5))
        v = rng.choice(list(g.vertices))
        red = reduced_multidegree(w0, g, chain, sub, v)
        assert reduced_multidegree(red, g, chain, sub, v) == red
        ok, _ = is_concentrated(red, g, chain, v)
        assert ok
        assert red.effective_off(v)


def test_reduced_multidegree_genus_one():
    g, chain = genus_one_graph()
    sub = subdivide(g, chain)
    w0 = AdmissibleMultidegree({"v": 2}, {})
    assert reduced_multidegree(w0, g, chain, sub, "v") == w0
    assert reduced_multidegree(w0, g, chain, sub, "vp") == AdmissibleMultidegree(
        {"vp": 1}, {"e1": 1}
    )


def test_tight_tuple_genus_one():
    g, chain = genus_one_graph()
    sub = subdivide(g, chain)
    tup = tight_tuple(AdmissibleMultidegree({"v": 2}, {}), g, chain, sub)
    assert tup.b_at("v~vp") == 1
    assert is_tight(tup, g, chain)


def test_tight_tuple_single_vertex():
    g = Multigraph(["only"], [])
    chain = ChainStructure({})
    sub = subdivide(g, chain)
    tup = tight_tuple(AdmissibleMultidegree({"only": 3}, {}), g, chain, sub)
    assert tup.b == {}
    assert tup.member("only").w_at("only") == 3
    assert is_tight(tup, g, chain)


def test_tight_tuple_members_pass_is_tight_randomly():
    rng = random.Random(29)
    for _ in range(10):
        g, chain = random_multitree(rng, max_vertices=3)
        sub = subdivide(g, chain)
        w0 = random_admissible(rng, g, chain, rng.randint(0, 5), lowest=0)
        tup = tight_tuple(w0, g, chain, sub)
        assert is_tight(tup, g, chain)


def test_tight_tuple_rejects_negative_twist_counts():
    # a degree-zero class with no effective representative: its reduced
    # members are linked by a negative count, which is not a tight tuple
    g = Multigraph(
        ["v0", "v1", "v2"],
        [Edge("e0", "v0", "v1"), Edge("e1", "v0", "v2"),
         Edge("e2", "v0", "v2"), Edge("e3", "v0", "v2")],
    )
    chain = ChainStructure({"e0": 1, "e1": 2, "e2": 3, "e3": 4})
    sub = subdivide(g, chain)
    w0 = AdmissibleMultidegree({"v2": -1}, {"e1": 1})
    with pytest.raises(TwistError, match="negative twist count"):
        tight_tuple(w0, g, chain, sub)


def test_twisting_divisor_sequence_example():
    g, chain = three_edge_graph()
    tree = contract(g)
    seq = twisting_divisors(three_edge_multidegree(), g, chain, tree, "e1", "v", 4)
    assert [dict(d) for d in seq.divisors] == [
        {},
        {"e3": 1},
        {"e2": 1, "e3": 1},
        {"e2": 1, "e3": 1},
        {"e1": 1, "e2": 2, "e3": 2},
    ]
    assert critical_indices(seq) == {0, 1, 3}


def test_twisting_divisor_sequences_genus_one():
    g, chain = genus_one_graph()
    sub = subdivide(g, chain)
    tree = contract(g)
    tup = tight_tuple(AdmissibleMultidegree({"v": 2}, {}), g, chain, sub)
    seq_v = twisting_divisors(tup.member("v"), g, chain, tree, "e1", "v", 3)
    assert [dict(d) for d in seq_v.divisors] == [
        {},
        {"e1": 1, "e2": 1},
        {"e1": 1, "e2": 2},
        {"e1": 2, "e2": 3},
    ]
    seq_vp = twisting_divisors(tup.member("vp"), g, chain, tree, "e1", "vp", 3)
    assert [dict(d) for d in seq_vp.divisors] == [
        {},
        {"e2": 1},
        {"e1": 1, "e2": 2},
        {"e1": 1, "e2": 3},
    ]
    assert critical_indices(seq_v) == {0, 1, 2}


def test_critical_indices_constant_zero():
    g, chain = three_edge_graph()
    tree = contract(g)
    # residues arranged so the first twist moves nothing
    w = AdmissibleMultidegree({"v": 1}, {"e1": 2, "e2": 1, "e3": 1})
    seq = twisting_divisors(w, g, chain, tree, "e1", "v", 1)
    assert seq.divisors == ({}, {})
    assert critical_indices(seq) == set()


def test_relative_twist_divisor_genus_one():
    g, chain = genus_one_graph()
    sub = subdivide(g, chain)
    w0 = AdmissibleMultidegree({"v": 2}, {})
    tup = tight_tuple(w0, g, chain, sub)
    assert relative_twist_divisor(w0, tup.member("v"), g, chain, sub, "v") == {}
    assert relative_twist_divisor(w0, tup.member("vp"), g, chain, sub, "vp") == {"e2": 1}
    assert relative_twist_divisor(w0, w0, g, chain, sub, "vp") == {}


def test_relative_twist_divisor_additive():
    rng = random.Random(41)
    for _ in range(10):
        g, chain = random_multitree(rng, max_vertices=3)
        sub = subdivide(g, chain)
        w = random_admissible(rng, g, chain, rng.randint(0, 4))
        mid = twist(w, g, chain, rng.choice(list(g.vertices)))
        far = twist(mid, g, chain, rng.choice(list(g.vertices)))
        for v in g.vertices:
            a = relative_twist_divisor(w, mid, g, chain, sub, v)
            b = relative_twist_divisor(mid, far, g, chain, sub, v)
            c = relative_twist_divisor(w, far, g, chain, sub, v)
            combined = dict(a)
            for e, k in b.items():
                combined[e] = combined.get(e, 0) + k
            combined = {e: k for e, k in combined.items() if k}
            assert combined == c


def test_relative_twist_divisor_rejects_unrelated():
    g, chain = genus_one_graph()
    sub = subdivide(g, chain)
    w0 = AdmissibleMultidegree({"v": 2}, {})
    other = AdmissibleMultidegree({"v": 1, "vp": 1}, {})
    with pytest.raises(TwistError, match="classes differ"):
        relative_twist_divisor(w0, other, g, chain, sub, "v")


def test_degree_symmetry_and_critical_mirror():
    rng = random.Random(43)
    for _ in range(20):
        g, chain = random_multitree(rng, max_vertices=3)
        sub = subdivide(g, chain)
        tree = contract(g)
        w0 = random_admissible(rng, g, chain, rng.randint(0, 5), lowest=0)
        tup = tight_tuple(w0, g, chain, sub)
        for e in tree.graph.edges:
            b = tup.b_at(e.id)
            seq_v = twisting_divisors(tup.member(e.tail), g, chain, tree, e.id, e.tail, b + 1)
            seq_vp = twisting_divisors(tup.member(e.head), g, chain, tree, e.id, e.head, b + 1)
            for i in range(b + 1):
                inc_v = seq_v.increment(i)
                inc_vp = seq_vp.increment(b - i)
                assert set(inc_v) == set(inc_vp)
                assert sum(inc_v.values()) == sum(inc_vp.values())
