import random
from fractions import Fraction as F

import pytest

from troplift.divisors import AdmissibleMultidegree, MetricDivisor
from troplift.graph_core import subdivide
from troplift.limit_series import (
    MetrizedComplexSeries,
    PreLimitSeries,
    SeriesError,
    achievable_patterns,
    check_condition_I,
    check_mc_weak_glueing,
    check_weak_glueing,
    extended_sequence,
    forgetful_map,
    inverse_forgetful,
    mc_equivalent,
    multivanishing,
    normalize_mc,
    orbit_pattern,
    series_equivalent,
)
from troplift.p1_algebra import (
    FunctionSpace,
    MarkedComponent,
    PointDivisor,
    parse_function,
)
from troplift.twisting import TightTuple, is_tight, tight_tuple

from conftest import genus_one_graph, genus_one_series


def fr(rows):
    return [[F(x) for x in row] for row in rows]


def test_multivanishing_example(nonsmoothable):
    g, chain, sub, w0, tup, series = nonsmoothable
    for v, expected in (("v", (0, 2)), ("vp", (0, 1))):
        d_v = tup.member(v).w_at(v)
        seq = extended_sequence(series, "v~vp", v, min_top=2, degree_bound=d_v)
        got = multivanishing(series.spaces[v], seq, d_v, series.components[v])
        assert got == expected


def test_multivanishing_single_point_generic():
    # a pencil with no forced vanishing against a single-point increment:
    # the value 0 appears once (the generic section), the next section
    # vanishes one step deeper
    g, chain, sub, w0, tup, series = genus_one_series()
    comp = MarkedComponent("z", {"e": F(0)})
    V = FunctionSpace(
        (parse_function("1"), parse_function("(x-3)/(x-5)")), PointDivisor({F(5): 1})
    )
    from troplift.twisting import TwistingDivisorSeq

    seq = TwistingDivisorSeq("e~z", "z", ({}, {"e": 1}, {"e": 2}))
    a = multivanishing(V, seq, 1, comp)
    assert a == (0, 0) or a[0] == 0
    assert a[0] == 0 and len(a) == 2


def test_multivanishing_requires_terminal_excess(nonsmoothable):
    g, chain, sub, w0, tup, series = nonsmoothable
    from troplift.twisting import TwistingDivisorSeq

    short = TwistingDivisorSeq("v~vp", "v", ({}, {"e1": 1, "e2": 1}))
    with pytest.raises(SeriesError, match="extended"):
        multivanishing(series.spaces["v"], short, 2, series.components["v"])


def test_condition_I_example(nonsmoothable):
    _, _, _, _, _, series = nonsmoothable
    ok, report = check_condition_I(series)
    assert ok
    assert report["v~vp"]["a"] == {"v": [0, 2], "vp": [0, 1]}
    assert report["v~vp"]["b"] == 1


def test_condition_I_broken_variant(nonsmoothable):
    g, chain, sub, w0, tup, _ = nonsmoothable
    comp_v = MarkedComponent("v", {"e1": F(0), "e2": F(1)}, {"R": F(2)})
    comp_vp = MarkedComponent("vp", {"e1": F(0), "e2": F(1)}, {"Rp": F(2)})
    # replace f1 by a section with no marked vanishing at all: the space
    # admits no section vanishing at both P and Q, breaking the dual bound
    V_v = FunctionSpace(
        (parse_function("x/(x-2)"), parse_function("(x-3)*(x-5)/(x-2)^2")),
        PointDivisor({F(2): 2}),
    )
    V_vp = FunctionSpace(
        (parse_function("(x-2)/(x-1)"), parse_function("1")),
        PointDivisor({F(1): 1}),
    )
    series = PreLimitSeries(
        g, chain, tup, {"v": comp_v, "vp": comp_vp}, {"v": V_v, "vp": V_vp}, rank=1, sub=sub
    )
    ok, report = check_condition_I(series)
    assert not ok
    assert report["v~vp"]["violations"]


def test_condition_I_rank_zero_constant():
    from troplift.graph_core import ChainStructure, Edge, Multigraph

    g = Multigraph(["a", "b"], [Edge("e", "a", "b")])
    chain = ChainStructure({"e": 1})
    sub = subdivide(g, chain)
    w0 = AdmissibleMultidegree({"a": 0}, {})
    tup = tight_tuple(w0, g, chain, sub)
    comps = {
        "a": MarkedComponent("a", {"e": F(0)}),
        "b": MarkedComponent("b", {"e": F(0)}),
    }
    spaces = {
        "a": FunctionSpace((parse_function("1"),), PointDivisor({})),
        "b": FunctionSpace((parse_function("1"),), PointDivisor({})),
    }
    series = PreLimitSeries(g, chain, tup, comps, spaces, rank=0, sub=sub)
    ok, _ = check_condition_I(series)
    assert ok
    assert check_weak_glueing(series).passed


def test_orbit_pattern_whole_space():
    U = fr([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    pats = orbit_pattern(U)
    assert pats == {
        frozenset(s)
        for s in ([0], [1], [2], [0, 1], [0, 2], [1, 2], [0, 1, 2])
    }


def test_orbit_pattern_coordinate_line():
    assert orbit_pattern(fr([[0, 5]])) == {frozenset({1})}
    assert orbit_pattern(fr([[3, 7]])) == {frozenset({0, 1})}
    assert orbit_pattern([]) == set()


def test_orbit_pattern_plane_in_three_space():
    # span((1,1,0),(0,0,1)): no vector has support exactly {0} or {1}
    pats = orbit_pattern(fr([[1, 1, 0], [0, 0, 1]]))
    assert frozenset({0}) not in pats and frozenset({1}) not in pats
    assert frozenset({2}) in pats
    assert frozenset({0, 1}) in pats
    assert frozenset({0, 1, 2}) in pats


def test_orbit_pattern_monotone_under_inclusion():
    rng = random.Random(3)
    for _ in range(20):
        rows = fr([[rng.randint(-3, 3) for _ in range(3)] for _ in range(2)])
        sub_pats = orbit_pattern(rows[:1], width=3)
        full_pats = orbit_pattern(rows, width=3)
        if any(any(x != 0 for x in r) for r in rows[:1]):
            assert sub_pats <= full_pats


def test_achievable_patterns_exact_cases():
    U = fr([[1, 0], [0, 1]])
    # g = dim: only the full pattern
    assert achievable_patterns(U, 2, 2) == {frozenset(orbit_pattern(U))}
    # g = 1: one pattern set per achievable support
    singles = achievable_patterns(U, 1, 2)
    assert frozenset({frozenset({0})}) in singles
    assert frozenset({frozenset({0, 1})}) in singles
    # g = 2 inside u = 3: sampled enumeration finds the generic and special planes
    U3 = fr([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    pats = achievable_patterns(U3, 2, 3)
    assert frozenset(
        {frozenset({0, 1}), frozenset({0, 2}), frozenset({1, 2}), frozenset({0, 1, 2})}
    ) in pats  # a generic plane
    assert any(frozenset({0}) in p for p in pats)  # planes containing e_0


def test_weak_glueing_example_fails_at_zero(nonsmoothable):
    _, _, _, _, _, series = nonsmoothable
    report = check_weak_glueing(series)
    assert not report.passed
    assert [(s.gbar_edge, s.j) for s in report.failures()] == [("v~vp", 0)]
    strata = {s.j: s for s in report.strata}
    assert strata[1].ok and strata[1].trivial  # g_1 equals the increment degree
    data = report.to_json()
    assert data["passed"] is False


def test_weak_glueing_passes_on_matching_series(nonsmoothable):
    g, chain, sub, w0, tup, _ = nonsmoothable
    comp_v = MarkedComponent("v", {"e1": F(0), "e2": F(1)}, {"R": F(2)})
    comp_vp = MarkedComponent("vp", {"e1": F(0), "e2": F(1)}, {"Rp": F(2)})
    # mirror the vanishing: on the v side one section vanishes at both
    # marked points and the other at neither
    V_v = FunctionSpace(
        (parse_function("(x-3)/(x-2)"), parse_function("x*(x-1)/(x-2)^2")),
        PointDivisor({F(2): 2}),
    )
    V_vp = FunctionSpace(
        (parse_function("(x-2)/(x-1)"), parse_function("1")),
        PointDivisor({F(1): 1}),
    )
    series = PreLimitSeries(
        g, chain, tup, {"v": comp_v, "vp": comp_vp}, {"v": V_v, "vp": V_vp}, rank=1, sub=sub
    )
    ok, _ = check_condition_I(series)
    assert ok
    report = check_weak_glueing(series)
    assert report.passed


def test_forgetful_map_matches_paper_representative(nonsmoothable):
    g, chain, sub, w0, tup, series = nonsmoothable
    mc = forgetful_map(series, w0)
    comp_v = series.components["v"]
    comp_vp = series.components["vp"]
    paper = MetrizedComplexSeries(
        g, chain, {"v": comp_v, "vp": comp_vp},
        MetricDivisor({"v": 2}),
        {"v": PointDivisor({F(2): 2}), "vp": PointDivisor({})},
        {
            "v": (parse_function("x/(x-2)"), parse_function("x*(x-1)/(x-2)^2")),
            "vp": (parse_function("(x-2)/(x-1)"), parse_function("1")),
        },
    )
    assert mc_equivalent(mc, paper)
    assert not check_mc_weak_glueing(mc)
    assert not check_mc_weak_glueing(paper)


def test_forgetful_independent_of_section_choice(nonsmoothable):
    g, chain, sub, w0, tup, series = nonsmoothable
    swapped_spaces = {
        v: FunctionSpace(tuple(reversed(sp.basis)), sp.divisor)
        for v, sp in series.spaces.items()
    }
    series2 = PreLimitSeries(
        g, chain, tup, dict(series.components), swapped_spaces, rank=1, sub=sub
    )
    assert mc_equivalent(forgetful_map(series, w0), forgetful_map(series2, w0))


def test_inverse_forgetful_reconstructs_bundles(nonsmoothable):
    g, chain, sub, w0, tup, series = nonsmoothable
    paper = MetrizedComplexSeries(
        g, chain, dict(series.components),
        MetricDivisor({"v": 2}),
        {"v": PointDivisor({F(2): 2}), "vp": PointDivisor({})},
        {v: sp.basis for v, sp in series.spaces.items()},
    )
    back = inverse_forgetful(paper, tup)
    assert back.spaces["v"].divisor == PointDivisor({F(2): 2})
    assert back.spaces["vp"].divisor == PointDivisor({F(1): 1})
    assert series_equivalent(back, series)


def test_roundtrips(nonsmoothable):
    g, chain, sub, w0, tup, series = nonsmoothable
    mc = forgetful_map(series, w0)
    back = inverse_forgetful(mc, tup)
    assert series_equivalent(series, back)
    assert mc_equivalent(mc, forgetful_map(back, w0))
    # a different representative multidegree gives an equivalent complex
    other_w = tup.member("vp")
    assert mc_equivalent(mc, forgetful_map(series, other_w))


def test_inverse_forgetful_rejects_bad_input(nonsmoothable):
    g, chain, sub, w0, tup, series = nonsmoothable
    bad_gamma = MetricDivisor({}, (("e1", F(1), 2),))  # not edge-reduced
    with pytest.raises(SeriesError, match="admissible"):
        inverse_forgetful(
            MetrizedComplexSeries(
                g, chain, dict(series.components), bad_gamma,
                {"v": PointDivisor({}), "vp": PointDivisor({})},
                {v: sp.basis for v, sp in series.spaces.items()},
            ),
            tup,
        )
    bad_fns = {
        "v": (parse_function("1/(x-7)"), parse_function("1")),
        "vp": (parse_function("1"), parse_function("x")),
    }
    with pytest.raises(SeriesError, match="sections"):
        inverse_forgetful(
            MetrizedComplexSeries(
                g, chain, dict(series.components),
                MetricDivisor({"v": 2}),
                {"v": PointDivisor({F(2): 2}), "vp": PointDivisor({})},
                bad_fns,
            ),
            tup,
        )


def test_mc_parts_degree_validated(nonsmoothable):
    g, chain, sub, w0, tup, series = nonsmoothable
    with pytest.raises(SeriesError, match="degree"):
        MetrizedComplexSeries(
            g, chain, dict(series.components),
            MetricDivisor({"v": 2}),
            {"v": PointDivisor({F(2): 1}), "vp": PointDivisor({})},
            {v: sp.basis for v, sp in series.spaces.items()},
        )


def test_glueing_verdict_tuple_invariance(nonsmoothable):
    g, chain, sub, w0, tup, series = nonsmoothable
    from troplift.twisting import partial_twist
    from troplift.graph_core import contract

    tree = contract(g)
    # an alternative tight tuple: push the v-member one extra twist away
    w_v_alt = partial_twist(tup.member("v"), g, chain, tree, "v~vp", "vp")
    alt = TightTuple({"v": w_v_alt, "vp": tup.member("vp")}, {"v~vp": 2})
    assert is_tight(alt, g, chain)
    mc = forgetful_map(series, w0)
    assert check_mc_weak_glueing(mc, tup) == check_mc_weak_glueing(mc, alt) == False


def test_normalize_mc_reduces_gamma(nonsmoothable):
    g, chain, sub, w0, tup, series = nonsmoothable
    mc = forgetful_map(series, tup.member("vp"))
    norm = normalize_mc(mc)
    assert norm.gamma == MetricDivisor({"v": 2})  # reduced at the lex-least vertex
    assert mc_equivalent(mc, norm)
