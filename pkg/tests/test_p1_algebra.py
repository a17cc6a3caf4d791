import random
from fractions import Fraction as F

import pytest

from troplift.p1_algebra import (
    INF,
    ConstantPool,
    FunctionError,
    FunctionSpace,
    GenericityError,
    MarkedComponent,
    PointDivisor,
    RationalFunction,
    SectionError,
    construct_function,
    distinct_values_at,
    div0,
    divisor_of,
    format_function,
    format_point,
    leading_coeff_map,
    nonconstant,
    parse_function,
    parse_point,
    same_span,
    subspace_with_vanishing,
)


def pdiv(d):
    return PointDivisor({F(k) if k != "inf" else INF: v for k, v in d.items()})


def test_ord_at_and_infinity():
    f = parse_function("x*(x-1)/(x-2)^2")
    assert f.ord_at(F(0)) == 1
    assert f.ord_at(F(1)) == 1
    assert f.ord_at(F(2)) == -2
    assert f.ord_at(INF) == 0
    assert parse_function("x^3").ord_at(INF) == -3
    assert parse_function("1/x").ord_at(INF) == 1


def test_divisor_of_degree_zero():
    f = parse_function("(x-1)*(x-3)/(x-5)")
    D = divisor_of(f)
    assert D.degree() == 0
    assert D.get(F(1)) == 1 and D.get(F(3)) == 1 and D.get(F(5)) == -1
    assert D.get(INF) == -1


def test_divisor_of_rejects_irrational_support():
    with pytest.raises(FunctionError, match="rational"):
        divisor_of(parse_function("x^2 - 2"))


def test_div0_examples():
    # div(f0) = P - R against O(2R): the effective form is P + R
    f0 = parse_function("x/(x-2)")
    assert div0(f0, pdiv({"2": 2})) == pdiv({"0": 1, "2": 1})
    # a constant against an effective divisor keeps the divisor
    assert div0(parse_function("5"), pdiv({"1": 2})) == pdiv({"1": 2})
    # div(f1') = 0 against O(Q'): the marked part is exactly Q'
    assert div0(parse_function("1"), pdiv({"1": 1})) == pdiv({"1": 1})


def test_div0_rejects_non_sections():
    with pytest.raises(SectionError):
        div0(parse_function("1/(x-7)"), pdiv({"2": 1}))


def test_function_space_checks_sections_and_independence():
    D = pdiv({"2": 2})
    with pytest.raises(SectionError):
        FunctionSpace((parse_function("1/(x-1)"),), D)
    f = parse_function("x/(x-2)")
    with pytest.raises(FunctionError, match="dependent"):
        FunctionSpace((f, f.scale(F(3))), D)


def test_subspace_with_vanishing_trivial_and_example():
    f0 = parse_function("x/(x-2)")
    f1 = parse_function("x*(x-1)/(x-2)^2")
    V = FunctionSpace((f0, f1), pdiv({"2": 2}))
    assert subspace_with_vanishing(V, PointDivisor({})).dim == 2
    W = subspace_with_vanishing(V, pdiv({"0": 1, "1": 1}))
    assert W.dim == 1 and same_span(W.basis, [f1])
    assert subspace_with_vanishing(V, pdiv({"0": 1, "1": 2})).dim == 0


def test_subspace_with_vanishing_monotone():
    rng = random.Random(13)
    f0 = parse_function("(x-3)*(x-4)/(x-1)^2")
    f1 = parse_function("(x-5)/(x-1)")
    f2 = parse_function("1")
    V = FunctionSpace((f0, f1, f2), pdiv({"1": 2}))
    small = pdiv({"3": 1})
    large = pdiv({"3": 1, "4": 1})
    Ws = subspace_with_vanishing(V, small)
    Wl = subspace_with_vanishing(V, large)
    assert Wl.dim <= Ws.dim <= V.dim
    assert Ws.dim - Wl.dim <= large.sub(small).degree()
    for f in Wl.basis:
        assert div0(f, V.divisor).geq(large)


def test_leading_coeff_map_and_kernel():
    f0 = parse_function("x/(x-2)")
    f1 = parse_function("x*(x-1)/(x-2)^2")
    V = FunctionSpace((f0, f1), pdiv({"2": 2}))
    rows = leading_coeff_map(V, PointDivisor({}), [F(0), F(1)])
    # every section vanishes at P = 0: the first column is zero
    assert all(row[0] == 0 for row in rows)
    assert any(row[1] != 0 for row in rows)
    # kernel of the map at D_j equals the deeper subspace
    W = subspace_with_vanishing(V, pdiv({"0": 1, "1": 1}))
    from troplift import linalg

    kernel = linalg.nullspace(
        [[rows[i][j] for i in range(2)] for j in range(2)], ncols=2
    )
    spanned = [V.element(vec) for vec in kernel]
    assert same_span(spanned, list(W.basis))


def test_leading_coeff_map_nonvanishing_section():
    f1p = parse_function("1")
    V = FunctionSpace((f1p,), pdiv({"1": 1}))
    rows = leading_coeff_map(V, pdiv({"1": 1}), [F(0), F(1)])
    assert rows[0][0] != 0 and rows[0][1] != 0


def test_construct_function_trivial_and_forced():
    assert construct_function({}) == parse_function("1")
    g = construct_function({F(0): 1, F(1): -1})
    assert g.ord_at(F(0)) == 1 and g.ord_at(F(1)) == -1


def test_construct_function_prescribed_orders():
    f = construct_function({F(0): 1, F(1): 1, F(2): -2})
    assert f.ord_at(F(0)) == 1
    assert f.ord_at(F(1)) == 1
    assert f.ord_at(F(2)) == -2
    assert divisor_of(f, known=[F(0), F(1), F(2)]).degree() == 0


def test_construct_function_balances_at_infinity():
    f = construct_function({F(0): 2, INF: 0})
    assert f.ord_at(F(0)) == 2 and f.ord_at(INF) == 0


def test_construct_function_predicates():
    pts = [F(0), F(1), F(4)]
    f = construct_function(
        {p: 0 for p in pts} | {INF: 0},
        predicates=[nonconstant(), distinct_values_at(pts)],
    )
    vals = [f.value_at(p) for p in pts]
    assert len(set(vals)) == 3 and not f.is_constant()


def test_construct_function_unsatisfiable():
    with pytest.raises(GenericityError):
        construct_function({}, predicates=[lambda f: False], max_attempts=8)


def test_construct_function_rejects_too_many_points():
    with pytest.raises(FunctionError, match="8"):
        construct_function({F(i): 0 for i in range(9)})


def test_constant_pool_deterministic_and_avoiding(monkeypatch):
    monkeypatch.delenv("TROPLIFT_SEED_POOL", raising=False)
    pool = ConstantPool(avoid=[F(2), F(5)])
    assert [pool.draw() for _ in range(4)] == [F(3), F(7), F(11), F(13)]
    pool2 = ConstantPool(avoid=[F(2), F(5)])
    assert [pool2.draw() for _ in range(4)] == [F(3), F(7), F(11), F(13)]


def test_constant_pool_env_override(monkeypatch):
    monkeypatch.setenv("TROPLIFT_SEED_POOL", "17, 19")
    pool = ConstantPool()
    assert [pool.draw() for _ in range(3)] == [F(17), F(19), F(2)]


def test_marked_component_distinctness():
    with pytest.raises(FunctionError, match="distinct"):
        MarkedComponent("v", {"e1": F(0), "e2": F(0)})
    comp = MarkedComponent("v", {"e1": F(0)}, {"R": INF})
    assert comp.point("e1") == F(0)
    with pytest.raises(FunctionError):
        comp.point("missing")


def test_parse_format_roundtrip():
    for text in ("x", "1", "-3/2", "(x-2)*(x-3)/(x-1)^2", "x^4 - x"):
        f = parse_function(text)
        assert parse_function(format_function(f)) == f
    assert parse_point("inf") is INF
    assert parse_point("-7/2") == F(-7, 2)
    assert format_point(INF) == "inf"
    assert format_point(F(3, 4)) == "3/4"


def test_parse_function_rejects_bad_syntax():
    for bad in ("y + 1", "x**x", "import os", "x^(1/2)"):
        with pytest.raises(FunctionError):
            parse_function(bad)


def test_rational_function_arithmetic():
    x = RationalFunction.x()
    one = RationalFunction.const(1)
    f = (x - one) / (x + one)
    g = f * (x + one) / (x - one)
    assert g == one
    assert (f - f).is_zero()
    h = one / x
    assert h.laurent_coeff(F(0), -1) == 1
    assert h.laurent_coeff(F(0), 0) == 0
    expansion = parse_function("1/(1-x)")
    assert [expansion.laurent_coeff(F(0), k) for k in range(4)] == [1, 1, 1, 1]
