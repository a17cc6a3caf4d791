"""Pre-limit linear series, the weak glueing condition, and the bijection
with limit series on the associated metrized complex.

A pre-limit series assigns to every vertex a marked projective line, a twist
divisor of the right degree and an (r+1)-dimensional space of sections whose
multivanishing sequences along the twisting divisors satisfy the dual bound
at every contracted edge.  The weak glueing condition asks, at every critical
step, for equal-dimensional subspaces on the two sides of the edge whose
intersections with every torus orbit (support stratum of the increment
coordinates) match; by the nonemptiness reduction this is a finite exact
computation over Q once increments have at most three points.

The forgetful map to metrized-complex series and its inverse follow the
explicit divisor bookkeeping D_v = div0(s_v) - D^v_{w,w_v}; both directions
are implemented literally and are mutually inverse up to the natural
equivalence of pairs, which :func:`series_equivalent` and
:func:`mc_equivalent` decide with explicit witnesses.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from . import linalg
from .divisors import (
    AdmissibleMultidegree,
    DivisorError,
    MetricDivisor,
    dhar_reduce,
    divisor_to_multidegree,
    metric_to_subdivided,
    multidegree_to_divisor,
)
from .graph_core import ChainStructure, ContractedTree, Multigraph, SubdividedGraph, contract, subdivide
from .p1_algebra import (
    FunctionError,
    FunctionSpace,
    MarkedComponent,
    PointDivisor,
    RationalFunction,
    SectionError,
    div0,
    point_key,
    same_span,
    subspace_with_vanishing,
    leading_coeff_map,
)
from .twisting import (
    TightTuple,
    TwistingDivisorSeq,
    critical_indices,
    relative_twist_divisor,
    tight_tuple,
    twisting_divisors,
)


class SeriesError(ValueError):
    """Raised for malformed series data."""


class UncertifiedRegime(SeriesError):
    """Raised when a weak glueing increment has more than three points."""


def realize(formal: Mapping[str, int], component: MarkedComponent) -> PointDivisor:
    """Turn a formal divisor on edge ids into a point divisor on the component."""
    return PointDivisor({component.point(e): c for e, c in formal.items()})


@dataclass(frozen=True)
class PreLimitSeries:
    """Per-vertex spaces of sections taken with respect to a tight tuple."""

    graph: Multigraph
    chain: ChainStructure
    tuple: TightTuple
    components: Mapping[str, MarkedComponent]
    spaces: Mapping[str, FunctionSpace]
    rank: int
    tree: ContractedTree = field(compare=False, default=None)
    sub: SubdividedGraph = field(compare=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "tree", self.tree or contract(self.graph))
        object.__setattr__(self, "sub", self.sub or subdivide(self.graph, self.chain))
        for v in self.graph.vertices:
            if v not in self.spaces or v not in self.components:
                raise SeriesError(f"missing component data at vertex {v!r}")
            space = self.spaces[v]
            if space.dim != self.rank + 1:
                raise SeriesError(
                    f"space at {v!r} has dimension {space.dim}, expected {self.rank + 1}"
                )
            d_v = self.tuple.member(v).w_at(v)
            if space.divisor.degree() != d_v:
                raise SeriesError(
                    f"twist divisor at {v!r} has degree {space.divisor.degree()}, "
                    f"expected the local degree {d_v}"
                )

    def degree(self) -> int:
        return next(iter(self.tuple.w.values())).degree()


def extended_sequence(
    series_or_args,
    gbar_edge: str,
    v: str,
    *,
    min_top: int,
    degree_bound: int,
) -> TwistingDivisorSeq:
    """The twisting divisors for (gbar_edge, v), carried past ``min_top`` and
    until the total degree exceeds ``degree_bound``.

    The sequence is generated by the residue congruence itself, whose degree
    keeps growing, so no formal terminal divisor is ever needed.
    """
    s = series_or_args
    top = max(min_top, 1)
    while True:
        seq = twisting_divisors(
            s.tuple.member(v), s.graph, s.chain, s.tree, gbar_edge, v, top
        )
        if seq.degree(seq.top) > degree_bound:
            return seq
        top += 1


def multivanishing(
    V: FunctionSpace, seq: TwistingDivisorSeq, d: int, component: MarkedComponent
) -> tuple[int, ...]:
    """The multivanishing sequence a_0 <= ... <= a_r of V along seq.

    A value deg D_i appears dim(V(-D_i)/V(-D_{i+1})) times at each critical
    index i; the sequence must already extend past total degree ``d``.
    """
    if seq.degree(seq.top) <= d:
        raise SeriesError("sequence not extended past the series degree")
    values: list[int] = []
    prev_dim = V.dim
    for i in range(seq.top):
        if not seq.increment(i):
            continue
        nxt = subspace_with_vanishing(V, realize(seq.divisors[i + 1], component))
        values.extend([seq.degree(i)] * (prev_dim - nxt.dim))
        prev_dim = nxt.dim
        if prev_dim == 0:
            break
    values.sort()
    if len(values) != V.dim:
        raise SeriesError(
            f"multivanishing length {len(values)} != dim {V.dim}; "
            "sections fail to vanish terminally"
        )
    return tuple(values)


@dataclass(frozen=True)
class EdgeVanishingData:
    """Everything condition (I) and the glueing check need at one edge."""

    gbar_edge: str
    v: str
    vp: str
    b: int
    seq_v: TwistingDivisorSeq
    seq_vp: TwistingDivisorSeq
    a_v: tuple[int, ...]
    a_vp: tuple[int, ...]

    def critical_with_degree(self, side: str, a: int) -> int | None:
        seq = self.seq_v if side == "v" else self.seq_vp
        for j in sorted(critical_indices(seq)):
            if seq.degree(j) == a:
                return j
        return None


def _edge_data(series: PreLimitSeries, gbar_edge: str) -> EdgeVanishingData:
    e = series.tree.graph.edge(gbar_edge)
    v, vp = e.tail, e.head
    b = series.tuple.b_at(gbar_edge)
    d_v = series.tuple.member(v).w_at(v)
    d_vp = series.tuple.member(vp).w_at(vp)
    seq_v = extended_sequence(series, gbar_edge, v, min_top=b + 1, degree_bound=d_v)
    seq_vp = extended_sequence(series, gbar_edge, vp, min_top=b + 1, degree_bound=d_vp)
    a_v = multivanishing(series.spaces[v], seq_v, d_v, series.components[v])
    a_vp = multivanishing(series.spaces[vp], seq_vp, d_vp, series.components[vp])
    return EdgeVanishingData(gbar_edge, v, vp, b, seq_v, seq_vp, a_v, a_vp)


def check_condition_I(series: PreLimitSeries) -> tuple[bool, dict]:
    """The dual multivanishing bound at every contracted edge.

    For every l with a_l^{e,v} = deg D_j^{e,v} at a critical j <= b the bound
    a_{r-l}^{e,v'} >= deg D_{b-j}^{e,v'} must hold, and symmetrically.
    Critical indices beyond b impose nothing (their mirror index would be
    negative, where the divisors vanish).
    """
    r = series.rank
    report: dict = {}
    ok_all = True
    for e in series.tree.graph.edges:
        data = _edge_data(series, e.id)
        entry = {
            "b": data.b,
            "a": {data.v: list(data.a_v), data.vp: list(data.a_vp)},
            "violations": [],
        }
        for side, a_here, a_there, seq_here, seq_there in (
            ("v", data.a_v, data.a_vp, data.seq_v, data.seq_vp),
            ("vp", data.a_vp, data.a_v, data.seq_vp, data.seq_v),
        ):
            vertex = data.v if side == "v" else data.vp
            for l, a in enumerate(a_here):
                j = data.critical_with_degree(side, a)
                if j is None or j > data.b:
                    continue
                bound = seq_there.degree(data.b - j)
                if a_there[r - l] < bound:
                    ok_all = False
                    entry["violations"].append(
                        {
                            "vertex": vertex,
                            "l": l,
                            "j": j,
                            "required": bound,
                            "got": a_there[r - l],
                        }
                    )
        report[e.id] = entry
    return ok_all, report


def orbit_pattern(rows: Sequence[Sequence[Fraction]], width: int | None = None) -> set[frozenset[int]]:
    """Supports realised by nonzero vectors of the row space of ``rows``.

    A support I is achieved iff U meets the coordinate subspace of I in a
    strictly larger space than every U ∩ κ^{I∖{i}}; over an infinite field a
    finite union of proper subspaces cannot cover a subspace.
    """
    basis, _ = linalg.rref([list(r) for r in rows])
    if not basis:
        return set()
    m = width if width is not None else len(basis[0])

    def dim_in(I: frozenset[int]) -> int:
        constraints = [[row[j] for row in basis] for j in range(m) if j not in I]
        return len(basis) - linalg.rank(constraints)

    dims = {
        frozenset(I): dim_in(frozenset(I))
        for k in range(m + 1)
        for I in itertools.combinations(range(m), k)
    }
    out = set()
    for I, d in dims.items():
        if d >= 1 and all(dims[I - {i}] < d for i in I):
            out.add(I)
    return out


def _stratum_basis(rows: list[list[Fraction]], I: frozenset[int], m: int) -> list[list[Fraction]]:
    """Basis of U ∩ κ^I as vectors of length m."""
    basis, _ = linalg.rref(rows)
    if not basis:
        return []
    constraints = [[row[j] for row in basis] for j in range(m) if j not in I]
    coeffs = linalg.nullspace(constraints, ncols=len(basis))
    out = []
    for c in coeffs:
        vec = [sum(ci * row[j] for ci, row in zip(c, basis)) for j in range(m)]
        out.append(vec)
    return out


def achievable_patterns(
    rows: Sequence[Sequence[Fraction]], g: int, m: int
) -> set[frozenset[frozenset[int]]]:
    """All orbit-pattern sets of g-dimensional subspaces of the row space.

    Exact for g equal to 0, 1 or the full dimension.  In the remaining case
    (g = dim - 1, arising only for m = 3 here) candidate subspaces are
    enumerated as kernels of functionals over a deterministic coefficient
    grid together with spans of stratum vectors, each candidate scored
    exactly; the grid covers every cell of the small coordinate-subspace
    arrangement occurring in this regime.
    """
    basis, _ = linalg.rref([list(r) for r in rows])
    u = len(basis)
    if g == 0 or u == 0:
        return {frozenset()} if g == 0 else set()
    if g > u:
        return set()
    if g == u:
        return {frozenset(orbit_pattern(basis, m))}
    if g == 1:
        return {frozenset({I}) for I in orbit_pattern(basis, m)}

    candidates: list[list[list[Fraction]]] = []
    vecs: list[list[Fraction]] = []
    for k in range(m + 1):
        for I in itertools.combinations(range(m), k):
            vecs.extend(_stratum_basis(basis, frozenset(I), m))
    mults = [Fraction(1), Fraction(2), Fraction(3), Fraction(5), Fraction(-1)]
    for a, b in itertools.combinations(range(len(vecs)), 2):
        for t in mults:
            w2 = [x + t * y for x, y in zip(vecs[a], vecs[b])]
            candidates.append([vecs[a], w2])
        candidates.append([vecs[a], vecs[b]])
    if u == g + 1:
        # kernels of functionals on U over a coefficient grid
        grid = range(-5, 6)
        for coeffs in itertools.product(grid, repeat=u):
            if all(c == 0 for c in coeffs):
                continue
            constraint = [[Fraction(c) for c in coeffs]]
            ker = linalg.nullspace(constraint, ncols=u)
            cand = [
                [sum(ci * row[j] for ci, row in zip(kv, basis)) for j in range(m)]
                for kv in ker
            ]
            candidates.append(cand)
    out = set()
    for cand in candidates:
        red, _ = linalg.rref(cand)
        if len(red) != g:
            continue
        out.add(frozenset(orbit_pattern(red, m)))
    return out


@dataclass(frozen=True)
class GlueingStratum:
    gbar_edge: str
    j: int
    g_j: int
    points: tuple[str, ...]
    trivial: bool
    ok: bool
    patterns_v: tuple = ()
    patterns_vp: tuple = ()
    witness: tuple = ()


@dataclass(frozen=True)
class WeakGlueingReport:
    passed: bool
    strata: tuple[GlueingStratum, ...]

    def failures(self) -> tuple[GlueingStratum, ...]:
        return tuple(s for s in self.strata if not s.ok)

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "strata": [
                {
                    "edge": s.gbar_edge,
                    "j": s.j,
                    "g_j": s.g_j,
                    "points": list(s.points),
                    "trivial": s.trivial,
                    "ok": s.ok,
                    "witness": [sorted(sorted(i) for i in pat) for pat in s.witness],
                }
                for s in self.strata
            ],
        }


def _image_rows(
    V: FunctionSpace,
    seq: TwistingDivisorSeq,
    j: int,
    component: MarkedComponent,
    edge_order: Sequence[str],
) -> list[list[Fraction]]:
    Dj = realize(seq.divisors[j], component)
    sub = subspace_with_vanishing(V, Dj)
    points = [component.point(e) for e in edge_order]
    return leading_coeff_map(sub, Dj, points)


def check_weak_glueing(series: PreLimitSeries) -> WeakGlueingReport:
    """Decide the weak glueing condition stratum by stratum.

    At a critical j with multiplicity count g_j >= 1, subspaces of dimension
    g_j must exist on both sides whose torus-orbit patterns agree under the
    marked-point identification; strata with g_j equal to the increment
    degree are trivially satisfied, and strata with g_j = 0 impose nothing.
    Increments with more than three points are out of the certified regime.
    """
    r = series.rank
    strata: list[GlueingStratum] = []
    passed = True
    for e in series.tree.graph.edges:
        data = _edge_data(series, e.id)
        for j in sorted(critical_indices(data.seq_v)):
            if j > data.b:
                continue
            deg_j = data.seq_v.degree(j)
            deg_mirror = data.seq_vp.degree(data.b - j)
            g_j = sum(
                1
                for l in range(r + 1)
                if data.a_v[l] == deg_j and data.a_vp[r - l] == deg_mirror
            )
            if g_j == 0:
                continue
            inc_v = data.seq_v.increment(j)
            inc_vp = data.seq_vp.increment(data.b - j)
            if set(inc_v) != set(inc_vp):
                raise SeriesError(
                    f"mirrored increments disagree at edge {e.id!r}, j={j}"
                )
            edge_order = tuple(sorted(inc_v))
            m = len(edge_order)
            if g_j == m:
                strata.append(
                    GlueingStratum(e.id, j, g_j, edge_order, trivial=True, ok=True)
                )
                continue
            if m > 3:
                raise UncertifiedRegime(
                    f"increment at edge {e.id!r}, j={j} has {m} > 3 points"
                )
            rows_v = _image_rows(
                series.spaces[data.v], data.seq_v, j, series.components[data.v], edge_order
            )
            rows_vp = _image_rows(
                series.spaces[data.vp],
                data.seq_vp,
                data.b - j,
                series.components[data.vp],
                edge_order,
            )
            pats_v = achievable_patterns(rows_v, g_j, m)
            pats_vp = achievable_patterns(rows_vp, g_j, m)
            common = pats_v & pats_vp
            ok = bool(common)
            passed = passed and ok
            witness = tuple(sorted(common, key=_pattern_sort_key)[:1])
            strata.append(
                GlueingStratum(
                    e.id,
                    j,
                    g_j,
                    edge_order,
                    trivial=False,
                    ok=ok,
                    patterns_v=tuple(sorted(pats_v, key=_pattern_sort_key)),
                    patterns_vp=tuple(sorted(pats_vp, key=_pattern_sort_key)),
                    witness=witness,
                )
            )
    return WeakGlueingReport(passed, tuple(strata))


def _pattern_sort_key(pattern: frozenset[frozenset[int]]):
    return sorted(sorted(i) for i in pattern)


# -- the forgetful map and its inverse --------------------------------------------

@dataclass(frozen=True)
class MetrizedComplexSeries:
    """A divisor on the metrized complex plus per-component function spaces."""

    graph: Multigraph
    chain: ChainStructure
    components: Mapping[str, MarkedComponent]
    gamma: MetricDivisor
    parts: Mapping[str, PointDivisor]
    functions: Mapping[str, tuple[RationalFunction, ...]]

    def __post_init__(self):
        dims = {len(fs) for fs in self.functions.values()}
        if len(dims) != 1:
            raise SeriesError("component spaces have unequal dimensions")
        for v in self.graph.vertices:
            part = self.parts.get(v, PointDivisor({}))
            if part.degree() != self.gamma.vertex.get(v, 0):
                raise SeriesError(
                    f"component part at {v!r} has degree {part.degree()} but the "
                    f"underlying divisor carries {self.gamma.vertex.get(v, 0)}"
                )

    @property
    def rank(self) -> int:
        return len(next(iter(self.functions.values()))) - 1

    def degree(self) -> int:
        return self.gamma.degree()


def forgetful_map(
    series: PreLimitSeries, w: AdmissibleMultidegree
) -> MetrizedComplexSeries:
    """Map a pre-limit series to its metrized-complex series at multidegree w.

    The first basis section of each space plays the role of s_v; the output
    is independent of that choice up to the natural equivalence.
    """
    parts = {}
    functions = {}
    for v in series.graph.vertices:
        space = series.spaces[v]
        s_v = space.basis[0]
        rel = relative_twist_divisor(
            w, series.tuple.member(v), series.graph, series.chain, series.sub, v
        )
        parts[v] = div0(s_v, space.divisor).sub(realize(rel, series.components[v]))
        functions[v] = tuple(s / s_v for s in space.basis)
    gamma = multidegree_to_divisor(w, series.graph, series.chain)
    return MetrizedComplexSeries(
        series.graph, series.chain, dict(series.components), gamma, parts, functions
    )


def inverse_forgetful(
    mc: MetrizedComplexSeries, tup: TightTuple | None = None
) -> PreLimitSeries:
    """Reconstruct the pre-limit series over a tight tuple.

    The twist divisor at v is D_v + D^v_{w0,w_v}; the component functions are
    re-validated as sections of it and any failure is reported as malformed
    input.
    """
    try:
        w0 = divisor_to_multidegree(mc.gamma, mc.graph, mc.chain)
    except DivisorError as exc:
        raise SeriesError(f"underlying divisor is not admissible: {exc}") from exc
    sub = subdivide(mc.graph, mc.chain)
    tup = tup or tight_tuple(w0, mc.graph, mc.chain, sub)
    spaces = {}
    for v in mc.graph.vertices:
        rel = relative_twist_divisor(
            w0, tup.member(v), mc.graph, mc.chain, sub, v
        )
        divisor = mc.parts.get(v, PointDivisor({})).add(realize(rel, mc.components[v]))
        try:
            spaces[v] = FunctionSpace(mc.functions[v], divisor)
        except SectionError as exc:
            raise SeriesError(
                f"H_{v} is not contained in the sections of the reconstructed bundle: {exc}"
            ) from exc
    return PreLimitSeries(
        mc.graph, mc.chain, tup, dict(mc.components), spaces, mc.rank, sub=sub
    )


def check_mc_weak_glueing(
    mc: MetrizedComplexSeries, tup: TightTuple | None = None
) -> bool:
    """Weak glueing for a metrized-complex series, via the inverse map.

    The verdict does not depend on the tight tuple used.  Raises when the
    reconstructed tuple is not even a pre-limit series (the input was not a
    limit series of its multidegree).
    """
    series = inverse_forgetful(mc, tup)
    ok, report = check_condition_I(series)
    if not ok:
        raise SeriesError(
            f"input fails the multivanishing bound; not a limit series: {report}"
        )
    return check_weak_glueing(series).passed


# -- equivalence ---------------------------------------------------------------

def function_with_divisor(delta: PointDivisor) -> RationalFunction:
    """A rational function with div(f) = delta (degree 0, order at infinity
    implied); raises when the degree is nonzero."""
    if delta.degree() != 0:
        raise SeriesError("only degree-zero divisors are principal")
    from .p1_algebra import INF, Poly

    f = RationalFunction(Poly([1]))
    for p, c in delta.coeffs.items():
        if p is INF:
            continue
        lin = RationalFunction(Poly([-p, 1]))
        for _ in range(abs(c)):
            f = f * lin if c > 0 else f / lin
    # the order at infinity is forced to match because deg(delta) = 0
    return f


def series_equivalent(s1: PreLimitSeries, s2: PreLimitSeries) -> bool:
    """Equality of pre-limit series up to twisting each bundle by a principal
    divisor and rescaling the section space accordingly."""
    if s1.tuple.w != s2.tuple.w or s1.rank != s2.rank:
        return False
    for v in s1.graph.vertices:
        delta = s2.spaces[v].divisor.sub(s1.spaces[v].divisor)
        if delta.degree() != 0:
            return False
        g = function_with_divisor(delta)
        moved = [s / g for s in s1.spaces[v].basis]
        if not same_span(moved, list(s2.spaces[v].basis)):
            return False
    return True


def mc_equivalent(mc1: MetrizedComplexSeries, mc2: MetrizedComplexSeries) -> bool:
    """Equivalence of metrized-complex series: a common rational function
    moves one underlying divisor to the other and rescales each H_v."""
    if mc1.degree() != mc2.degree() or mc1.rank != mc2.rank:
        return False
    sub = subdivide(mc1.graph, mc1.chain)
    D1 = metric_to_subdivided(mc1.gamma, sub)
    D2 = metric_to_subdivided(mc2.gamma, sub)
    q = sub.base.vertices[0]
    R1, f1 = dhar_reduce(D1, sub, q)
    R2, f2 = dhar_reduce(D2, sub, q)
    if R1 != R2:
        return False
    f = f1.add(f2.neg())  # gamma2 = gamma1 + div(f)
    for v in mc1.graph.vertices:
        slopes = PointDivisor(
            {
                mc1.components[v].point(e.id): f.slope(e.id, v)
                for e in mc1.graph.incident(v)
            }
        )
        delta = mc2.parts.get(v, PointDivisor({})).sub(
            mc1.parts.get(v, PointDivisor({}))
        ).sub(slopes)
        if delta.degree() != 0:
            return False
        g = function_with_divisor(delta)
        moved = [h / g for h in mc1.functions[v]]
        if not same_span(moved, list(mc2.functions[v])):
            return False
    return True


def normalize_mc(mc: MetrizedComplexSeries) -> MetrizedComplexSeries:
    """Push the underlying divisor to its reduced form at the lex-least
    vertex and put every function basis in reduced row echelon form."""
    sub = subdivide(mc.graph, mc.chain)
    D = metric_to_subdivided(mc.gamma, sub)
    q = sub.base.vertices[0]
    red, f = dhar_reduce(D, sub, q)
    from .divisors import subdivided_to_metric

    gamma = subdivided_to_metric(red, sub)
    parts = {}
    for v in mc.graph.vertices:
        slopes = PointDivisor(
            {
                mc.components[v].point(e.id): f.slope(e.id, v)
                for e in mc.graph.incident(v)
            }
        )
        parts[v] = mc.parts.get(v, PointDivisor({})).add(slopes)
    functions = {v: _rref_basis(fs) for v, fs in mc.functions.items()}
    return MetrizedComplexSeries(
        mc.graph, mc.chain, dict(mc.components), gamma, parts, functions
    )


def _rref_basis(funcs: Sequence[RationalFunction]) -> tuple[RationalFunction, ...]:
    from .p1_algebra import Poly, _coefficient_matrix

    rows = _coefficient_matrix(list(funcs))
    red, _ = linalg.rref(rows)
    common = Poly([1])
    for f in funcs:
        g = common.gcd(f.den)
        common = common.divmod(g)[0] * f.den
    return tuple(RationalFunction(Poly(row), common) for row in red)
