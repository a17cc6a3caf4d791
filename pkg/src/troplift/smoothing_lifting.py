"""Smoothability verdicts and the explicit divisor-lifting constructions.

The classifier applies, in order: failure of the weak glueing condition
(always decisive against smoothability); the residue-distinctness criterion
on strongly Brill-Noether general components (decisive for smoothability);
and, when every pair of adjacent vertices is joined by at most three edges
whose lengths admit a large enough d', the equivalence of smoothability with
the weak glueing condition for degrees up to d', with the expected-dimension
count rho = 0 as a glueing-free shortcut.

The lifting constructions build, for a rank-one divisor on a chain (at most
three edges per pair) or a vertex-avoiding divisor of any rank (at most two
edges per pair), an explicit pre-limit series with prescribed vanishing at
the marked points; every output is pushed through the condition (I) and weak
glueing checkers before it is returned.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm
from typing import Mapping, Sequence

from .divisors import (
    AdmissibleMultidegree,
    DivisorError,
    GraphDivisor,
    MetricDivisor,
    PLFunction,
    canonical_divisor,
    dhar_reduce,
    divisor_to_multidegree,
    metric_to_subdivided,
    rank as divisor_rank,
    subdivided_to_metric,
)
from .graph_core import (
    ChainStructure,
    ContractedTree,
    GraphError,
    Multigraph,
    SubdividedGraph,
    contract,
    genus,
    subdivide,
)
from .limit_series import (
    MetrizedComplexSeries,
    PreLimitSeries,
    SeriesError,
    UncertifiedRegime,
    check_condition_I,
    check_mc_weak_glueing,
    check_weak_glueing,
    realize,
)
from .p1_algebra import (
    INF,
    ConstantPool,
    FunctionSpace,
    GenericityError,
    MarkedComponent,
    Point,
    PointDivisor,
    RationalFunction,
    construct_function,
    distinct_values_at,
    nonconstant,
    Poly,
)
from .twisting import TightTuple, TwistingDivisorSeq, critical_indices, tight_tuple, twisting_divisors


class LiftError(ValueError):
    """Raised when a lifting construction's hypotheses fail."""


def expected_rho(g: int, r: int, d: int) -> int:
    """Expected dimension of the space of limit series: g + (r+1)(d-r-g)."""
    return g + (r + 1) * (d - r - g)


def _monoid_contains(target: int, lengths: Sequence[int]) -> bool:
    """Membership of ``target`` in the numerical monoid generated by lengths."""
    if target == 0:
        return True
    if not lengths:
        return False
    reach = {0}
    for n in lengths:
        new = set()
        for base in reach:
            t = base
            while t <= target:
                new.add(t)
                t += n
        reach = new
    return target in reach


def _fiber_bound(lengths: Sequence[int]) -> int:
    """Largest d' tolerated by one bundle of parallel edges.

    For each edge j, the smallest positive multiple of n_j that the other
    lengths can assemble gives the tightest floor-sum; the bound is the
    minimum over j, minus one.
    """
    best = None
    for j, nj in enumerate(lengths):
        others = [n for i, n in enumerate(lengths) if i != j]
        cap = nj
        for n in others:
            cap *= n
        t = nj
        while t <= cap and not _monoid_contains(t, others):
            t += nj
        floorsum = sum(t // n for n in lengths)
        best = floorsum if best is None else min(best, floorsum)
    return best - 1


def max_dprime(graph: Multigraph, chain: ChainStructure) -> int | None:
    """The largest d' satisfying the length condition, or None when unbounded.

    Single-edge bundles impose nothing; bundles of more than three edges are
    outside the theorem's hypotheses and are rejected.
    """
    best: int | None = None
    for (_, _), cls in graph.parallel_classes().items():
        if len(cls) > 3:
            raise LiftError("condition (I) violated: more than three parallel edges")
        if len(cls) < 2:
            continue
        bound = _fiber_bound([chain.length(e.id) for e in cls])
        best = bound if best is None else min(best, bound)
    return best


def check_condition_II(graph: Multigraph, chain: ChainStructure, d_prime: int) -> bool:
    """Whether every bundle's floor-sum bound exceeds ``d_prime``."""
    bound = max_dprime(graph, chain)
    return bound is None or d_prime <= bound


def check_residue_condition(
    data: AdmissibleMultidegree | MetricDivisor,
    graph: Multigraph,
    chain: ChainStructure,
) -> bool:
    """Distinctness of chip residues modulo the gcd of each bundle's lengths.

    Rational edge-reduced divisors are rescaled to integral ones first; an
    empty intersection with an edge counts as residue zero.
    """
    if isinstance(data, MetricDivisor):
        if not data.is_edge_reduced():
            raise DivisorError("residue condition needs an edge-reduced divisor")
        m = 1
        for _, pos, _ in data.edge:
            m = lcm(m, pos.denominator)
        scaled = data.scaled(m)
        positions = {eid: int(pos) for eid, pos, _ in scaled.edge}
        lengths = {e.id: m * chain.length(e.id) for e in graph.edges}
    else:
        data.validate(graph, chain)
        positions = dict(data.mu)
        lengths = {e.id: chain.length(e.id) for e in graph.edges}
    for (_, _), cls in graph.parallel_classes().items():
        if len(cls) < 2:
            continue
        g0 = gcd(*(lengths[e.id] for e in cls))
        residues = [positions.get(e.id, 0) % g0 for e in cls]
        if len(set(residues)) != len(residues):
            return False
    return True


@dataclass(frozen=True)
class ContextFlags:
    """Inputs the classifier cannot compute: the strong Brill-Noether
    generality assertion and an optional externally-supplied d'."""

    strongly_bn_general: bool = False
    d_prime: int | None = None


@dataclass(frozen=True)
class Verdict:
    verdict: str  # Smoothable | NotSmoothable | Inconclusive
    rule: str
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "rule": self.rule, "detail": self.detail}


def classify(mc: MetrizedComplexSeries, context: ContextFlags) -> Verdict:
    """Smoothability of a metrized-complex series of its own multidegree.

    A failed weak glueing condition is decisive against smoothability.  With
    strongly Brill-Noether general components, distinct residues are
    decisive for it; otherwise the bounded-length criterion applies for
    degrees up to d', with rho = 0 as a glueing-free fallback.
    """
    graph, chain = mc.graph, mc.chain
    w0 = divisor_to_multidegree(mc.gamma, graph, chain)
    g = genus(graph)
    d = mc.degree()
    r = mc.rank
    rho = expected_rho(g, r, d)
    detail = {"g": g, "d": d, "r": r, "rho": rho}

    glueing: bool | None
    try:
        glueing = check_mc_weak_glueing(mc)
    except UncertifiedRegime as exc:
        glueing = None
        detail["glueing"] = f"uncertified: {exc}"
    if glueing is not None:
        detail["weak_glueing"] = glueing
    if glueing is False:
        return Verdict("NotSmoothable", "thm4.5", detail)

    if context.strongly_bn_general and check_residue_condition(w0, graph, chain):
        detail["residues_distinct"] = True
        return Verdict("Smoothable", "thm4.3", detail)

    try:
        bound = max_dprime(graph, chain)
    except LiftError as exc:
        detail["hypotheses"] = str(exc)
        return Verdict("Inconclusive", "none", detail)
    d_prime = context.d_prime if context.d_prime is not None else bound
    if d_prime is not None and bound is not None and d_prime > bound:
        detail["hypotheses"] = f"d'={d_prime} exceeds the length bound {bound}"
        return Verdict("Inconclusive", "none", detail)
    degree_ok = d_prime is None or d <= d_prime
    detail["d_prime"] = d_prime
    if context.strongly_bn_general and degree_ok:
        if glueing is True:
            return Verdict("Smoothable", "thm4.8", detail)
        if rho == 0:
            return Verdict("Smoothable", "cor4.10", detail)
    return Verdict("Inconclusive", "none", detail)


# -- shared lifting helpers ---------------------------------------------------------

def default_markings(graph: Multigraph) -> dict[str, MarkedComponent]:
    """Integer marked points 0, 1, ... per vertex, in lex edge order."""
    out = {}
    for v in graph.vertices:
        edges = sorted(e.id for e in graph.incident(v))
        out[v] = MarkedComponent(v, {e: Fraction(k) for k, e in enumerate(edges)})
    return out


def _marking_pool(markings: Mapping[str, MarkedComponent]) -> ConstantPool:
    pool = ConstantPool()
    for comp in markings.values():
        pool.reserve(comp.all_points())
    return pool


@dataclass(frozen=True)
class ChainData:
    graph: Multigraph
    chain: ChainStructure
    tree: ContractedTree
    sub: SubdividedGraph
    order: tuple[str, ...]

    def edge_between(self, i: int) -> str:
        """Gbar edge id between order[i-1] and order[i]."""
        from .graph_core import gbar_edge_id

        return gbar_edge_id(self.order[i - 1], self.order[i])


def _chain_data(graph: Multigraph, chain: ChainStructure, max_parallel: int) -> ChainData:
    tree = contract(graph)
    if not tree.is_chain:
        raise LiftError("not a chain: the contracted graph must be a path")
    for (_, _), cls in graph.parallel_classes().items():
        if len(cls) > max_parallel:
            raise LiftError(
                f"at most {max_parallel} parallel edges are allowed, found {len(cls)}"
            )
    sub = subdivide(graph, chain)
    return ChainData(graph, chain, tree, sub, tree.chain_order())


def _reduced_w0(D: MetricDivisor, data: ChainData, v0: str) -> AdmissibleMultidegree:
    red, _ = dhar_reduce(metric_to_subdivided(D, data.sub), data.sub, v0)
    return divisor_to_multidegree(
        subdivided_to_metric(red, data.sub), data.graph, data.chain
    )


def _sequence(
    data: ChainData, tup: TightTuple, gbar_edge: str, v: str, top: int
) -> TwistingDivisorSeq:
    return twisting_divisors(
        tup.member(v), data.graph, data.chain, data.tree, gbar_edge, v, top
    )


def _filler_divisor(base: PointDivisor, filler: Sequence[Point]) -> PointDivisor:
    out = dict(base.coeffs)
    for p in filler:
        out[p] = out.get(p, 0) + 1
    return PointDivisor(out)


@dataclass(frozen=True)
class LiftResult:
    """Either a constructed pre-limit series or a Riemann-Roch bypass."""

    series: PreLimitSeries | None
    bypass: bool
    detail: dict = field(default_factory=dict)


def _verify_output(series: PreLimitSeries) -> None:
    ok, report = check_condition_I(series)
    if not ok:
        raise LiftError(f"constructed series violates the vanishing bound: {report}")
    glue = check_weak_glueing(series)
    if not glue.passed:
        raise LiftError(
            f"constructed series fails weak glueing at {[ (s.gbar_edge, s.j) for s in glue.failures() ]}"
        )


def lift_rank_one(
    D: MetricDivisor,
    graph: Multigraph,
    chain: ChainStructure,
    markings: Mapping[str, MarkedComponent] | None = None,
    attempts: int = 32,
) -> LiftResult:
    """Lift a rank-one integral edge-reduced divisor on a chain to a
    pre-limit series satisfying the weak glueing condition.

    Requires at most three parallel edges per pair and lengths accommodating
    d' = min(2g-2, g+1).  Degrees above 2g-2 bypass the construction: there
    the rank is forced on any lift by Riemann-Roch on both sides.
    """
    data = _chain_data(graph, chain, max_parallel=3)
    g = genus(graph)
    d_prime = min(2 * g - 2, g + 1)
    if not check_condition_II(graph, chain, d_prime):
        raise LiftError(f"hypotheses fail: edge lengths do not admit d'={d_prime}")
    if not (D.is_integral() and D.is_edge_reduced()):
        raise LiftError("divisor must be integral and edge-reduced")
    r = divisor_rank(D, data.sub)
    if r != 1:
        raise LiftError(f"rank != 1 (computed rank {r})")
    d = D.degree()
    if d > 2 * g - 2:
        return LiftResult(None, True, {"reason": "degree > 2g-2: Riemann-Roch forces equal ranks on the general fiber", "g": g, "d": d})
    if d > d_prime:
        raise LiftError(f"hypotheses fail: degree {d} exceeds d'={d_prime}")

    v0 = data.order[0]
    w0 = _reduced_w0(D, data, v0)
    tup = tight_tuple(w0, graph, chain, data.sub, data.tree)
    markings = dict(markings) if markings else default_markings(graph)
    pool = _marking_pool(markings)

    spaces: dict[str, FunctionSpace] = {}
    m = len(data.order) - 1
    for i, v in enumerate(data.order):
        comp = markings[v]
        left = data.edge_between(i) if i > 0 else None
        right = data.edge_between(i + 1) if i < m else None
        b_left = tup.b_at(left) if left else 0
        b_right = tup.b_at(right) if right else 0
        d_i = tup.member(v).w_at(v)
        left_fiber = tuple(sorted(data.tree.fibers[left])) if left else ()
        right_fiber = tuple(sorted(data.tree.fibers[right])) if right else ()

        orders: dict[Point, int] = {comp.point(e): 0 for e in left_fiber + right_fiber}
        base = PointDivisor({})
        predicates = [nonconstant()]
        if left and b_left > 0:
            formal = _sequence(data, tup, left, v, b_left).divisors[b_left]
            if i < m and b_right > 0:
                # both sides twist: poles against the bundle divisor on the left
                base = realize(formal, comp)
                for e, c in formal.items():
                    orders[comp.point(e)] = -c
            else:
                for e, c in formal.items():
                    orders[comp.point(e)] = c
        if right and b_right > 0:
            formal = _sequence(data, tup, right, v, b_right).divisors[b_right]
            for e, c in formal.items():
                orders[comp.point(e)] = c
        if left and b_left == 0 and len(left_fiber) > 1:
            predicates.append(distinct_values_at([comp.point(e) for e in left_fiber]))
        if right and b_right == 0 and len(right_fiber) > 1:
            predicates.append(distinct_values_at([comp.point(e) for e in right_fiber]))
        orders[INF] = 0

        surplus = sum(c for p, c in orders.items() if p is not INF)
        capacity = d_i - base.degree()
        if capacity < max(surplus, 0) or d_i < 0:
            raise LiftError(
                f"component {v!r} cannot host the construction: degree {d_i}, "
                f"bundle part {base.degree()}, surplus {surplus}"
            )
        f1 = None
        divisor_i = None
        for _ in range(attempts):
            filler = [pool.draw() for _ in range(capacity)]
            f_orders = dict(orders)
            for k in range(max(surplus, 0)):
                f_orders[filler[k]] = -1
            if all(c == 0 for c in f_orders.values()):
                if capacity == 0:
                    raise LiftError(f"component {v!r} has no room for a nonconstant section")
                f_orders[pool.draw()] = 1
                f_orders[filler[0]] = -1
            try:
                f1 = construct_function(f_orders, predicates, pool, extend=False)
            except GenericityError:
                continue
            divisor_i = _filler_divisor(base, filler)
            break
        if f1 is None:
            raise LiftError(f"no generic section found at component {v!r}")
        spaces[v] = FunctionSpace((RationalFunction(Poly([1])), f1), divisor_i)

    series = PreLimitSeries(
        graph, chain, tup, markings, spaces, rank=1, tree=data.tree, sub=data.sub
    )
    _verify_output(series)
    return LiftResult(series, False, {"g": g, "d": d, "d_prime": d_prime})


def compute_Dj(
    D: MetricDivisor,
    j: int,
    r: int,
    v0: str,
    vm: str,
    sub: SubdividedGraph,
) -> tuple[MetricDivisor, PLFunction]:
    """The representative D_j ~ D with D_j - j v0 - (r-j) vm effective.

    Computed by reducing D - (r-j) vm at v0 and adding the pile back; the
    witness satisfies D_j = D + div(f).  Existence is validated; uniqueness
    is part of the vertex-avoiding hypothesis.
    """
    Dg = metric_to_subdivided(D, sub).shift(vm, -(r - j))
    red, f = dhar_reduce(Dg, sub, v0)
    if not red.is_effective() or red.get(v0) < j:
        raise DivisorError(f"no effective representative for j={j}")
    return subdivided_to_metric(red.shift(vm, r - j), sub), f


def _find_critical_index(
    seq: TwistingDivisorSeq, b: int, target: Mapping[str, int], from_top: bool
) -> int | None:
    """The critical t <= b at which divisors[b]-divisors[t] (incoming) or
    divisors[t] (outgoing) equals ``target``.

    Criticals have strictly increasing divisors, so at most one matches; the
    boundary index b is admitted even when its own increment is empty, the
    cross identity n + m = b still polices it.
    """
    want = {e: c for e, c in target.items() if c}
    candidates = sorted({t for t in critical_indices(seq) if t <= b} | {b})
    for t in candidates:
        if from_top:
            diff = {
                e: c - seq.divisors[t].get(e, 0)
                for e, c in seq.divisors[b].items()
                if c != seq.divisors[t].get(e, 0)
            }
        else:
            diff = {e: c for e, c in seq.divisors[t].items() if c}
        if diff == want:
            return t
    return None


def lift_vertex_avoiding(
    D: MetricDivisor,
    r: int,
    graph: Multigraph,
    chain: ChainStructure,
    markings: Mapping[str, MarkedComponent] | None = None,
) -> PreLimitSeries:
    """Lift a vertex-avoiding divisor of rank r on a chain with at most two
    parallel edges per pair.

    The representatives D_j supply slope data at every vertex; the
    construction verifies the structural identities (each incoming chip
    pattern is a tail difference of twisting divisors at a critical index,
    each outgoing one a twisting divisor at a critical index, and mirrored
    indices sum to b) and fails loudly when the divisor is not vertex
    avoiding.
    """
    data = _chain_data(graph, chain, max_parallel=2)
    if not (D.is_integral() and D.is_edge_reduced()):
        raise LiftError("divisor must be integral and edge-reduced")
    v0, vm = data.order[0], data.order[-1]
    red_g, _ = dhar_reduce(metric_to_subdivided(D, data.sub), data.sub, v0)
    red = subdivided_to_metric(red_g, data.sub)
    got_rank = divisor_rank(red, data.sub)
    if got_rank != r:
        raise LiftError(f"rank mismatch: computed {got_rank}, requested {r}")

    witnesses: list[PLFunction] = []
    for j in range(r + 1):
        try:
            _, fj = compute_Dj(red, j, r, v0, vm, data.sub)
        except DivisorError as exc:
            raise LiftError(f"not vertex avoiding (D_{j} does not exist: {exc})") from exc
        witnesses.append(fj)

    w0 = divisor_to_multidegree(red, data.graph, data.chain)
    tup = tight_tuple(w0, graph, chain, data.sub, data.tree)
    markings = dict(markings) if markings else default_markings(graph)
    pool = _marking_pool(markings)

    spaces: dict[str, FunctionSpace] = {}
    m = len(data.order) - 1
    # per-vertex slope data and identity bookkeeping
    n_index: dict[tuple[int, int], int] = {}
    m_index: dict[tuple[int, int], int] = {}
    for i, v in enumerate(data.order):
        comp = markings[v]
        left = data.edge_between(i) if i > 0 else None
        right = data.edge_between(i + 1) if i < m else None
        b_left = tup.b_at(left) if left else 0
        b_right = tup.b_at(right) if right else 0
        d_i = tup.member(v).w_at(v)
        seq_left = _sequence(data, tup, left, v, b_left + 1) if left else None
        seq_right = _sequence(data, tup, right, v, b_right + 1) if right else None

        incoming: list[dict[str, int]] = []
        outgoing: list[dict[str, int]] = []
        for j in range(r + 1):
            fj = witnesses[j]
            D_ij = {}
            if left:
                for e in data.tree.fibers[left]:
                    s = fj.slope(e, v)
                    if s:
                        D_ij[e] = s
            E_ij = {}
            if right:
                for e in data.tree.fibers[right]:
                    s = -fj.slope(e, v)
                    if s:
                        E_ij[e] = s
            incoming.append(D_ij)
            outgoing.append(E_ij)
            if left:
                t = _find_critical_index(seq_left, b_left, D_ij, from_top=True)
                if t is None:
                    raise LiftError(
                        f"not vertex avoiding (incoming identity failed at {v!r}, j={j})"
                    )
                m_index[(i, j)] = t
            if right:
                t = _find_critical_index(seq_right, b_right, E_ij, from_top=False)
                if t is None:
                    raise LiftError(
                        f"not vertex avoiding (outgoing identity failed at {v!r}, j={j})"
                    )
                n_index[(i, j)] = t
        if len({tuple(sorted(d.items())) for d in incoming}) != r + 1 and left:
            raise LiftError(f"not vertex avoiding (incoming divisors collide at {v!r})")
        if len({tuple(sorted(d.items())) for d in outgoing}) != r + 1 and right:
            raise LiftError(f"not vertex avoiding (outgoing divisors collide at {v!r})")

        base = realize(seq_left.divisors[b_left], comp) if left else PointDivisor({})
        capacity = d_i - base.degree()
        surpluses = [
            sum(outgoing[j].values()) - sum(incoming[j].values()) for j in range(r + 1)
        ]
        if capacity < max([0] + surpluses) or d_i < 0:
            raise LiftError(
                f"component {v!r} cannot host the construction: degree {d_i}, "
                f"bundle part {base.degree()}"
            )
        filler = [pool.draw() for _ in range(capacity)]
        funcs = []
        for j in range(r + 1):
            orders: dict[Point, int] = {
                comp.point(e): 0
                for e in (data.tree.fibers[left] if left else ())
                + (data.tree.fibers[right] if right else ())
            }
            for e, c in incoming[j].items():
                orders[comp.point(e)] = -c
            for e, c in outgoing[j].items():
                orders[comp.point(e)] = c
            orders[INF] = 0
            for k in range(max(surpluses[j], 0)):
                orders[filler[k]] = -1
            funcs.append(construct_function(orders, (), pool, extend=True))
        try:
            spaces[v] = FunctionSpace(tuple(funcs), _filler_divisor(base, filler))
        except ValueError as exc:
            raise LiftError(f"sections at {v!r} are degenerate: {exc}") from exc

    for i in range(m):
        b_right = tup.b_at(data.edge_between(i + 1))
        for j in range(r + 1):
            if n_index.get((i, j), 0) + m_index.get((i + 1, j), 0) != b_right:
                raise LiftError(
                    f"not vertex avoiding (index identity n+m != b at edge {i + 1}, j={j})"
                )

    series = PreLimitSeries(
        graph, chain, tup, markings, spaces, rank=r, tree=data.tree, sub=data.sub
    )
    _verify_output(series)
    return series


@dataclass(frozen=True)
class DispatchPlan:
    route: str  # direct | dual | halving | inconclusive
    divisor: MetricDivisor | None
    detail: dict = field(default_factory=dict)


def lift_dispatch(
    D: MetricDivisor, graph: Multigraph, chain: ChainStructure
) -> DispatchPlan:
    """Route a divisor to a rank-one lift, to its Riemann-Roch dual, or to a
    halving search (genus 5, rank 2, degree 4); inconclusive otherwise."""
    sub = subdivide(graph, chain)
    g = genus(graph)
    r = divisor_rank(D, sub)
    if r <= 1:
        return DispatchPlan("direct", D, {"rank": r})
    K = canonical_divisor(sub)
    dual = K.sub(metric_to_subdivided(D, sub))
    r_dual = divisor_rank(dual, sub)
    if r_dual <= 1:
        return DispatchPlan(
            "dual", subdivided_to_metric(dual, sub), {"rank": r, "dual_rank": r_dual}
        )
    if g == 5 and r == 2 and D.degree() == 4:
        Dg = metric_to_subdivided(D, sub)
        verts = sub.graph.vertices
        for pair in itertools.combinations_with_replacement(verts, 2):
            half = GraphDivisor({})
            for v in pair:
                half = half.shift(v, 1)
            double = half.add(half)
            from .divisors import linearly_equivalent

            eq, _ = linearly_equivalent(double, Dg, sub)
            if eq and divisor_rank(half, sub) == 1:
                return DispatchPlan(
                    "halving", subdivided_to_metric(half, sub), {"rank": r}
                )
        return DispatchPlan("inconclusive", None, {"reason": "no rank-one half found"})
    return DispatchPlan(
        "inconclusive", None, {"rank": r, "dual_rank": r_dual, "g": g}
    )
